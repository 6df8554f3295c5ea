#include <doctest.h>

#include <random>
#include <stdexcept>

#include "ctphish/data.hpp"
#include "ctphish/util/bytes.hpp"
#include "ctphish/util/time.hpp"
#include "support/sha256_oracle.hpp"

using namespace ctphish;

TEST_CASE("sha256 matches FIPS vector and the independent oracle") {
    auto d = sha256(as_bytes("abc"));
    CHECK(to_hex(d) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    std::mt19937 rng(3);
    for (int i = 0; i < 200; ++i) {
        std::string s(rng() % 300, '\0');
        for (char& c : s) c = static_cast<char>(rng() & 0xff);
        auto a = sha256(as_bytes(s));
        auto b = oracle::sha256(s);
        REQUIRE(std::equal(a.begin(), a.end(), b.begin()));
    }
}

TEST_CASE("hex and base64 round trip") {
    std::mt19937 rng(11);
    for (int i = 0; i < 100; ++i) {
        Bytes b(rng() % 64);
        for (auto& x : b) x = static_cast<std::uint8_t>(rng());
        CHECK(from_hex(to_hex(b)) == b);
        CHECK(base64_decode(base64_encode(b)) == b);
    }
    CHECK(base64_decode("aGVsbG8=") == Bytes{'h', 'e', 'l', 'l', 'o'});
    CHECK(base64_decode("aGVsbG8") == Bytes{'h', 'e', 'l', 'l', 'o'});
    CHECK_THROWS_AS(base64_decode("a$b="), std::invalid_argument);
    CHECK_THROWS(from_hex("abc"));
}

TEST_CASE("rfc3339 formatting and parsing") {
    auto t = parse_rfc3339("2020-05-01T00:00:00Z");
    CHECK(to_unix_ms(t) == 1588291200000);
    CHECK(format_rfc3339(t) == "2020-05-01T00:00:00Z");
    CHECK(parse_rfc3339("2020-05-01") == t);
    CHECK(parse_rfc3339("2020-05-01T02:00:00+02:00") == t);
    CHECK(format_rfc3339(t + std::chrono::milliseconds(5)) == "2020-05-01T00:00:00.005Z");
    CHECK(parse_rfc3339("2020-05-01T00:00:00.005Z") == t + std::chrono::milliseconds(5));
    CHECK_THROWS(parse_rfc3339("2020-13-01"));
    CHECK_THROWS(parse_rfc3339("yesterday"));
}

TEST_CASE("durations") {
    CHECK(parse_duration("1h") == std::chrono::hours(1));
    CHECK(parse_duration("12h") == std::chrono::hours(12));
    CHECK(parse_duration("90") == std::chrono::seconds(90));
    CHECK(format_duration(std::chrono::hours(12)) == "12h");
    CHECK_THROWS(parse_duration("1y"));
}

TEST_CASE("data lines strip comments and blanks") {
    auto lines = data::lines("# header\n a \n\nb # trailing\n");
    CHECK(lines == std::vector<std::string>{"a", "b"});
    CHECK(data::lines(data::load("keywords.txt")).size() == 47);
}
