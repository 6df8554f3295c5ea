#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <openssl/err.h>
#include <openssl/ssl.h>
#include <openssl/x509.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include <atomic>
#include <cerrno>
#include <memory>
#include <thread>

#include "ctphish/dataset/builder.hpp"
#include "ctphish/errors.hpp"
#include "ctphish/intel/feeds.hpp"

namespace ctphish::dataset {

namespace {

struct Fd {
    int fd = -1;
    ~Fd() {
        if (fd >= 0) ::close(fd);
    }
};

std::optional<int> url_port(std::string_view url) {
    auto scheme = url.find("://");
    auto rest = scheme == std::string_view::npos ? url : url.substr(scheme + 3);
    auto authority = rest.substr(0, rest.find_first_of("/?#"));
    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority = authority.substr(at + 1);
    auto colon = authority.rfind(':');
    auto bracket = authority.rfind(']');
    if (colon == std::string_view::npos || (bracket != std::string_view::npos && colon < bracket)) return std::nullopt;
    try {
        return std::stoi(std::string(authority.substr(colon + 1)));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

int connect_with_timeout(const std::string& host, int port, std::chrono::milliseconds timeout) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) return -1;
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);
    for (auto* ai = res; ai; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
        if (fd < 0) continue;
        int flags = ::fcntl(fd, F_GETFL, 0);
        ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
        int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
        if (rc != 0 && errno == EINPROGRESS) {
            pollfd p{fd, POLLOUT, 0};
            rc = ::poll(&p, 1, static_cast<int>(timeout.count())) == 1 ? 0 : -1;
            if (rc == 0) {
                int err = 0;
                socklen_t len = sizeof err;
                ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
                rc = err == 0 ? 0 : -1;
            }
        }
        if (rc == 0) {
            ::fcntl(fd, F_SETFL, flags);
            timeval tv{static_cast<time_t>(timeout.count() / 1000), static_cast<suseconds_t>((timeout.count() % 1000) * 1000)};
            ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
            ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
            return fd;
        }
        ::close(fd);
    }
    return -1;
}

bool is_ip(const std::string& host) {
    in6_addr buf;
    return ::inet_pton(AF_INET, host.c_str(), &buf) == 1 || ::inet_pton(AF_INET6, host.c_str(), &buf) == 1;
}

TlsFetchResult attempt(const std::string& host, int port, const TlsFetchOptions& options) {
    TlsFetchResult out;
    out.host = host;
    Fd sock{connect_with_timeout(options.connect_host.empty() ? host : options.connect_host, port, options.timeout)};
    if (sock.fd < 0) {
        out.failure = "ConnectFailed";
        return out;
    }
    std::unique_ptr<SSL_CTX, decltype(&SSL_CTX_free)> ctx(SSL_CTX_new(TLS_client_method()), SSL_CTX_free);
    if (!ctx) {
        out.failure = "HandshakeFailed";
        return out;
    }
    SSL_CTX_set_verify(ctx.get(), SSL_VERIFY_NONE, nullptr);
    std::unique_ptr<SSL, decltype(&SSL_free)> ssl(SSL_new(ctx.get()), SSL_free);
    SSL_set_fd(ssl.get(), sock.fd);
    if (!is_ip(host)) SSL_set_tlsext_host_name(ssl.get(), host.c_str());
    if (SSL_connect(ssl.get()) != 1) {
        ERR_clear_error();
        out.failure = "HandshakeFailed";
        return out;
    }
    X509* peer = SSL_get1_peer_certificate(ssl.get());
    if (!peer) {
        out.failure = "HandshakeFailed";
        return out;
    }
    unsigned char* der = nullptr;
    int len = i2d_X509(peer, &der);
    X509_free(peer);
    SSL_shutdown(ssl.get());
    if (len <= 0) {
        out.failure = "HandshakeFailed";
        return out;
    }
    Bytes bytes(der, der + len);
    OPENSSL_free(der);
    try {
        out.record = cert::parse_der(bytes, utc_now(), std::nullopt);
    } catch (const MalformedDer&) {
        out.failure = "HandshakeFailed";
    }
    return out;
}

}  // namespace

TlsFetchResult fetch_malicious_cert(const std::string& url, const TlsFetchOptions& options) {
    auto host = intel::host_of_url(url);
    if (!host) return {std::nullopt, "BadUrl", {}};
    int port = options.port.value_or(url_port(url).value_or(443));
    TlsFetchResult r;
    for (int i = 0; i < std::max(1, options.attempts); ++i) {
        r = attempt(*host, port, options);
        if (r.record) return r;
    }
    spdlog::info("no certificate for {}: {}", url, r.failure);
    return r;
}

std::vector<TlsFetchResult> fetch_malicious_certs(const std::vector<std::string>& urls,
                                                  const TlsFetchOptions& options, std::size_t workers) {
    std::vector<TlsFetchResult> out(urls.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < urls.size();) out[i] = fetch_malicious_cert(urls[i], options);
    };
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::max<std::size_t>(1, std::min(workers, urls.size())); ++w) pool.emplace_back(work);
    return out;
}

}  // namespace ctphish::dataset
