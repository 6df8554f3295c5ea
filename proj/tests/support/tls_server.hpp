#pragma once

#include <atomic>
#include <mutex>
#include <string>
#include <thread>

#include "ctphish/util/bytes.hpp"

namespace testfx {

/// Loopback TLS server presenting one certificate. Any HTTP request it
/// receives is answered with a redirect, and the bytes are counted.
class TlsServer {
public:
    TlsServer(const ctphish::Bytes& cert_der, const std::string& key_pem);
    ~TlsServer();

    int port() const { return port_; }
    std::size_t handshakes() const { return handshakes_; }
    std::size_t app_bytes() const { return app_bytes_; }
    std::string last_sni() const;

private:
    void run();

    void* ctx_ = nullptr;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> stop_{false};
    std::atomic<std::size_t> handshakes_{0};
    std::atomic<std::size_t> app_bytes_{0};
    std::string sni_;
    mutable std::mutex sni_mu_;
    std::thread thread_;
};

/// Accepts TCP connections and closes them immediately.
class PlainServer {
public:
    PlainServer();
    ~PlainServer();
    int port() const { return port_; }

private:
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> stop_{false};
    std::thread thread_;
};

}  // namespace testfx
