#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fledge/protocol.hpp"

namespace fledge {

/// Thin RAII wrapper over a connected TCP socket.
class TcpStream {
public:
    explicit TcpStream(int fd) : fd_(fd) {}
    TcpStream(TcpStream&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    TcpStream& operator=(TcpStream&& other) noexcept;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;
    ~TcpStream();

    bool valid() const { return fd_ >= 0; }
    void close();

    void write_all(const uint8_t* data, size_t len);

    /// True on success; false on clean EOF before the first byte.
    /// Throws IoError on mid-read EOF or socket error.
    bool read_exact(uint8_t* data, size_t len);

private:
    int fd_ = -1;
};

class TcpListener {
public:
    /// Binds 127.0.0.1; port 0 picks an ephemeral port.
    explicit TcpListener(uint16_t port);
    ~TcpListener();
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    uint16_t port() const { return port_; }
    TcpStream accept_client();
    void close();

private:
    int fd_ = -1;
    uint16_t port_ = 0;
};

TcpStream tcp_connect(const std::string& host, uint16_t port);

/// Length-prefixed frame transport over a stream.
void write_frame(TcpStream& s, const RpcMessage& m);

/// Empty on clean EOF at a frame boundary; throws FramingError/IoError on a
/// torn frame.
std::optional<RpcMessage> read_frame(TcpStream& s);

} // namespace fledge
