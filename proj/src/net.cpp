#include "fledge/net.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include "fledge/errors.hpp"

namespace fledge {

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

TcpStream::~TcpStream() { close(); }

void TcpStream::close() {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        fd_ = -1;
    }
}

void TcpStream::write_all(const uint8_t* data, size_t len) {
    size_t sent = 0;
    while (sent < len) {
        ssize_t n = ::send(fd_, data + sent, len - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IoError(std::string("send: ") + std::strerror(errno));
        }
        sent += static_cast<size_t>(n);
    }
}

bool TcpStream::read_exact(uint8_t* data, size_t len) {
    size_t got = 0;
    while (got < len) {
        ssize_t n = ::recv(fd_, data + got, len - got, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IoError(std::string("recv: ") + std::strerror(errno));
        }
        if (n == 0) {
            if (got == 0) return false; // clean EOF
            throw IoError("connection closed mid-message");
        }
        got += static_cast<size_t>(n);
    }
    return true;
}

TcpListener::TcpListener(uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        throw IoError(std::string("bind: ") + std::strerror(errno));
    }
    if (::listen(fd_, 16) < 0) throw IoError(std::string("listen: ") + std::strerror(errno));
    socklen_t len = sizeof(addr);
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) < 0) {
        throw IoError(std::string("getsockname: ") + std::strerror(errno));
    }
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

TcpStream TcpListener::accept_client() {
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw IoError(std::string("accept: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return TcpStream(fd);
}

TcpStream tcp_connect(const std::string& host, uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw IoError("bad address '" + host + "'");
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        int err = errno;
        ::close(fd);
        throw IoError(std::string("connect: ") + std::strerror(err));
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return TcpStream(fd);
}

void write_frame(TcpStream& s, const RpcMessage& m) {
    std::vector<uint8_t> bytes = encode_frame(m);
    s.write_all(bytes.data(), bytes.size());
}

std::optional<RpcMessage> read_frame(TcpStream& s) {
    uint8_t prefix[4];
    if (!s.read_exact(prefix, 4)) return std::nullopt;
    uint32_t body_len = (static_cast<uint32_t>(prefix[0]) << 24) |
                        (static_cast<uint32_t>(prefix[1]) << 16) |
                        (static_cast<uint32_t>(prefix[2]) << 8) | static_cast<uint32_t>(prefix[3]);
    constexpr uint32_t kMaxFrame = 256u << 20;
    if (body_len > kMaxFrame) throw FramingError("frame length exceeds sanity limit");
    std::vector<uint8_t> frame(4 + body_len);
    std::memcpy(frame.data(), prefix, 4);
    if (body_len > 0 && !s.read_exact(frame.data() + 4, body_len)) {
        throw FramingError("connection closed mid-frame");
    }
    return decode_frame(frame);
}

} // namespace fledge
