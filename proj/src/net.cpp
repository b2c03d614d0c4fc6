/*
 * Copyright (c) 2026 The gridlet authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gridlet/net.hpp"

#include <arpa/inet.h>
#include <errno.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <string.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fmt/format.h>

#include "gridlet/errors.hpp"
#include "gridlet/util.hpp"

namespace gridlet::net {

namespace {

[[noreturn]] void throw_down(const std::string& what) {
    throw Error(ErrorKind::GatewayDown, what);
}

}  // namespace

Conn::~Conn() { close(); }

Conn::Conn(Conn&& other) noexcept : fd_(other.fd_), buf_(std::move(other.buf_)), pos_(other.pos_) {
    other.fd_ = -1;
}

Conn& Conn::operator=(Conn&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        buf_ = std::move(other.buf_);
        pos_ = other.pos_;
        other.fd_ = -1;
    }
    return *this;
}

void Conn::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Conn::interrupt() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Conn Conn::connect(const std::string& host, uint16_t port, int timeout_ms) {
    struct addrinfo hints {};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    struct addrinfo* res = nullptr;
    std::string port_s = fmt::format("{}", port);
    if (getaddrinfo(host.c_str(), port_s.c_str(), &hints, &res) != 0 || res == nullptr)
        throw_down(fmt::format("cannot resolve {}", host));

    int fd = ::socket(res->ai_family, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) {
        freeaddrinfo(res);
        throw_down("socket() failed");
    }
    // Non-blocking connect so an unreachable gateway fails within timeout_ms.
    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
    freeaddrinfo(res);
    if (rc != 0 && errno != EINPROGRESS) {
        ::close(fd);
        throw_down(fmt::format("connect to {}:{} failed: {}", host, port, strerror(errno)));
    }
    if (rc != 0) {
        struct pollfd pfd {fd, POLLOUT, 0};
        int pr = ::poll(&pfd, 1, timeout_ms > 0 ? timeout_ms : -1);
        int soerr = 0;
        socklen_t len = sizeof(soerr);
        if (pr <= 0 || getsockopt(fd, SOL_SOCKET, SO_ERROR, &soerr, &len) != 0 || soerr != 0) {
            ::close(fd);
            throw_down(fmt::format("connect to {}:{} failed: {}", host, port,
                                   pr <= 0 ? "timeout" : strerror(soerr)));
        }
    }
    fcntl(fd, F_SETFL, flags);
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    Conn c(fd);
    if (timeout_ms > 0) c.set_read_timeout(timeout_ms);
    return c;
}

void Conn::set_read_timeout(int timeout_ms) {
    struct timeval tv {};
    tv.tv_sec = timeout_ms / 1000;
    tv.tv_usec = (timeout_ms % 1000) * 1000;
    setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

size_t Conn::fill() {
    char tmp[16384];
    ssize_t n = ::recv(fd_, tmp, sizeof(tmp), 0);
    if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK) throw_down("read timeout");
        throw_down(fmt::format("read failed: {}", strerror(errno)));
    }
    if (n > 0) buf_.append(tmp, static_cast<size_t>(n));
    return static_cast<size_t>(n);
}

std::optional<std::string> Conn::read_line() {
    for (;;) {
        auto nl = buf_.find('\n', pos_);
        if (nl != std::string::npos) {
            std::string line = buf_.substr(pos_, nl - pos_);
            pos_ = nl + 1;
            if (pos_ == buf_.size()) {
                buf_.clear();
                pos_ = 0;
            }
            return line;
        }
        if (buf_.size() - pos_ > max_line) throw_down("line too long");
        if (fill() == 0) {
            if (pos_ < buf_.size()) {
                // trailing bytes without newline: treat as EOF mid-line
                throw_down("connection closed mid-line");
            }
            return std::nullopt;
        }
    }
}

std::string Conn::read_exact(size_t n) {
    while (buf_.size() - pos_ < n) {
        if (fill() == 0) throw_down("connection closed mid-body");
    }
    std::string out = buf_.substr(pos_, n);
    pos_ += n;
    if (pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    }
    return out;
}

void Conn::write_all(std::string_view data) {
    size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_down(fmt::format("write failed: {}", strerror(errno)));
        }
        off += static_cast<size_t>(n);
    }
}

void Conn::write_line(std::string_view line) {
    std::string out(line);
    out.push_back('\n');
    write_all(out);
}

Listener::~Listener() { shutdown(); }

Listener::Listener(Listener&& other) noexcept : fd_(other.fd_), port_(other.port_) {
    other.fd_ = -1;
}

Listener& Listener::operator=(Listener&& other) noexcept {
    if (this != &other) {
        shutdown();
        fd_ = other.fd_;
        port_ = other.port_;
        other.fd_ = -1;
    }
    return *this;
}

Listener Listener::bind(const std::string& host, uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw Error(ErrorKind::BindFailed, "socket() failed");
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    struct sockaddr_in addr {};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host.empty() || host == "0.0.0.0")
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
    else if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw Error(ErrorKind::BindFailed, fmt::format("bad bind address {}", host));
    }
    if (::bind(fd, reinterpret_cast<struct sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw Error(ErrorKind::BindFailed,
                    fmt::format("bind {}:{} failed: {}", host, port, strerror(errno)));
    }
    if (::listen(fd, 64) != 0) {
        ::close(fd);
        throw Error(ErrorKind::BindFailed, fmt::format("listen failed: {}", strerror(errno)));
    }
    socklen_t len = sizeof(addr);
    getsockname(fd, reinterpret_cast<struct sockaddr*>(&addr), &len);
    Listener l;
    l.fd_ = fd;
    l.port_ = ntohs(addr.sin_port);
    return l;
}

std::optional<Conn> Listener::accept() {
    if (fd_ < 0) return std::nullopt;
    int cfd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (cfd < 0) return std::nullopt;
    int one = 1;
    setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return Conn(cfd);
}

void Listener::shutdown() {
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        fd_ = -1;
    }
}

std::pair<std::string, uint16_t> parse_endpoint(const std::string& ep) {
    auto colon = ep.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == ep.size())
        throw Error(ErrorKind::UsageError, fmt::format("bad endpoint '{}'", ep));
    auto port = parse_i64(ep.substr(colon + 1));
    if (!port || *port <= 0 || *port > 65535)
        throw Error(ErrorKind::UsageError, fmt::format("bad endpoint port in '{}'", ep));
    return {ep.substr(0, colon), static_cast<uint16_t>(*port)};
}

}  // namespace gridlet::net
