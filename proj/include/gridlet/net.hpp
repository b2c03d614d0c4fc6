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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace gridlet::net {

/// Thin RAII wrapper over a connected stream socket with a read buffer for
/// `\n`-framed lines and exact-length binary bodies.
class Conn {
public:
    Conn() = default;
    explicit Conn(int fd) : fd_(fd) {}
    ~Conn();
    Conn(Conn&& other) noexcept;
    Conn& operator=(Conn&& other) noexcept;
    Conn(const Conn&) = delete;
    Conn& operator=(const Conn&) = delete;

    /// Connects to host:port; throws gridlet::Error(GatewayDown) on failure
    /// or timeout.
    static Conn connect(const std::string& host, uint16_t port, int timeout_ms);

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }
    void close();

    /// Half-closes both directions so a blocked reader wakes up; the fd stays
    /// owned by this object.
    void interrupt();

    /// Reads up to the next '\n'; the newline is consumed and not returned.
    /// Returns nullopt on orderly EOF before any byte of a new line.
    /// Lines longer than max_line bytes abort the connection.
    std::optional<std::string> read_line();

    /// Reads exactly n bytes (after any buffered data). Throws on EOF.
    std::string read_exact(size_t n);

    void write_all(std::string_view data);
    void write_line(std::string_view line);  // appends '\n'

    /// Receive timeout for subsequent reads; 0 disables.
    void set_read_timeout(int timeout_ms);

    static constexpr size_t max_line = 1 << 20;

private:
    size_t fill();

    int fd_ = -1;
    std::string buf_;
    size_t pos_ = 0;
};

/// Listening socket. bind() with port 0 picks an ephemeral port which can be
/// read back through port().
class Listener {
public:
    Listener() = default;
    ~Listener();
    Listener(Listener&& other) noexcept;
    Listener& operator=(Listener&& other) noexcept;
    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;

    static Listener bind(const std::string& host, uint16_t port);

    /// Blocks until a client connects; returns nullopt when the listener has
    /// been shut down.
    std::optional<Conn> accept();

    uint16_t port() const { return port_; }
    void shutdown();

private:
    int fd_ = -1;
    uint16_t port_ = 0;
};

/// Splits "host:port"; throws gridlet::Error(UsageError) when malformed.
std::pair<std::string, uint16_t> parse_endpoint(const std::string& ep);

}  // namespace gridlet::net
