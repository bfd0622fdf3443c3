#pragma once

// Thin RAII layer over POSIX sockets with deadline-bounded I/O.

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace onsanon::net {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;

struct Endpoint {
    std::string host;
    std::uint16_t port = 53;

    /// "host:port", "[v6]:port", or a bare host with `default_port`.
    static Endpoint parse(std::string_view text, std::uint16_t default_port = 53);
    std::string str() const;

    bool operator==(const Endpoint&) const = default;
};

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket() { reset(); }
    Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Socket& operator=(Socket&& o) noexcept
    {
        if (this != &o) {
            reset();
            fd_ = o.fd_;
            o.fd_ = -1;
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void reset();
    void shutdown_both();

private:
    int fd_ = -1;
};

/// Milliseconds left before `deadline`, clamped at zero.
int remaining_ms(Deadline deadline);

/// Waits until `fd` is readable (or writable). False on deadline expiry.
bool wait_readable(int fd, Deadline deadline);
bool wait_writable(int fd, Deadline deadline);

/// Throws Errc::connect_failed, or Errc::timeout when the deadline passes.
Socket connect_tcp(const Endpoint& to, Deadline deadline);

/// UDP socket connected to `to`, so plain send/recv apply.
Socket connect_udp(const Endpoint& to);

void send_all(const Socket& s, std::span<const std::uint8_t> data, Deadline deadline);

/// Fills `out` completely. Returns false if the peer closes first; throws
/// Errc::timeout on deadline expiry.
bool recv_exact(const Socket& s, std::span<std::uint8_t> out, Deadline deadline);

/// Loopback listeners; port 0 picks an ephemeral port.
Socket listen_tcp(const std::string& host, std::uint16_t port);
Socket bind_udp(const std::string& host, std::uint16_t port);
std::uint16_t local_port(const Socket& s);

}  // namespace onsanon::net
