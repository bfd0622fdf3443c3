#include "onsanon/net.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <memory>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fmt/format.h>

#include "onsanon/error.hpp"

namespace onsanon::net {

namespace {

struct AddrInfoDeleter {
    void operator()(addrinfo* ai) const { freeaddrinfo(ai); }
};
using AddrInfoPtr = std::unique_ptr<addrinfo, AddrInfoDeleter>;

AddrInfoPtr lookup(const Endpoint& ep, int socktype, bool passive = false)
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = socktype;
    if (passive)
        hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    auto port = std::to_string(ep.port);
    int rc = getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
    if (rc != 0)
        throw Error(Errc::connect_failed, fmt::format("cannot resolve {}: {}", ep.str(), gai_strerror(rc)));
    return AddrInfoPtr(res);
}

void set_nonblocking(int fd, bool on)
{
    int flags = fcntl(fd, F_GETFL, 0);
    fcntl(fd, F_SETFL, on ? flags | O_NONBLOCK : flags & ~O_NONBLOCK);
}

bool wait_for(int fd, short events, Deadline deadline)
{
    while (true) {
        pollfd p{fd, events, 0};
        int rc = ::poll(&p, 1, remaining_ms(deadline));
        if (rc > 0)
            return true;
        if (rc == 0)
            return false;
        if (errno != EINTR)
            throw Error(Errc::io, fmt::format("poll: {}", std::strerror(errno)));
    }
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text, std::uint16_t default_port)
{
    Endpoint ep;
    ep.port = default_port;
    std::string_view host = text;
    std::string_view port;
    if (text.starts_with('[')) {
        auto close = text.find(']');
        if (close == std::string_view::npos)
            throw Error(Errc::config, fmt::format("bad endpoint '{}'", text));
        host = text.substr(1, close - 1);
        if (close + 1 < text.size()) {
            if (text[close + 1] != ':')
                throw Error(Errc::config, fmt::format("bad endpoint '{}'", text));
            port = text.substr(close + 2);
        }
    } else if (auto colon = text.rfind(':'); colon != std::string_view::npos && text.find(':') == colon) {
        host = text.substr(0, colon);
        port = text.substr(colon + 1);
    }
    if (host.empty())
        throw Error(Errc::config, fmt::format("endpoint '{}' has no host", text));
    ep.host = std::string(host);
    if (!port.empty()) {
        unsigned v = 0;
        for (char c : port) {
            if (c < '0' || c > '9' || (v = v * 10 + static_cast<unsigned>(c - '0')) > 65535)
                throw Error(Errc::config, fmt::format("bad port in '{}'", text));
        }
        ep.port = static_cast<std::uint16_t>(v);
    }
    return ep;
}

std::string Endpoint::str() const
{
    if (host.find(':') != std::string::npos)
        return fmt::format("[{}]:{}", host, port);
    return fmt::format("{}:{}", host, port);
}

void Socket::reset()
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Socket::shutdown_both()
{
    if (fd_ >= 0)
        ::shutdown(fd_, SHUT_RDWR);
}

int remaining_ms(Deadline deadline)
{
    auto left = std::chrono::ceil<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0)
        return 0;
    return left > 1'000'000'000 ? 1'000'000'000 : static_cast<int>(left);
}

bool wait_readable(int fd, Deadline deadline)
{
    return wait_for(fd, POLLIN, deadline);
}

bool wait_writable(int fd, Deadline deadline)
{
    return wait_for(fd, POLLOUT, deadline);
}

Socket connect_tcp(const Endpoint& to, Deadline deadline)
{
    auto ai = lookup(to, SOCK_STREAM);
    std::string last = "no addresses";
    for (auto* a = ai.get(); a; a = a->ai_next) {
        Socket s(::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol));
        if (!s.valid())
            continue;
        set_nonblocking(s.fd(), true);
        int rc = ::connect(s.fd(), a->ai_addr, a->ai_addrlen);
        if (rc != 0 && errno != EINPROGRESS) {
            last = std::strerror(errno);
            continue;
        }
        if (rc != 0) {
            if (!wait_writable(s.fd(), deadline))
                throw Error(Errc::timeout, fmt::format("connect to {} timed out", to.str()));
            int err = 0;
            socklen_t len = sizeof err;
            getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
            if (err != 0) {
                last = std::strerror(err);
                continue;
            }
        }
        set_nonblocking(s.fd(), false);
        int one = 1;
        setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return s;
    }
    throw Error(Errc::connect_failed, fmt::format("connect to {}: {}", to.str(), last));
}

Socket connect_udp(const Endpoint& to)
{
    auto ai = lookup(to, SOCK_DGRAM);
    std::string last = "no addresses";
    for (auto* a = ai.get(); a; a = a->ai_next) {
        Socket s(::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol));
        if (!s.valid())
            continue;
        if (::connect(s.fd(), a->ai_addr, a->ai_addrlen) == 0)
            return s;
        last = std::strerror(errno);
    }
    throw Error(Errc::connect_failed, fmt::format("udp socket for {}: {}", to.str(), last));
}

void send_all(const Socket& s, std::span<const std::uint8_t> data, Deadline deadline)
{
    std::size_t sent = 0;
    while (sent < data.size()) {
        if (!wait_writable(s.fd(), deadline))
            throw Error(Errc::timeout, "send timed out");
        auto n = ::send(s.fd(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN)
                continue;
            throw Error(Errc::io, fmt::format("send: {}", std::strerror(errno)));
        }
        sent += static_cast<std::size_t>(n);
    }
}

bool recv_exact(const Socket& s, std::span<std::uint8_t> out, Deadline deadline)
{
    std::size_t got = 0;
    while (got < out.size()) {
        if (!wait_readable(s.fd(), deadline))
            throw Error(Errc::timeout, "receive timed out");
        auto n = ::recv(s.fd(), out.data() + got, out.size() - got, 0);
        if (n == 0)
            return false;
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN)
                continue;
            if (errno == ECONNRESET)
                return false;
            throw Error(Errc::io, fmt::format("recv: {}", std::strerror(errno)));
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

Socket listen_tcp(const std::string& host, std::uint16_t port)
{
    auto ai = lookup(Endpoint{host, port}, SOCK_STREAM, true);
    for (auto* a = ai.get(); a; a = a->ai_next) {
        Socket s(::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol));
        if (!s.valid())
            continue;
        int one = 1;
        setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(s.fd(), a->ai_addr, a->ai_addrlen) == 0 && ::listen(s.fd(), 128) == 0)
            return s;
    }
    throw Error(Errc::io, fmt::format("cannot listen on {}:{}: {}", host, port, std::strerror(errno)));
}

Socket bind_udp(const std::string& host, std::uint16_t port)
{
    auto ai = lookup(Endpoint{host, port}, SOCK_DGRAM, true);
    for (auto* a = ai.get(); a; a = a->ai_next) {
        Socket s(::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol));
        if (!s.valid())
            continue;
        if (::bind(s.fd(), a->ai_addr, a->ai_addrlen) == 0)
            return s;
    }
    throw Error(Errc::io, fmt::format("cannot bind udp {}:{}: {}", host, port, std::strerror(errno)));
}

std::uint16_t local_port(const Socket& s)
{
    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    if (getsockname(s.fd(), reinterpret_cast<sockaddr*>(&ss), &len) != 0)
        throw Error(Errc::io, "getsockname failed");
    if (ss.ss_family == AF_INET)
        return ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
    return ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port);
}

}  // namespace onsanon::net
