#include "onsanon/transport.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <sys/socket.h>

#include <fmt/format.h>

#include "onsanon/epc_codec.hpp"
#include "onsanon/error.hpp"

namespace onsanon::transport {

namespace {

using Ms = std::chrono::duration<double, std::milli>;

double elapsed_ms(net::Clock::time_point since)
{
    return Ms(net::Clock::now() - since).count();
}

dns::Bytes frame(std::span<const std::uint8_t> msg)
{
    dns::Bytes out;
    out.reserve(msg.size() + 2);
    out.push_back(static_cast<std::uint8_t>(msg.size() >> 8));
    out.push_back(static_cast<std::uint8_t>(msg.size()));
    out.insert(out.end(), msg.begin(), msg.end());
    return out;
}

/// One length-prefixed exchange on an established stream. `broken` is the
/// error code used when the peer closes early.
dns::Bytes stream_exchange(const net::Socket& s, std::span<const std::uint8_t> query, net::Deadline deadline,
                           Errc broken)
{
    try {
        net::send_all(s, frame(query), deadline);
    } catch (const Error& e) {
        if (e.code() == Errc::io)
            throw Error(broken, e.what());
        throw;
    }
    std::array<std::uint8_t, 2> len{};
    if (!net::recv_exact(s, len, deadline))
        throw Error(broken, "connection closed before response");
    dns::Bytes reply(static_cast<std::size_t>(len[0] << 8 | len[1]));
    if (!net::recv_exact(s, reply, deadline))
        throw Error(broken, "connection closed mid-response");
    return reply;
}

bool looks_hex_tag(std::string_view s)
{
    if (s.starts_with("0x") || s.starts_with("0X"))
        s.remove_prefix(2);
    return s.size() == 24 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c); });
}

}  // namespace

std::string Mode::name() const
{
    return fmt::format("{}-{}", route == Route::direct ? "direct" : "tor",
                       security == Security::plain ? "dns" : "dnssec");
}

Mode Mode::parse(std::string_view name)
{
    for (auto m : all())
        if (m.name() == name)
            return m;
    throw Error(Errc::config, fmt::format("unknown mode '{}'", name));
}

std::array<Mode, 4> Mode::all()
{
    return {Mode{Route::direct, Security::plain}, Mode{Route::direct, Security::dnssec},
            Mode{Route::proxied, Security::plain}, Mode{Route::proxied, Security::dnssec}};
}

void TransportConfig::validate() const
{
    if (mode.proxied() && !proxy)
        throw Error(Errc::config, "proxied mode needs a proxy endpoint");
    if (mode.dnssec() && verify && trust_anchors.empty())
        throw Error(Errc::config, "dnssec verification needs at least one trust anchor");
    if (timeout.count() <= 0)
        throw Error(Errc::config, "timeout must be positive");
}

DnsResponse parse_response(std::span<const std::uint8_t> reply, std::span<const std::uint8_t> query)
{
    auto q = dns::Message::decode(query);
    auto m = dns::Message::decode(reply);
    if (!m.qr)
        throw Error(Errc::decode, "reply is not a response");
    if (m.id != q.id)
        throw Error(Errc::decode, fmt::format("reply ID {} does not match query ID {}", m.id, q.id));
    if (q.questions.size() != 1)
        throw Error(Errc::decode, "query must carry exactly one question");
    const auto& question = q.questions.front();
    if (m.questions.size() != 1 || !dns::names_equal(m.questions.front().name, question.name) ||
        m.questions.front().qtype != question.qtype)
        throw Error(Errc::decode, "reply question does not match the query");

    DnsResponse r;
    r.id = m.id;
    r.rcode = m.rcode;
    r.truncated = m.tc;
    r.wire_size = reply.size();
    if (m.tc)
        return r;
    switch (m.rcode) {
    case dns::rcode::NOERROR:
        break;
    case dns::rcode::NXDOMAIN:
        throw Error(Errc::nxdomain, fmt::format("{} does not exist", question.name));
    case dns::rcode::SERVFAIL:
        throw Error(Errc::servfail, fmt::format("server failed on {}", question.name));
    default:
        throw Error(Errc::resolution_failed, fmt::format("{} answered {}", question.name, dns::rcode_name(m.rcode)));
    }
    for (const auto& rr : m.answers) {
        if (!dns::names_equal(rr.name, question.name))
            continue;
        if (rr.type == question.qtype) {
            r.rrset.push_back(rr);
            if (rr.type == dns::rrtype::NAPTR) {
                try {
                    r.answers.push_back(dns::naptr_from_rdata(rr.rdata));
                } catch (const Error&) {
                    ++r.malformed;
                }
            }
        } else if (rr.type == dns::rrtype::RRSIG) {
            auto sig = dns::RrsigRdata::from_rdata(rr.rdata);
            if (sig.type_covered == question.qtype)
                r.signatures.push_back(dns::RrsigRecord{rr.name, rr.ttl, std::move(sig)});
        }
    }
    return r;
}

DnsResponse send_direct(std::span<const std::uint8_t> query, const net::Endpoint& nameserver,
                        std::chrono::milliseconds timeout)
{
    const auto start = net::Clock::now();
    const auto deadline = start + timeout;
    auto sock = net::connect_udp(nameserver);
    if (::send(sock.fd(), query.data(), query.size(), 0) < 0)
        throw Error(Errc::connect_failed, fmt::format("udp send to {} failed", nameserver.str()));
    dns::Bytes buf(65535);
    while (true) {
        if (!net::wait_readable(sock.fd(), deadline))
            throw Error(Errc::timeout, fmt::format("no reply from {} within {} ms", nameserver.str(), timeout.count()));
        auto n = ::recv(sock.fd(), buf.data(), buf.size(), 0);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            // ICMP port unreachable surfaces here on a connected UDP socket.
            throw Error(Errc::connect_failed, fmt::format("udp receive from {} failed", nameserver.str()));
        }
        std::span<const std::uint8_t> reply(buf.data(), static_cast<std::size_t>(n));
        if (reply.size() >= 2 && (reply[0] != query[0] || reply[1] != query[1]))
            continue;  // stale or spoofed datagram
        auto r = parse_response(reply, query);
        if (!r.truncated) {
            r.rtt_ms = elapsed_ms(start);
            return r;
        }
        break;
    }
    auto tcp = net::connect_tcp(nameserver, deadline);
    auto reply = stream_exchange(tcp, query, deadline, Errc::connect_failed);
    auto r = parse_response(reply, query);
    r.via_stream = true;
    r.rtt_ms = elapsed_ms(start);
    return r;
}

dns::Bytes socks4a_request(const net::Endpoint& target)
{
    if (target.host.empty() || target.host.size() > 255 || target.host.find('\0') != std::string::npos)
        throw Error(Errc::config, fmt::format("bad SOCKS4a target host '{}'", target.host));
    dns::Bytes req{0x04, 0x01, static_cast<std::uint8_t>(target.port >> 8), static_cast<std::uint8_t>(target.port),
                   0x00, 0x00, 0x00, 0x01, 0x00};
    req.insert(req.end(), target.host.begin(), target.host.end());
    req.push_back(0x00);
    return req;
}

DnsResponse send_proxied(std::span<const std::uint8_t> query, const net::Endpoint& proxy,
                         const net::Endpoint& nameserver, std::chrono::milliseconds timeout)
{
    const auto start = net::Clock::now();
    const auto deadline = start + timeout;
    net::Socket s;
    try {
        s = net::connect_tcp(proxy, deadline);
    } catch (const Error& e) {
        throw Error(e.code() == Errc::timeout ? Errc::tunnel_timeout : Errc::connect_failed,
                    fmt::format("proxy {}: {}", proxy.str(), e.what()));
    }
    std::array<std::uint8_t, 8> grant{};
    try {
        net::send_all(s, socks4a_request(nameserver), deadline);
        if (!net::recv_exact(s, grant, deadline))
            throw Error(Errc::tunnel_broken, "proxy closed during handshake");
    } catch (const Error& e) {
        if (e.code() == Errc::timeout)
            throw Error(Errc::tunnel_timeout, fmt::format("SOCKS4a handshake with {}: {}", proxy.str(), e.what()));
        if (e.code() == Errc::io)
            throw Error(Errc::tunnel_broken, e.what());
        throw;
    }
    if (grant[0] != 0x00)
        throw Error(Errc::tunnel_broken, fmt::format("bad SOCKS4a reply version {}", grant[0]));
    if (grant[1] != kSocksGranted)
        throw Error(Errc::tunnel_refused,
                    fmt::format("proxy {} refused {} (code 0x{:02X})", proxy.str(), nameserver.str(), grant[1]));
    dns::Bytes reply;
    try {
        reply = stream_exchange(s, query, deadline, Errc::tunnel_broken);
    } catch (const Error& e) {
        if (e.code() == Errc::timeout)
            throw Error(Errc::tunnel_timeout, fmt::format("tunnel to {}: {}", nameserver.str(), e.what()));
        throw;
    }
    auto r = parse_response(reply, query);
    r.via_stream = true;
    r.rtt_ms = elapsed_ms(start);
    return r;
}

std::string input_to_fqdn(std::string_view input, const ons::OnsNaming& naming)
{
    if (looks_hex_tag(input)) {
        auto fields = epc::decode_sgtin96(epc::Epc96::from_hex(input));
        return ons::uri_to_fqdn(epc::fields_to_uri(fields), naming).str();
    }
    if (input.starts_with("urn:epc:")) {
        epc::parse_uri(input);
        return ons::uri_to_fqdn(epc::split_uri(input), naming).str();
    }
    return ons::parse_fqdn(input, naming).str();
}

namespace {

DnsResponse exchange(std::string_view name, std::uint16_t qtype, const TransportConfig& cfg)
{
    auto query = dns::build_query(name, qtype, cfg.mode.dnssec(), dns::random_query_id());
    if (cfg.mode.proxied())
        return send_proxied(query, *cfg.proxy, cfg.nameserver, cfg.timeout);
    return send_direct(query, cfg.nameserver, cfg.timeout);
}

/// Runs `fn` until it succeeds or a non-transient error / the retry budget ends.
template <typename Fn>
auto with_retries(const TransportConfig& cfg, unsigned& attempts, Fn&& fn)
{
    while (true) {
        ++attempts;
        try {
            return fn();
        } catch (const Error& e) {
            if (!is_retryable(e.code()) || attempts > cfg.max_retries)
                throw;
        }
    }
}

dnssec::Verification verify_answer(const DnsResponse& r, const TransportConfig& cfg)
{
    const auto at = dnssec::now();
    auto direct = dnssec::validate_rrset(r.rrset, r.signatures, cfg.trust_anchors, at);
    if (direct.verdict != dnssec::Verdict::bogus || r.signatures.empty())
        return direct;

    // Signatures may come from a zone key that only a configured key-signing
    // key vouches for: fetch the signer's DNSKEY rrset and validate it first.
    bool anchored = false;
    for (const auto& s : r.signatures)
        for (const auto& a : cfg.trust_anchors)
            anchored = anchored || dnssec::key_matches(s.sig, a);
    if (anchored)
        return direct;
    const auto signer = r.signatures.front().sig.signer;
    DnsResponse keys;
    unsigned key_attempts = 0;
    try {
        keys = with_retries(cfg, key_attempts, [&] { return exchange(signer, dns::rrtype::DNSKEY, cfg); });
    } catch (const Error& e) {
        return dnssec::Verification{dnssec::Verdict::bogus,
                                    fmt::format("cannot fetch DNSKEY for {}: {}", signer, e.what())};
    }
    auto key_verdict = dnssec::validate_rrset(keys.rrset, keys.signatures, cfg.trust_anchors, at);
    if (key_verdict.verdict != dnssec::Verdict::secure)
        return dnssec::Verification{dnssec::Verdict::bogus,
                                    fmt::format("DNSKEY rrset of {} is {}: {}", signer,
                                                dnssec::verdict_name(key_verdict.verdict), key_verdict.detail)};
    std::vector<dns::DnskeyRecord> zone_keys;
    for (const auto& rr : keys.rrset)
        zone_keys.push_back(dns::DnskeyRecord{rr.name, dns::DnskeyRdata::from_rdata(rr.rdata)});
    return dnssec::validate_rrset(r.rrset, r.signatures, zone_keys, at);
}

}  // namespace

ResolveResult resolve(std::string_view input, const TransportConfig& cfg, const ons::OnsNaming& naming)
{
    cfg.validate();
    const auto start = net::Clock::now();
    ResolveResult result;
    result.fqdn = input_to_fqdn(input, naming);
    auto response = with_retries(cfg, result.attempts, [&] { return exchange(result.fqdn, dns::rrtype::NAPTR, cfg); });
    result.rtt_ms = response.rtt_ms;

    if (cfg.mode.dnssec() && cfg.verify) {
        auto v = verify_answer(response, cfg);
        if (cfg.strict && v.verdict != dnssec::Verdict::secure)
            throw Error(Errc::verification_failed,
                        fmt::format("{} is {}: {}", result.fqdn, dnssec::verdict_name(v.verdict), v.detail));
        result.verification = std::move(v);
    }
    if (response.malformed > 0 && !result.verification)
        throw Error(Errc::decode, fmt::format("{}: {} undecodable NAPTR record(s)", result.fqdn, response.malformed));
    for (auto& n : response.answers) {
        try {
            result.records.push_back(
                ons::parse_naptr(n.order, n.preference, n.flags, n.service, n.regexp, n.replacement));
        } catch (const Error&) {
            result.records.push_back(std::move(n));
        }
    }
    result.elapsed_ms = elapsed_ms(start);
    return result;
}

}  // namespace onsanon::transport
