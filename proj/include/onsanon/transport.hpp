#pragma once

// NAPTR resolution over the four testbed paths: direct or SOCKS4a-proxied,
// each with plain DNS or DNSSEC.

#include <array>
#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "onsanon/dns_wire.hpp"
#include "onsanon/dnssec.hpp"
#include "onsanon/net.hpp"
#include "onsanon/ons_core.hpp"

namespace onsanon::transport {

enum class Route { direct, proxied };
enum class Security { plain, dnssec };

struct Mode {
    Route route = Route::direct;
    Security security = Security::plain;

    /// "direct-dns", "direct-dnssec", "tor-dns", "tor-dnssec".
    std::string name() const;
    static Mode parse(std::string_view name);
    static std::array<Mode, 4> all();

    bool proxied() const { return route == Route::proxied; }
    bool dnssec() const { return security == Security::dnssec; }
    bool operator==(const Mode&) const = default;
};

struct TransportConfig {
    Mode mode;
    net::Endpoint nameserver{"127.0.0.1", 53};
    std::optional<net::Endpoint> proxy;
    std::chrono::milliseconds timeout{3000};
    unsigned max_retries = 3;
    std::vector<dns::DnskeyRecord> trust_anchors;
    /// Check signatures in dnssec mode. Off means DO-bit only.
    bool verify = true;
    /// Strict fails on bogus or unsigned answers; permissive attaches the verdict.
    bool strict = true;

    /// Throws Errc::config when the mode's requirements are not met.
    void validate() const;
};

struct DnsResponse {
    std::uint16_t id = 0;
    std::uint8_t rcode = 0;
    /// Answer-section records matching the question name and type.
    std::vector<dns::ResourceRecord> rrset;
    /// `rrset` decoded as NAPTR when the question was NAPTR.
    std::vector<ons::NaptrRecord> answers;
    /// Records of `rrset` whose NAPTR data could not be decoded.
    std::size_t malformed = 0;
    /// RRSIGs from the answer section covering the question type.
    std::vector<dns::RrsigRecord> signatures;
    bool truncated = false;
    bool via_stream = false;
    std::size_t wire_size = 0;
    double rtt_ms = 0;
};

/// Decodes and checks a reply against its query (ID and question). A
/// NXDOMAIN, SERVFAIL or other failing rcode is thrown as a typed error.
DnsResponse parse_response(std::span<const std::uint8_t> reply, std::span<const std::uint8_t> query);

/// UDP exchange with fallback to length-prefixed TCP when the reply is truncated.
DnsResponse send_direct(std::span<const std::uint8_t> query, const net::Endpoint& nameserver,
                        std::chrono::milliseconds timeout);

/// SOCKS4a CONNECT request for `target`: version 4, command 1, port,
/// address 0.0.0.1, empty user id, NUL, hostname, NUL.
dns::Bytes socks4a_request(const net::Endpoint& target);

inline constexpr std::uint8_t kSocksGranted = 0x5A;
inline constexpr std::uint8_t kSocksRejected = 0x5B;

/// DNS over a SOCKS4a tunnel, framed with a two-octet length prefix. The
/// rtt covers the handshake.
DnsResponse send_proxied(std::span<const std::uint8_t> query, const net::Endpoint& proxy,
                         const net::Endpoint& nameserver, std::chrono::milliseconds timeout);

/// Turns a raw 96-bit tag (hex), an EPC URN or an ONS name into the query name.
std::string input_to_fqdn(std::string_view input, const ons::OnsNaming& naming = {});

struct ResolveResult {
    std::string fqdn;
    std::vector<ons::NaptrRecord> records;
    /// Round trip of the successful NAPTR exchange.
    double rtt_ms = 0;
    /// Wall clock across every attempt, including key fetches and verification.
    double elapsed_ms = 0;
    unsigned attempts = 0;
    std::optional<dnssec::Verification> verification;
};

/// Full pipeline: translate the input, query per mode, retry transient
/// failures on a fresh connection up to `max_retries`, verify in dnssec mode.
ResolveResult resolve(std::string_view input, const TransportConfig& config, const ons::OnsNaming& naming = {});

}  // namespace onsanon::transport
