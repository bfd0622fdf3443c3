#pragma once

// DNS message wire format: names, messages, EDNS0 and the RDATA layouts
// the ONS pipeline touches (NAPTR, RRSIG, DNSKEY, SOA, NS).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "onsanon/ons_core.hpp"

namespace onsanon::dns {

using Bytes = std::vector<std::uint8_t>;

namespace rrtype {
inline constexpr std::uint16_t A = 1;
inline constexpr std::uint16_t NS = 2;
inline constexpr std::uint16_t SOA = 6;
inline constexpr std::uint16_t TXT = 16;
inline constexpr std::uint16_t AAAA = 28;
inline constexpr std::uint16_t NAPTR = 35;
inline constexpr std::uint16_t OPT = 41;
inline constexpr std::uint16_t RRSIG = 46;
inline constexpr std::uint16_t DNSKEY = 48;
}  // namespace rrtype

inline constexpr std::uint16_t kClassIn = 1;

namespace rcode {
inline constexpr std::uint8_t NOERROR = 0;
inline constexpr std::uint8_t FORMERR = 1;
inline constexpr std::uint8_t SERVFAIL = 2;
inline constexpr std::uint8_t NXDOMAIN = 3;
inline constexpr std::uint8_t NOTIMP = 4;
inline constexpr std::uint8_t REFUSED = 5;
}  // namespace rcode

std::string type_name(std::uint16_t type);
std::optional<std::uint16_t> type_from_name(std::string_view name);
std::string rcode_name(std::uint8_t code);

// Names are held as absolute presentation text without the trailing dot;
// the root is the empty string.

/// Drops one trailing dot; "." becomes "".
std::string normalize_name(std::string_view name);
/// Lowercased, normalized.
std::string canonical_name(std::string_view name);
bool names_equal(std::string_view a, std::string_view b);
/// Label count, not counting the root or a leading "*" label.
unsigned label_count(std::string_view name);
/// Uncompressed wire form. Throws Errc::encoding on label or length limits.
Bytes encode_name(std::string_view name);

struct Question {
    std::string name;
    std::uint16_t qtype = rrtype::NAPTR;
    std::uint16_t qclass = kClassIn;
};

struct ResourceRecord {
    std::string name;
    std::uint16_t type = 0;
    std::uint16_t rrclass = kClassIn;
    std::uint32_t ttl = 0;
    Bytes rdata;

    bool operator==(const ResourceRecord&) const = default;
};

struct Edns {
    std::uint16_t udp_payload = 4096;
    bool dnssec_ok = false;
};

struct Message {
    std::uint16_t id = 0;
    bool qr = false;
    std::uint8_t opcode = 0;
    bool aa = false;
    bool tc = false;
    bool rd = false;
    bool ra = false;
    bool ad = false;
    bool cd = false;
    std::uint8_t rcode = 0;
    std::vector<Question> questions;
    std::vector<ResourceRecord> answers;
    std::vector<ResourceRecord> authority;
    std::vector<ResourceRecord> additional;

    Bytes encode() const;
    /// Names inside known RDATA layouts are decompressed, so every stored
    /// `rdata` is self-contained.
    static Message decode(std::span<const std::uint8_t> wire);

    std::optional<Edns> edns() const;
    void set_edns(const Edns& edns);
};

/// Fresh random message ID; safe to call from any thread.
std::uint16_t random_query_id();

/// Recursive NAPTR/IN query. With `dnssec`, adds an OPT record advertising
/// a 4096-octet payload with the DO bit.
Bytes build_query(std::string_view fqdn, bool dnssec, std::uint16_t id);
Bytes build_query(std::string_view fqdn, bool dnssec);
Bytes build_query(std::string_view name, std::uint16_t qtype, bool dnssec, std::uint16_t id);

// RDATA layouts.

Bytes naptr_to_rdata(const ons::NaptrRecord& r);
/// Raw field extraction; ONS-shape validation is left to ons::parse_naptr.
ons::NaptrRecord naptr_from_rdata(std::span<const std::uint8_t> rdata);

struct RrsigRdata {
    std::uint16_t type_covered = 0;
    std::uint8_t algorithm = 0;
    std::uint8_t labels = 0;
    std::uint32_t original_ttl = 0;
    std::uint32_t expiration = 0;
    std::uint32_t inception = 0;
    std::uint16_t key_tag = 0;
    std::string signer;
    Bytes signature;

    Bytes to_rdata() const;
    static RrsigRdata from_rdata(std::span<const std::uint8_t> rdata);
    bool operator==(const RrsigRdata&) const = default;
};

struct DnskeyRdata {
    std::uint16_t flags = 256;
    std::uint8_t protocol = 3;
    std::uint8_t algorithm = 0;
    Bytes public_key;

    Bytes to_rdata() const;
    static DnskeyRdata from_rdata(std::span<const std::uint8_t> rdata);
    std::uint16_t key_tag() const;
    bool is_sep() const { return (flags & 0x0001) != 0; }
    bool operator==(const DnskeyRdata&) const = default;
};

/// A DNSKEY together with the zone it belongs to; the trust-anchor form.
struct DnskeyRecord {
    std::string owner;
    DnskeyRdata key;
};

struct RrsigRecord {
    std::string owner;
    std::uint32_t ttl = 0;
    RrsigRdata sig;
};

struct SoaRdata {
    std::string mname;
    std::string rname;
    std::uint32_t serial = 0;
    std::uint32_t refresh = 3600;
    std::uint32_t retry = 900;
    std::uint32_t expire = 604800;
    std::uint32_t minimum = 3600;

    Bytes to_rdata() const;
    static SoaRdata from_rdata(std::span<const std::uint8_t> rdata);
};

/// RDATA with embedded names lowercased, as DNSSEC canonical ordering needs.
Bytes canonical_rdata(std::uint16_t type, std::span<const std::uint8_t> rdata);

/// Presentation text of RDATA for the known layouts; RFC 3597 generic
/// form otherwise.
std::string rdata_to_text(std::uint16_t type, std::span<const std::uint8_t> rdata);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

}  // namespace onsanon::dns
