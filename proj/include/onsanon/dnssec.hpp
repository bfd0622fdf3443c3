#pragma once

// RRSIG verification over RSA-family DNSKEYs, plus the small RSA signer the
// stub services use to produce signed test zones.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "onsanon/dns_wire.hpp"

typedef struct evp_pkey_st EVP_PKEY;

namespace onsanon::dnssec {

namespace algorithm {
inline constexpr std::uint8_t RSASHA1 = 5;
inline constexpr std::uint8_t RSASHA1_NSEC3_SHA1 = 7;
inline constexpr std::uint8_t RSASHA256 = 8;
inline constexpr std::uint8_t RSASHA512 = 10;
}  // namespace algorithm

bool supported_algorithm(std::uint8_t alg);

enum class Verdict { secure, bogus, unsigned_answer };

std::string_view verdict_name(Verdict v);

struct Verification {
    Verdict verdict = Verdict::unsigned_answer;
    std::string detail;
};

/// Current time as a 32-bit DNSSEC timestamp.
std::uint32_t now();

/// Octets covered by `sig`: the RRSIG RDATA minus the signature, then the
/// rrset in canonical form and order.
dns::Bytes signed_data(std::span<const dns::ResourceRecord> rrset, const dns::RrsigRdata& sig);

/// Checks one signature with one key. A key-tag, algorithm or signer
/// mismatch is reported as bogus with a reason; callers that scan several
/// keys should pre-filter with `key_matches`.
Verification verify_rrsig(std::span<const dns::ResourceRecord> rrset, const dns::RrsigRdata& sig,
                          const dns::DnskeyRecord& key, std::uint32_t at);

bool key_matches(const dns::RrsigRdata& sig, const dns::DnskeyRecord& key);

/// Secure if any signature covering the rrset verifies under any matching
/// key; unsigned when there is no signature (or only unsupported
/// algorithms); bogus otherwise.
Verification validate_rrset(std::span<const dns::ResourceRecord> rrset, std::span<const dns::RrsigRecord> sigs,
                            std::span<const dns::DnskeyRecord> keys, std::uint32_t at);

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const;
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

/// RSA key pair that can sign rrsets as a DNSKEY of `owner`.
class RsaSigningKey {
public:
    static RsaSigningKey generate(std::string owner, unsigned bits, std::uint16_t flags,
                                  std::uint8_t alg = algorithm::RSASHA256);

    const std::string& owner() const { return owner_; }
    const dns::DnskeyRdata& dnskey() const { return dnskey_; }
    dns::DnskeyRecord record() const { return dns::DnskeyRecord{owner_, dnskey_}; }

    dns::RrsigRdata sign(std::span<const dns::ResourceRecord> rrset, std::uint32_t inception,
                         std::uint32_t expiration) const;

private:
    RsaSigningKey(std::string owner, PkeyPtr pkey, dns::DnskeyRdata dnskey)
        : owner_(std::move(owner)), pkey_(std::move(pkey)), dnskey_(std::move(dnskey))
    {
    }

    std::string owner_;
    std::shared_ptr<EVP_PKEY> pkey_;
    dns::DnskeyRdata dnskey_;
};

}  // namespace onsanon::dnssec
