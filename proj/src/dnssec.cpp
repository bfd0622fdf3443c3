#include "onsanon/dnssec.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include <fmt/format.h>
#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/param_build.h>
#include <openssl/rsa.h>

#include "onsanon/error.hpp"

namespace onsanon::dnssec {

namespace {

struct BnDeleter {
    void operator()(BIGNUM* b) const { BN_free(b); }
};
struct ParamBldDeleter {
    void operator()(OSSL_PARAM_BLD* b) const { OSSL_PARAM_BLD_free(b); }
};
struct ParamDeleter {
    void operator()(OSSL_PARAM* p) const { OSSL_PARAM_free(p); }
};
struct PkeyCtxDeleter {
    void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
};
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;

constexpr std::uint16_t kZoneKeyFlag = 0x0100;

const EVP_MD* digest_for(std::uint8_t alg)
{
    switch (alg) {
    case algorithm::RSASHA1:
    case algorithm::RSASHA1_NSEC3_SHA1:
        return EVP_sha1();
    case algorithm::RSASHA256:
        return EVP_sha256();
    case algorithm::RSASHA512:
        return EVP_sha512();
    default:
        return nullptr;
    }
}

/// RFC 3110 public key layout: exponent length, exponent, modulus.
PkeyPtr load_rsa_public(std::span<const std::uint8_t> key)
{
    if (key.size() < 3)
        throw Error(Errc::decode, "RSA public key too short");
    std::size_t exp_len = key[0];
    std::size_t off = 1;
    if (exp_len == 0) {
        exp_len = static_cast<std::size_t>(key[1]) << 8 | key[2];
        off = 3;
    }
    if (exp_len == 0 || key.size() <= off + exp_len)
        throw Error(Errc::decode, "RSA public key length fields are inconsistent");
    BnPtr e{BN_bin2bn(key.data() + off, static_cast<int>(exp_len), nullptr)};
    BnPtr n{BN_bin2bn(key.data() + off + exp_len, static_cast<int>(key.size() - off - exp_len), nullptr)};
    std::unique_ptr<OSSL_PARAM_BLD, ParamBldDeleter> bld{OSSL_PARAM_BLD_new()};
    if (!e || !n || !bld || OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_N, n.get()) != 1 ||
        OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_E, e.get()) != 1)
        throw Error(Errc::decode, "cannot build RSA parameters");
    std::unique_ptr<OSSL_PARAM, ParamDeleter> params{OSSL_PARAM_BLD_to_param(bld.get())};
    std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter> ctx{EVP_PKEY_CTX_new_from_name(nullptr, "RSA", nullptr)};
    EVP_PKEY* raw = nullptr;
    if (!params || !ctx || EVP_PKEY_fromdata_init(ctx.get()) != 1 ||
        EVP_PKEY_fromdata(ctx.get(), &raw, EVP_PKEY_PUBLIC_KEY, params.get()) != 1)
        throw Error(Errc::decode, "cannot load RSA public key");
    return PkeyPtr(raw);
}

dns::Bytes rsa_public_rdata(EVP_PKEY* pkey)
{
    BIGNUM* n_raw = nullptr;
    BIGNUM* e_raw = nullptr;
    if (EVP_PKEY_get_bn_param(pkey, OSSL_PKEY_PARAM_RSA_N, &n_raw) != 1 ||
        EVP_PKEY_get_bn_param(pkey, OSSL_PKEY_PARAM_RSA_E, &e_raw) != 1) {
        BN_free(n_raw);
        BN_free(e_raw);
        throw Error(Errc::encoding, "cannot export RSA public key");
    }
    BnPtr n{n_raw};
    BnPtr e{e_raw};
    dns::Bytes e_bytes(static_cast<std::size_t>(BN_num_bytes(e.get())));
    dns::Bytes n_bytes(static_cast<std::size_t>(BN_num_bytes(n.get())));
    BN_bn2bin(e.get(), e_bytes.data());
    BN_bn2bin(n.get(), n_bytes.data());
    dns::Bytes out;
    if (e_bytes.size() < 256) {
        out.push_back(static_cast<std::uint8_t>(e_bytes.size()));
    } else {
        out.push_back(0);
        out.push_back(static_cast<std::uint8_t>(e_bytes.size() >> 8));
        out.push_back(static_cast<std::uint8_t>(e_bytes.size()));
    }
    out.insert(out.end(), e_bytes.begin(), e_bytes.end());
    out.insert(out.end(), n_bytes.begin(), n_bytes.end());
    return out;
}

void put_u16(dns::Bytes& b, std::uint16_t v)
{
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(dns::Bytes& b, std::uint32_t v)
{
    put_u16(b, static_cast<std::uint16_t>(v >> 16));
    put_u16(b, static_cast<std::uint16_t>(v));
}

/// RFC 1982 comparison: true when a precedes or equals b.
bool serial_le(std::uint32_t a, std::uint32_t b)
{
    return static_cast<std::int32_t>(b - a) >= 0;
}

Verification bogus(std::string why)
{
    return Verification{Verdict::bogus, std::move(why)};
}

}  // namespace

void PkeyDeleter::operator()(EVP_PKEY* p) const
{
    EVP_PKEY_free(p);
}

bool supported_algorithm(std::uint8_t alg)
{
    return digest_for(alg) != nullptr;
}

std::string_view verdict_name(Verdict v)
{
    switch (v) {
    case Verdict::secure: return "secure";
    case Verdict::bogus: return "bogus";
    case Verdict::unsigned_answer: return "unsigned";
    }
    return "unknown";
}

std::uint32_t now()
{
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch());
    return static_cast<std::uint32_t>(secs.count());
}

dns::Bytes signed_data(std::span<const dns::ResourceRecord> rrset, const dns::RrsigRdata& sig)
{
    auto header = sig;
    header.signer = dns::canonical_name(sig.signer);
    header.signature.clear();
    dns::Bytes out = header.to_rdata();
    if (rrset.empty())
        return out;

    auto owner = dns::canonical_name(rrset.front().name);
    if (dns::label_count(owner) > sig.labels) {
        // Wildcard expansion: keep the rightmost `labels` labels under "*".
        auto n = dns::label_count(owner);
        std::size_t pos = 0;
        for (unsigned skip = 0; skip < n - sig.labels; ++skip)
            pos = owner.find('.', pos) + 1;
        owner = sig.labels == 0 ? "*" : "*." + owner.substr(pos);
    }
    auto owner_wire = dns::encode_name(owner);

    std::set<dns::Bytes> rdatas;
    for (const auto& rr : rrset)
        rdatas.insert(dns::canonical_rdata(rr.type, rr.rdata));
    for (const auto& rdata : rdatas) {
        out.insert(out.end(), owner_wire.begin(), owner_wire.end());
        put_u16(out, rrset.front().type);
        put_u16(out, rrset.front().rrclass);
        put_u32(out, sig.original_ttl);
        put_u16(out, static_cast<std::uint16_t>(rdata.size()));
        out.insert(out.end(), rdata.begin(), rdata.end());
    }
    return out;
}

bool key_matches(const dns::RrsigRdata& sig, const dns::DnskeyRecord& key)
{
    return key.key.algorithm == sig.algorithm && key.key.key_tag() == sig.key_tag &&
           dns::names_equal(key.owner, sig.signer);
}

Verification verify_rrsig(std::span<const dns::ResourceRecord> rrset, const dns::RrsigRdata& sig,
                          const dns::DnskeyRecord& key, std::uint32_t at)
{
    if (rrset.empty())
        return bogus("empty rrset");
    const auto& first = rrset.front();
    for (const auto& rr : rrset)
        if (!dns::names_equal(rr.name, first.name) || rr.type != first.type || rr.rrclass != first.rrclass)
            return bogus("records do not form a single rrset");
    if (sig.type_covered != first.type)
        return bogus(fmt::format("signature covers {}, rrset is {}", dns::type_name(sig.type_covered),
                                 dns::type_name(first.type)));
    if (!supported_algorithm(sig.algorithm))
        return Verification{Verdict::unsigned_answer, fmt::format("unsupported-algorithm {}", sig.algorithm)};
    if (key.key.algorithm != sig.algorithm)
        return bogus("key algorithm differs from signature algorithm");
    if (key.key.key_tag() != sig.key_tag)
        return bogus(fmt::format("key tag {} does not match signature key tag {}", key.key.key_tag(), sig.key_tag));
    if (!dns::names_equal(key.owner, sig.signer))
        return bogus(fmt::format("signer {} is not key owner {}", sig.signer, key.owner));
    if (key.key.protocol != 3 || (key.key.flags & kZoneKeyFlag) == 0)
        return bogus("DNSKEY is not a zone key");
    if (sig.labels > dns::label_count(first.name))
        return bogus("RRSIG labels field exceeds owner label count");
    if (!serial_le(sig.inception, at))
        return bogus("signature not yet valid");
    if (!serial_le(at, sig.expiration))
        return bogus("signature expired");

    PkeyPtr pkey;
    try {
        pkey = load_rsa_public(key.key.public_key);
    } catch (const Error& e) {
        return bogus(e.what());
    }
    dns::Bytes data;
    try {
        data = signed_data(rrset, sig);
    } catch (const Error& e) {
        return bogus(fmt::format("malformed record data: {}", e.what()));
    }
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx{EVP_MD_CTX_new()};
    if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, digest_for(sig.algorithm), nullptr, pkey.get()) != 1)
        return bogus("cannot initialise verifier");
    int rc = EVP_DigestVerify(ctx.get(), sig.signature.data(), sig.signature.size(), data.data(), data.size());
    if (rc != 1)
        return bogus("signature does not verify");
    return Verification{Verdict::secure, fmt::format("verified with key tag {}", sig.key_tag)};
}

Verification validate_rrset(std::span<const dns::ResourceRecord> rrset, std::span<const dns::RrsigRecord> sigs,
                            std::span<const dns::DnskeyRecord> keys, std::uint32_t at)
{
    if (rrset.empty())
        return Verification{Verdict::unsigned_answer, "empty rrset"};
    bool any_covering = false;
    bool any_supported = false;
    std::string last_failure = "no trusted key matches any signature";
    for (const auto& s : sigs) {
        if (s.sig.type_covered != rrset.front().type || !dns::names_equal(s.owner, rrset.front().name))
            continue;
        any_covering = true;
        if (!supported_algorithm(s.sig.algorithm))
            continue;
        any_supported = true;
        for (const auto& k : keys) {
            if (!key_matches(s.sig, k))
                continue;
            auto v = verify_rrsig(rrset, s.sig, k, at);
            if (v.verdict == Verdict::secure)
                return v;
            last_failure = v.detail;
        }
    }
    if (!any_covering)
        return Verification{Verdict::unsigned_answer, "no RRSIG covers the answer"};
    if (!any_supported)
        return Verification{Verdict::unsigned_answer, "unsupported-algorithm"};
    return bogus(last_failure);
}

RsaSigningKey RsaSigningKey::generate(std::string owner, unsigned bits, std::uint16_t flags, std::uint8_t alg)
{
    if (!supported_algorithm(alg))
        throw Error(Errc::config, fmt::format("algorithm {} is not RSA", alg));
    std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter> ctx{EVP_PKEY_CTX_new_from_name(nullptr, "RSA", nullptr)};
    EVP_PKEY* raw = nullptr;
    if (!ctx || EVP_PKEY_keygen_init(ctx.get()) != 1 ||
        EVP_PKEY_CTX_set_rsa_keygen_bits(ctx.get(), static_cast<int>(bits)) != 1 ||
        EVP_PKEY_generate(ctx.get(), &raw) != 1)
        throw Error(Errc::config, fmt::format("RSA key generation ({} bits) failed", bits));
    PkeyPtr pkey(raw);
    dns::DnskeyRdata dnskey;
    dnskey.flags = flags;
    dnskey.algorithm = alg;
    dnskey.public_key = rsa_public_rdata(pkey.get());
    return RsaSigningKey(dns::normalize_name(owner), std::move(pkey), std::move(dnskey));
}

dns::RrsigRdata RsaSigningKey::sign(std::span<const dns::ResourceRecord> rrset, std::uint32_t inception,
                                    std::uint32_t expiration) const
{
    if (rrset.empty())
        throw Error(Errc::domain, "cannot sign an empty rrset");
    dns::RrsigRdata sig;
    sig.type_covered = rrset.front().type;
    sig.algorithm = dnskey_.algorithm;
    sig.labels = static_cast<std::uint8_t>(dns::label_count(rrset.front().name));
    sig.original_ttl = rrset.front().ttl;
    sig.expiration = expiration;
    sig.inception = inception;
    sig.key_tag = dnskey_.key_tag();
    sig.signer = owner_;
    auto data = signed_data(rrset, sig);
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx{EVP_MD_CTX_new()};
    std::size_t len = 0;
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, digest_for(sig.algorithm), nullptr, pkey_.get()) != 1 ||
        EVP_DigestSign(ctx.get(), nullptr, &len, data.data(), data.size()) != 1)
        throw Error(Errc::encoding, "cannot initialise signer");
    sig.signature.resize(len);
    if (EVP_DigestSign(ctx.get(), sig.signature.data(), &len, data.data(), data.size()) != 1)
        throw Error(Errc::encoding, "RSA signing failed");
    sig.signature.resize(len);
    return sig;
}

}  // namespace onsanon::dnssec
