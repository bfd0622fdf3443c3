#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "onsanon/dnssec.hpp"
#include "onsanon/zonefile.hpp"
#include "support.hpp"

using namespace onsanon;
using namespace onsanon::dns;
using dnssec::Verdict;

namespace {

struct Fixture {
    std::map<std::pair<std::string, std::uint16_t>, std::vector<ResourceRecord>> rrsets;
    std::map<std::pair<std::string, std::uint16_t>, std::vector<RrsigRecord>> sigs;
    std::vector<DnskeyRecord> ksk, zsk, dnskeys;

    Fixture()
    {
        auto z = zonefile::load(testsupport::data_path("signed_0434687.zone"));
        for (const auto& rr : z.records) {
            if (rr.type == rrtype::RRSIG) {
                auto s = RrsigRdata::from_rdata(rr.rdata);
                sigs[{rr.name, s.type_covered}].push_back(RrsigRecord{rr.name, rr.ttl, s});
            } else {
                rrsets[{rr.name, rr.type}].push_back(rr);
                if (rr.type == rrtype::DNSKEY)
                    dnskeys.push_back(DnskeyRecord{rr.name, DnskeyRdata::from_rdata(rr.rdata)});
            }
        }
        ksk = zonefile::load_anchors(testsupport::data_path("signed_0434687.ksk.anchor"));
        zsk = zonefile::load_anchors(testsupport::data_path("signed_0434687.zsk.anchor"));
    }

    const std::vector<ResourceRecord>& naptr(const std::string& label) const
    {
        return rrsets.at({label + ".0434687.sgtin.id.onsepc.com", rrtype::NAPTR});
    }
    const std::vector<RrsigRecord>& naptr_sigs(const std::string& label) const
    {
        return sigs.at({label + ".0434687.sgtin.id.onsepc.com", rrtype::NAPTR});
    }
};

const std::uint32_t kAt = 1700000000;  // inside the fixture's validity window

}  // namespace

TEST_CASE("externally signed answers verify under the zone-signing anchor")
{
    Fixture f;
    for (const auto* label : {"075861", "075862"}) {
        auto v = dnssec::validate_rrset(f.naptr(label), f.naptr_sigs(label), f.zsk, kAt);
        CHECK_MESSAGE(v.verdict == Verdict::secure, v.detail);
    }
}

TEST_CASE("key-signing anchor authenticates the DNSKEY set, which authenticates the answers")
{
    Fixture f;
    const auto& keys = f.rrsets.at({"0434687.sgtin.id.onsepc.com", rrtype::DNSKEY});
    const auto& key_sigs = f.sigs.at({"0434687.sgtin.id.onsepc.com", rrtype::DNSKEY});
    auto v = dnssec::validate_rrset(keys, key_sigs, f.ksk, kAt);
    REQUIRE_MESSAGE(v.verdict == Verdict::secure, v.detail);
    CHECK(dnssec::validate_rrset(f.naptr("075861"), f.naptr_sigs("075861"), f.dnskeys, kAt).verdict ==
          Verdict::secure);
    // The KSK alone did not sign the NAPTR set.
    CHECK(dnssec::validate_rrset(f.naptr("075861"), f.naptr_sigs("075861"), f.ksk, kAt).verdict == Verdict::bogus);
}

TEST_CASE("every single-octet flip of the signature is bogus")
{
    Fixture f;
    const auto& rrset = f.naptr("075861");
    const auto& sig = f.naptr_sigs("075861").front();
    for (std::size_t i = 0; i < sig.sig.signature.size(); ++i) {
        auto bad = sig;
        bad.sig.signature[i] ^= 0x01;
        CHECK(dnssec::validate_rrset(rrset, std::vector{bad}, f.zsk, kAt).verdict == Verdict::bogus);
    }
}

TEST_CASE("every single-octet flip of the NAPTR data is bogus")
{
    Fixture f;
    const auto& rrset = f.naptr("075861");
    const auto& sigs = f.naptr_sigs("075861");
    for (std::size_t r = 0; r < rrset.size(); ++r)
        for (std::size_t i = 0; i < rrset[r].rdata.size(); ++i) {
            auto bad = rrset;
            bad[r].rdata[i] ^= 0x20;
            CHECK(dnssec::validate_rrset(bad, sigs, f.zsk, kAt).verdict == Verdict::bogus);
        }
}

TEST_CASE("answer order and owner case do not matter")
{
    Fixture f;
    auto rrset = f.naptr("075861");
    std::reverse(rrset.begin(), rrset.end());
    for (auto& rr : rrset)
        std::transform(rr.name.begin(), rr.name.end(), rr.name.begin(), ::toupper);
    CHECK(dnssec::validate_rrset(rrset, f.naptr_sigs("075861"), f.zsk, kAt).verdict == Verdict::secure);
}

TEST_CASE("validity window, TTL and missing signatures")
{
    Fixture f;
    const auto& rrset = f.naptr("075861");
    const auto& sigs = f.naptr_sigs("075861");
    CHECK(dnssec::validate_rrset(rrset, sigs, f.zsk, 1500000000).verdict == Verdict::bogus);
    CHECK(dnssec::validate_rrset(rrset, sigs, f.zsk, 4200000000u).verdict == Verdict::bogus);
    CHECK(dnssec::validate_rrset(rrset, {}, f.zsk, kAt).verdict == Verdict::unsigned_answer);

    auto unsupported = sigs;
    unsupported[0].sig.algorithm = 13;
    auto v = dnssec::validate_rrset(rrset, unsupported, f.zsk, kAt);
    CHECK(v.verdict == Verdict::unsigned_answer);
    CHECK(v.detail.find("unsupported-algorithm") != std::string::npos);

    auto other_signer = sigs;
    other_signer[0].sig.signer = "example.com";
    CHECK(dnssec::validate_rrset(rrset, other_signer, f.zsk, kAt).verdict == Verdict::bogus);
}

TEST_CASE("signatures are bound to the rrset they cover")
{
    Fixture f;
    // A valid signature of 075862 must not authenticate the 075861 answers.
    CHECK(dnssec::validate_rrset(f.naptr("075861"), f.naptr_sigs("075862"), f.zsk, kAt).verdict != Verdict::secure);
    auto fewer = f.naptr("075861");
    fewer.pop_back();
    CHECK(dnssec::validate_rrset(fewer, f.naptr_sigs("075861"), f.zsk, kAt).verdict == Verdict::bogus);
}

TEST_CASE("in-tree signer round trips for each RSA algorithm")
{
    const std::vector<ResourceRecord> rrset{
        {"a.example", rrtype::NAPTR, kClassIn, 60,
         naptr_to_rdata(testsupport::sample_naptr_records()[0])},
        {"a.example", rrtype::NAPTR, kClassIn, 60,
         naptr_to_rdata(testsupport::sample_naptr_records()[1])},
    };
    for (std::uint8_t alg : {dnssec::algorithm::RSASHA1, dnssec::algorithm::RSASHA1_NSEC3_SHA1,
                             dnssec::algorithm::RSASHA256, dnssec::algorithm::RSASHA512}) {
        auto key = dnssec::RsaSigningKey::generate("example", 1024, 256, alg);
        auto sig = key.sign(rrset, kAt - 10, kAt + 10);
        CHECK(sig.algorithm == alg);
        CHECK(sig.labels == 2);
        CHECK(sig.key_tag == key.dnskey().key_tag());
        auto v = dnssec::verify_rrsig(rrset, sig, key.record(), kAt);
        CHECK_MESSAGE(v.verdict == Verdict::secure, v.detail);
        auto other = dnssec::RsaSigningKey::generate("example", 1024, 256, alg);
        auto forged = sig;
        forged.key_tag = other.dnskey().key_tag();
        CHECK(dnssec::verify_rrsig(rrset, forged, other.record(), kAt).verdict == Verdict::bogus);
    }
}

TEST_CASE("wildcard-expanded answers verify against the wildcard owner")
{
    std::vector<ResourceRecord> wild{{"*.example", rrtype::NAPTR, kClassIn, 60,
                                      naptr_to_rdata(testsupport::sample_naptr_records()[0])}};
    auto key = dnssec::RsaSigningKey::generate("example", 1024, 256);
    auto sig = key.sign(wild, kAt - 10, kAt + 10);
    CHECK(sig.labels == 1);
    auto expanded = wild;
    expanded[0].name = "x.y.example";
    CHECK(dnssec::verify_rrsig(expanded, sig, key.record(), kAt).verdict == Verdict::secure);
}

TEST_CASE("keys without the zone flag are rejected")
{
    auto key = dnssec::RsaSigningKey::generate("example", 1024, 256);
    std::vector<ResourceRecord> rrset{{"example", rrtype::A, kClassIn, 60, Bytes{1, 2, 3, 4}}};
    auto sig = key.sign(rrset, kAt - 10, kAt + 10);
    auto rec = key.record();
    rec.key.flags = 0;
    sig.key_tag = rec.key.key_tag();
    CHECK(dnssec::verify_rrsig(rrset, sig, rec, kAt).verdict == Verdict::bogus);
}
