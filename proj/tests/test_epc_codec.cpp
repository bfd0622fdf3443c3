#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "onsanon/epc_codec.hpp"
#include "onsanon/error.hpp"
#include "support.hpp"

using namespace onsanon;
using namespace onsanon::epc;

namespace {

constexpr const char* kTag = "0x30141A87FC4A157FFFFFFFFF";
constexpr const char* kUri = "urn:epc:id:sgtin:0434687.075861.274877906943";

Errc code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::domain;
}

}  // namespace

TEST_CASE("partition table rows")
{
    const unsigned cp_bits[] = {40, 37, 34, 30, 27, 24, 20};
    for (unsigned p = 0; p <= 6; ++p) {
        auto row = partition_lookup(p);
        CHECK(row.cp_bits == cp_bits[p]);
        CHECK(row.cp_digits == 12 - p);
        CHECK(row.ir_bits == 44 - cp_bits[p]);
        CHECK(row.ir_digits == 1 + p);
        CHECK(8 + 3 + 3 + row.cp_bits + row.ir_bits + 38 == 96);
        CHECK(partition_for_cp_digits(row.cp_digits).partition == p);
    }
    CHECK(code_of([] { partition_lookup(7); }) == Errc::domain);
    CHECK(code_of([] { partition_for_cp_digits(13); }) == Errc::no_partition);
    CHECK(code_of([] { partition_for_cp_digits(5); }) == Errc::no_partition);
}

TEST_CASE("sample tag decodes to the expected fields")
{
    auto f = decode_sgtin96(Epc96::from_hex(kTag));
    CHECK(f.header == 0x30);
    CHECK(f.filter == 0);
    CHECK(f.partition == 5);
    CHECK(f.company_prefix == 434687);
    CHECK(f.item_reference == 75861);
    CHECK(f.serial == 274877906943ULL);
    CHECK(encode_sgtin96(f).to_hex() == kTag);
    CHECK(fields_to_uri(f).str() == kUri);
}

TEST_CASE("bit-slicing oracle agrees with the decoder on the sample tag")
{
    const auto bits = testsupport::hex_to_bits(kTag);
    REQUIRE(bits.size() == 96);
    CHECK(bits.substr(0, 8) == "00110000");
    CHECK(bits.substr(8, 3) == "000");
    CHECK(bits.substr(11, 3) == "101");
    CHECK(testsupport::bits_value(bits, 14, 24) == 0x6A1FF);
    CHECK(testsupport::bits_value(bits, 38, 20) == 0x12855);
    CHECK(testsupport::bits_value(bits, 58, 38) == 0x3FFFFFFFFFULL);
}

TEST_CASE("bit-slicing oracle agrees with the encoder on random fields")
{
    std::mt19937_64 rng(11);
    const unsigned cp_bits[] = {40, 37, 34, 30, 27, 24, 20};
    for (int i = 0; i < 2000; ++i) {
        auto f = testsupport::random_fields(rng);
        const auto bits = testsupport::hex_to_bits(encode_sgtin96(f).to_hex());
        const unsigned cb = cp_bits[f.partition];
        CHECK(testsupport::bits_value(bits, 0, 8) == 0x30);
        CHECK(testsupport::bits_value(bits, 8, 3) == f.filter);
        CHECK(testsupport::bits_value(bits, 11, 3) == f.partition);
        CHECK(testsupport::bits_value(bits, 14, cb) == f.company_prefix);
        CHECK(testsupport::bits_value(bits, 14 + cb, 44 - cb) == f.item_reference);
        CHECK(testsupport::bits_value(bits, 58, 38) == f.serial);
    }
}

TEST_CASE("round trips over random valid tags")
{
    std::mt19937_64 rng(12);
    for (int i = 0; i < 20000; ++i) {
        auto f = testsupport::random_fields(rng);
        auto raw = encode_sgtin96(f);
        CHECK(decode_sgtin96(raw) == f);
        CHECK(encode_sgtin96(decode_sgtin96(raw)) == raw);
        auto uri = fields_to_uri(f);
        const auto row = partition_lookup(f.partition);
        CHECK(uri.company_prefix_text.size() == row.cp_digits);
        CHECK(uri.item_reference_text.size() == row.ir_digits);
        auto f0 = f;
        f0.filter = 0;
        CHECK(parse_uri(uri.str()) == f0);
    }
}

TEST_CASE("hex parsing")
{
    CHECK(Epc96::from_hex("30141a87fc4a157fffffffff").to_hex() == kTag);
    // 23 digits: one short of a 96-bit tag.
    CHECK(code_of([] { Epc96::from_hex("0x30141A87FC4A157FFFFFFFF"); }) == Errc::malformed_tag);
    CHECK(code_of([] { Epc96::from_hex("0x30141A87FC4A157FFFFFFFFG"); }) == Errc::malformed_tag);
}

TEST_CASE("decode errors")
{
    auto raw = Epc96::from_hex(kTag);
    auto wrong_header = raw;
    wrong_header.set_bits(0, 8, 0x2F);
    CHECK(code_of([&] { decode_sgtin96(wrong_header); }) == Errc::unsupported_scheme);
    auto reserved = raw;
    reserved.set_bits(11, 3, 7);
    CHECK(code_of([&] { decode_sgtin96(reserved); }) == Errc::malformed_tag);
    // 24 bits hold 16777215, beyond the 7 digits of partition 5.
    auto too_many_digits = raw;
    too_many_digits.set_bits(14, 24, 10000000);
    CHECK(code_of([&] { decode_sgtin96(too_many_digits); }) == Errc::malformed_tag);
}

TEST_CASE("encode overflow")
{
    Sgtin96Fields f{0x30, 0, 5, 434687, 75861, 0};
    auto big_cp = f;
    big_cp.company_prefix = 1u << 24;
    CHECK(code_of([&] { encode_sgtin96(big_cp); }) == Errc::overflow);
    auto big_ir = f;
    big_ir.item_reference = 1000000;
    CHECK(code_of([&] { encode_sgtin96(big_ir); }) == Errc::overflow);
    auto big_serial = f;
    big_serial.serial = std::uint64_t{1} << 38;
    CHECK(code_of([&] { encode_sgtin96(big_serial); }) == Errc::overflow);
    auto big_filter = f;
    big_filter.filter = 8;
    CHECK(code_of([&] { encode_sgtin96(big_filter); }) == Errc::overflow);
}

TEST_CASE("uri rendering and parsing")
{
    CHECK(fields_to_uri(Sgtin96Fields{0x30, 0, 5, 0, 0, 0}).str() == "urn:epc:id:sgtin:0000000.000000.0");
    auto f = parse_uri(kUri);
    CHECK(f.partition == 5);
    CHECK(f.company_prefix == 434687);
    CHECK(f.item_reference == 75861);
    CHECK(f.serial == 274877906943ULL);
    CHECK(parse_uri("urn:epc:id:sgtin:123456789012.0.5").partition == 0);
    CHECK(code_of([] { parse_uri("urn:epc:id:sgtin:0434687.075861"); }) == Errc::malformed_uri);
    CHECK(code_of([] { parse_uri("urn:epc:id:sgtin:1234567890123.0.1"); }) == Errc::no_partition);
    CHECK(code_of([] { parse_uri("urn:epc:id:sgtin:0434687.75861.1"); }) == Errc::malformed_uri);
    CHECK(code_of([] { parse_uri("urn:epc:id:sgtin:0434687.0758a1.1"); }) == Errc::malformed_uri);
    CHECK(code_of([] { parse_uri("urn:epc:id:sgtin:0434687.075861.274877906944"); }) == Errc::overflow);
    CHECK(code_of([] { parse_uri("urn:epc:id:sgln:0434687.075861.1"); }) == Errc::malformed_uri);
}
