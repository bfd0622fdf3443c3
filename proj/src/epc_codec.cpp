#include "onsanon/epc_codec.hpp"

#include <algorithm>
#include <charconv>
#include <fmt/format.h>

#include "onsanon/error.hpp"

namespace onsanon::epc {

namespace {

constexpr std::array<PartitionRow, 7> kPartitionTable{{
    {0, 40, 12, 4, 1},
    {1, 37, 11, 7, 2},
    {2, 34, 10, 10, 3},
    {3, 30, 9, 14, 4},
    {4, 27, 8, 17, 5},
    {5, 24, 7, 20, 6},
    {6, 20, 6, 24, 7},
}};

constexpr std::uint64_t pow10(unsigned n)
{
    std::uint64_t v = 1;
    while (n-- > 0)
        v *= 10;
    return v;
}

constexpr unsigned kHeaderOffset = 0;
constexpr unsigned kFilterOffset = 8;
constexpr unsigned kPartitionOffset = 11;
constexpr unsigned kCompanyOffset = 14;
constexpr unsigned kSerialOffset = 96 - kSerialBits;

int hex_value(char c)
{
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

bool all_digits(std::string_view s)
{
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::uint64_t parse_decimal(std::string_view s, std::string_view what)
{
    if (!all_digits(s))
        throw Error(Errc::malformed_uri, fmt::format("{} is not a decimal number: '{}'", what, s));
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error(Errc::overflow, fmt::format("{} out of range: '{}'", what, s));
    return v;
}

}  // namespace

PartitionRow partition_lookup(unsigned partition)
{
    if (partition >= kPartitionTable.size())
        throw Error(Errc::domain, fmt::format("partition {} outside [0,6]", partition));
    return kPartitionTable[partition];
}

PartitionRow partition_for_cp_digits(std::size_t cp_digits)
{
    for (const auto& row : kPartitionTable)
        if (row.cp_digits == cp_digits)
            return row;
    throw Error(Errc::no_partition, fmt::format("no partition has a {}-digit company prefix", cp_digits));
}

Epc96 Epc96::from_hex(std::string_view text)
{
    if (text.starts_with("0x") || text.starts_with("0X"))
        text.remove_prefix(2);
    if (text.size() != 24)
        throw Error(Errc::malformed_tag, fmt::format("expected 24 hex digits, got {}", text.size()));
    std::array<std::uint8_t, 12> octets{};
    for (std::size_t i = 0; i < 12; ++i) {
        int hi = hex_value(text[2 * i]);
        int lo = hex_value(text[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw Error(Errc::malformed_tag, fmt::format("non-hex digit in '{}'", text));
        octets[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return Epc96(octets);
}

std::string Epc96::to_hex() const
{
    std::string out = "0x";
    for (auto o : octets_)
        out += fmt::format("{:02X}", o);
    return out;
}

std::uint64_t Epc96::bits(unsigned offset, unsigned width) const
{
    std::uint64_t v = 0;
    for (unsigned i = offset; i < offset + width; ++i) {
        unsigned bit = (octets_[i / 8] >> (7 - i % 8)) & 1u;
        v = v << 1 | bit;
    }
    return v;
}

void Epc96::set_bits(unsigned offset, unsigned width, std::uint64_t value)
{
    for (unsigned k = 0; k < width; ++k) {
        unsigned i = offset + width - 1 - k;
        auto mask = static_cast<std::uint8_t>(1u << (7 - i % 8));
        if ((value >> k) & 1u)
            octets_[i / 8] |= mask;
        else
            octets_[i / 8] &= static_cast<std::uint8_t>(~mask);
    }
}

void validate(const Sgtin96Fields& f)
{
    if (f.header != kSgtin96Header)
        throw Error(Errc::unsupported_scheme, fmt::format("header 0x{:02X} is not SGTIN-96", f.header));
    if (f.filter > 7)
        throw Error(Errc::overflow, fmt::format("filter {} exceeds 3 bits", f.filter));
    const auto row = partition_lookup(f.partition);
    if (f.company_prefix >= (std::uint64_t{1} << row.cp_bits) || f.company_prefix >= pow10(row.cp_digits))
        throw Error(Errc::overflow, fmt::format("company prefix {} does not fit partition {} ({} bits, {} digits)",
                                                f.company_prefix, row.partition, row.cp_bits, row.cp_digits));
    if (f.item_reference >= (std::uint64_t{1} << row.ir_bits) || f.item_reference >= pow10(row.ir_digits))
        throw Error(Errc::overflow, fmt::format("item reference {} does not fit partition {} ({} bits, {} digits)",
                                                f.item_reference, row.partition, row.ir_bits, row.ir_digits));
    if (f.serial >= kSerialLimit)
        throw Error(Errc::overflow, fmt::format("serial {} exceeds 38 bits", f.serial));
}

Sgtin96Fields decode_sgtin96(const Epc96& raw)
{
    Sgtin96Fields f;
    f.header = static_cast<std::uint8_t>(raw.bits(kHeaderOffset, 8));
    if (f.header != kSgtin96Header)
        throw Error(Errc::unsupported_scheme, fmt::format("header 0x{:02X} is not SGTIN-96", f.header));
    f.filter = static_cast<std::uint8_t>(raw.bits(kFilterOffset, 3));
    f.partition = static_cast<std::uint8_t>(raw.bits(kPartitionOffset, 3));
    if (f.partition > 6)
        throw Error(Errc::malformed_tag, fmt::format("partition {} is reserved", f.partition));
    const auto row = kPartitionTable[f.partition];
    f.company_prefix = raw.bits(kCompanyOffset, row.cp_bits);
    f.item_reference = raw.bits(kCompanyOffset + row.cp_bits, row.ir_bits);
    f.serial = raw.bits(kSerialOffset, kSerialBits);
    try {
        validate(f);
    } catch (const Error& e) {
        throw Error(Errc::malformed_tag, e.what());
    }
    return f;
}

Epc96 encode_sgtin96(const Sgtin96Fields& f)
{
    validate(f);
    const auto row = kPartitionTable[f.partition];
    Epc96 raw;
    raw.set_bits(kHeaderOffset, 8, f.header);
    raw.set_bits(kFilterOffset, 3, f.filter);
    raw.set_bits(kPartitionOffset, 3, f.partition);
    raw.set_bits(kCompanyOffset, row.cp_bits, f.company_prefix);
    raw.set_bits(kCompanyOffset + row.cp_bits, row.ir_bits, f.item_reference);
    raw.set_bits(kSerialOffset, kSerialBits, f.serial);
    return raw;
}

std::string EpcUri::str() const
{
    return fmt::format("{}:{}.{}.{}", kSgtinScheme, company_prefix_text, item_reference_text, serial_text);
}

EpcUri fields_to_uri(const Sgtin96Fields& f)
{
    validate(f);
    const auto row = kPartitionTable[f.partition];
    return EpcUri{
        fmt::format("{:0{}}", f.company_prefix, row.cp_digits),
        fmt::format("{:0{}}", f.item_reference, row.ir_digits),
        std::to_string(f.serial),
    };
}

EpcUri split_uri(std::string_view text)
{
    if (!text.starts_with(kSgtinScheme) || text.size() <= kSgtinScheme.size() || text[kSgtinScheme.size()] != ':')
        throw Error(Errc::malformed_uri, fmt::format("not an sgtin URN: '{}'", text));
    auto body = text.substr(kSgtinScheme.size() + 1);
    auto dot1 = body.find('.');
    auto dot2 = dot1 == std::string_view::npos ? dot1 : body.find('.', dot1 + 1);
    if (dot2 == std::string_view::npos || body.find('.', dot2 + 1) != std::string_view::npos)
        throw Error(Errc::malformed_uri, fmt::format("expected CompanyPrefix.ItemReference.Serial in '{}'", text));
    EpcUri uri{std::string(body.substr(0, dot1)), std::string(body.substr(dot1 + 1, dot2 - dot1 - 1)),
               std::string(body.substr(dot2 + 1))};
    for (const auto* part : {&uri.company_prefix_text, &uri.item_reference_text, &uri.serial_text})
        if (!all_digits(*part))
            throw Error(Errc::malformed_uri, fmt::format("non-digit field '{}' in '{}'", *part, text));
    return uri;
}

Sgtin96Fields parse_uri(std::string_view text)
{
    const auto uri = split_uri(text);
    const auto row = partition_for_cp_digits(uri.company_prefix_text.size());
    if (uri.item_reference_text.size() != row.ir_digits)
        throw Error(Errc::malformed_uri, fmt::format("item reference '{}' must have {} digits for partition {}",
                                                     uri.item_reference_text, row.ir_digits, row.partition));
    Sgtin96Fields f;
    f.partition = static_cast<std::uint8_t>(row.partition);
    f.company_prefix = parse_decimal(uri.company_prefix_text, "company prefix");
    f.item_reference = parse_decimal(uri.item_reference_text, "item reference");
    f.serial = parse_decimal(uri.serial_text, "serial");
    if (f.serial >= kSerialLimit)
        throw Error(Errc::overflow, fmt::format("serial {} exceeds 38 bits", uri.serial_text));
    validate(f);
    return f;
}

}  // namespace onsanon::epc
