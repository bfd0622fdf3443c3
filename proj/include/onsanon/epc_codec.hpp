#pragma once

// SGTIN-96 tag codec and the pure-identity EPC URN form.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace onsanon::epc {

inline constexpr std::uint8_t kSgtin96Header = 0x30;
inline constexpr unsigned kSerialBits = 38;
inline constexpr std::uint64_t kSerialLimit = std::uint64_t{1} << kSerialBits;
inline constexpr std::string_view kSgtinScheme = "urn:epc:id:sgtin";

/// One row of the SGTIN partition table. Company prefix and item reference
/// always share 44 bits.
struct PartitionRow {
    unsigned partition;
    unsigned cp_bits;
    unsigned cp_digits;
    unsigned ir_bits;
    unsigned ir_digits;

    bool operator==(const PartitionRow&) const = default;
};

PartitionRow partition_lookup(unsigned partition);

/// Partition whose company-prefix digit count is `cp_digits`.
PartitionRow partition_for_cp_digits(std::size_t cp_digits);

/// A raw 96-bit tag value, most significant octet first.
class Epc96 {
public:
    Epc96() = default;
    explicit Epc96(const std::array<std::uint8_t, 12>& octets) : octets_(octets) {}

    /// Accepts 24 hex digits with an optional 0x prefix.
    static Epc96 from_hex(std::string_view text);
    /// "0x" followed by 24 uppercase hex digits.
    std::string to_hex() const;

    const std::array<std::uint8_t, 12>& octets() const { return octets_; }

    /// Reads `width` bits starting at `offset`, where offset 0 is the MSB.
    std::uint64_t bits(unsigned offset, unsigned width) const;
    void set_bits(unsigned offset, unsigned width, std::uint64_t value);

    bool operator==(const Epc96&) const = default;

private:
    std::array<std::uint8_t, 12> octets_{};
};

struct Sgtin96Fields {
    std::uint8_t header = kSgtin96Header;
    std::uint8_t filter = 0;
    std::uint8_t partition = 0;
    std::uint64_t company_prefix = 0;
    std::uint64_t item_reference = 0;
    std::uint64_t serial = 0;

    bool operator==(const Sgtin96Fields&) const = default;
};

/// Throws Errc::overflow (or Errc::domain for a bad header/partition) when
/// a field does not fit its partition row.
void validate(const Sgtin96Fields& fields);

Sgtin96Fields decode_sgtin96(const Epc96& raw);
Epc96 encode_sgtin96(const Sgtin96Fields& fields);

struct EpcUri {
    std::string company_prefix_text;
    std::string item_reference_text;
    std::string serial_text;

    std::string str() const;

    bool operator==(const EpcUri&) const = default;
};

EpcUri fields_to_uri(const Sgtin96Fields& fields);

/// Splits the URN into its textual parts without range checks beyond shape.
EpcUri split_uri(std::string_view text);

Sgtin96Fields parse_uri(std::string_view text);

}  // namespace onsanon::epc
