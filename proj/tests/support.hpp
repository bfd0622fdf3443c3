#pragma once

// Helpers and independent oracles shared by the unit and acceptance tests.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "onsanon/epc_codec.hpp"
#include "onsanon/ons_core.hpp"

namespace testsupport {

inline std::filesystem::path data_path(const std::string& name)
{
    return std::filesystem::path(ONSANON_TEST_DATA) / name;
}

inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("onsanon-test-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::uint64_t pow10(unsigned n)
{
    std::uint64_t v = 1;
    while (n--)
        v *= 10;
    return v;
}

/// Uniformly random field set that is valid for its partition.
inline onsanon::epc::Sgtin96Fields random_fields(std::mt19937_64& rng)
{
    // Digit and bit capacities written out here, not taken from the library.
    static const unsigned cp_bits[] = {40, 37, 34, 30, 27, 24, 20};
    static const unsigned cp_digits[] = {12, 11, 10, 9, 8, 7, 6};
    onsanon::epc::Sgtin96Fields f;
    f.filter = static_cast<std::uint8_t>(rng() % 8);
    f.partition = static_cast<std::uint8_t>(rng() % 7);
    const unsigned p = f.partition;
    const unsigned ir_bits = 44 - cp_bits[p];
    const unsigned ir_digits = 13 - cp_digits[p];
    auto cap = [](unsigned bits, unsigned digits) {
        return std::min<std::uint64_t>((std::uint64_t{1} << bits) - 1, pow10(digits) - 1);
    };
    f.company_prefix = rng() % (cap(cp_bits[p], cp_digits[p]) + 1);
    f.item_reference = rng() % (cap(ir_bits, ir_digits) + 1);
    f.serial = rng() % (std::uint64_t{1} << 38);
    return f;
}

/// 96-character '0'/'1' string of a 24-digit hex literal.
inline std::string hex_to_bits(std::string hex)
{
    if (hex.starts_with("0x") || hex.starts_with("0X"))
        hex = hex.substr(2);
    std::string bits;
    for (char c : hex) {
        unsigned v = std::stoul(std::string(1, c), nullptr, 16);
        for (int b = 3; b >= 0; --b)
            bits += ((v >> b) & 1) ? '1' : '0';
    }
    return bits;
}

inline std::uint64_t bits_value(const std::string& bits, std::size_t offset, std::size_t width)
{
    return std::stoull(bits.substr(offset, width), nullptr, 2);
}

/// The three NAPTR records returned for 075861.0434687.sgtin.id.onsepc.com.
inline std::vector<onsanon::ons::NaptrRecord> sample_naptr_records()
{
    return {
        onsanon::ons::parse_naptr(0, 0, "u", "EPC+html", "!.*$!http://www.example.com/products/example.asp!", "."),
        onsanon::ons::parse_naptr(0, 0, "u", "EPC+xmlrpc", "!.*$!http://gateway1.xmlrpc.com/servlet/example!", "."),
        onsanon::ons::parse_naptr(0, 1, "u", "EPC+xmlrpc", "!.*$!http://gateway2.xmlrpc.com/servlet/example!", "."),
    };
}

}  // namespace testsupport
