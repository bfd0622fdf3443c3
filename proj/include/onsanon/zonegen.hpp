#pragma once

// Testbed ONS databases: company-prefix zones whose names carry a random
// number of NAPTR records summing to an exact total.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "onsanon/ons_core.hpp"
#include "onsanon/zonefile.hpp"

namespace onsanon::zonegen {

inline constexpr std::uint64_t kDefaultSeed = 20080501;

struct ZoneSetSpec {
    std::string label;
    std::uint64_t cp_start = 0;
    std::uint64_t cp_end = 0;
    std::uint64_t ir_start = 0;
    std::uint64_t ir_end = 0;
    std::uint64_t total_rrs = 0;
    unsigned per_name_min = 1;
    unsigned per_name_max = 5;
    std::uint64_t seed = kDefaultSeed;
    unsigned cp_digits = 7;
    unsigned ir_digits = 6;

    std::uint64_t zone_count() const { return cp_end - cp_start + 1; }
    std::uint64_t names_per_zone() const { return ir_end - ir_start + 1; }
    std::uint64_t fqdn_count() const { return zone_count() * names_per_zone(); }

    /// Throws Errc::spec on inverted ranges, digit overflow, or a total
    /// outside [fqdn_count * min, fqdn_count * max].
    void validate() const;
};

/// Sets A, B and C of the testbed.
std::array<ZoneSetSpec, 3> builtin_specs(std::uint64_t seed = kDefaultSeed);
ZoneSetSpec builtin_spec(std::string_view label, std::uint64_t seed = kDefaultSeed);

struct NameRecords {
    std::string fqdn;
    std::vector<ons::NaptrRecord> records;
};

struct GeneratedZone {
    std::string company_prefix_text;
    std::string origin;
    std::uint32_t serial = 1;
    std::vector<NameRecords> names;

    zonefile::Zone to_zone(std::uint32_t ttl = 3600) const;
    std::string master_file(std::uint32_t ttl = 3600) const;
};

/// Bounded uniform draw in [0, n) that yields the same sequence on every
/// standard library, unlike std::uniform_int_distribution.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

/// Per-name counts in [min, max] summing to `total`: draw uniformly, then
/// nudge seeded-random positions by one until the sum matches.
std::vector<unsigned> distribute_counts(std::uint64_t names, std::uint64_t total, unsigned min, unsigned max,
                                        std::mt19937_64& rng);

std::vector<GeneratedZone> generate_set(const ZoneSetSpec& spec);

/// Every FQDN of the set in zone order, without generating records.
std::vector<std::string> set_fqdns(const ZoneSetSpec& spec);

struct ZoneStats {
    std::uint64_t fqdns = 0;
    std::uint64_t rrs = 0;
    /// records-per-name -> number of names
    std::map<std::size_t, std::uint64_t> histogram;

    std::string csv_line(std::string_view label) const;
};

ZoneStats stats(std::span<const GeneratedZone> zones);
/// Counts NAPTR owners and records in loaded zones.
ZoneStats stats(std::span<const zonefile::Zone> zones);

/// Writes one master file per zone plus a signing note; returns the zone paths.
std::vector<std::filesystem::path> write_zone_files(std::span<const GeneratedZone> zones,
                                                    const std::filesystem::path& dir, std::string_view label);

}  // namespace onsanon::zonegen
