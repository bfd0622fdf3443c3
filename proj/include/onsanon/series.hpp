#pragma once

// Persisted random query series, replayed unchanged across transport modes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "onsanon/zonegen.hpp"

namespace onsanon::harness {

inline constexpr std::size_t kDefaultSeriesLength = 15;

struct QuerySeries {
    std::string label = "series";
    std::uint64_t seed = 0;
    std::vector<std::string> source_sets;
    std::vector<std::string> fqdns;

    /// Header comment with label/seed/sets, then one FQDN per line.
    std::string serialize() const;
    static QuerySeries deserialize(std::string_view text);

    void save(const std::filesystem::path& path) const;
    static QuerySeries load(const std::filesystem::path& path);

    bool operator==(const QuerySeries&) const = default;
};

/// Uniform sampling with replacement from `pool`.
QuerySeries make_series(std::span<const std::string> pool, std::vector<std::string> source_sets, std::size_t length,
                        std::uint64_t seed, std::string label = "series");

/// Samples over the union of the given zone sets' names.
QuerySeries make_series(std::span<const zonegen::ZoneSetSpec> specs, std::size_t length, std::uint64_t seed,
                        std::string label = "series");

/// NAPTR owner names found in every *.zone file under `dir`, sorted.
std::vector<std::string> names_in_zone_dir(const std::filesystem::path& dir);

}  // namespace onsanon::harness
