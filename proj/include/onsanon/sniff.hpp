#pragma once

// Passive eavesdropper over ONS query logs and privacy-policy matching.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "onsanon/ons_core.hpp"

namespace onsanon::harness {

struct Observation {
    double timestamp = 0;
    std::string fqdn;
    std::string company_prefix_text;
    std::string item_reference_text;
    std::string scheme;
    std::size_t line = 0;
};

struct SniffResult {
    std::vector<Observation> observations;
    /// Lines that parsed as (timestamp, name); blanks and comments excluded.
    std::size_t parsed_lines = 0;
    /// Parsed names that are not ONS-shaped.
    std::size_t skipped = 0;
    std::vector<std::string> warnings;
};

/// Log lines are `<epoch-seconds> <name> [type]`.
SniffResult eavesdrop(std::istream& log, const ons::OnsNaming& naming = {});

struct Prohibition {
    std::string company_prefix_text;
    /// Absent means every item of the manufacturer.
    std::optional<std::string> item_reference_text;

    bool matches(std::string_view cp, std::string_view ir) const;
    std::string str() const;
    bool operator==(const Prohibition&) const = default;
};

struct PrivacyPolicy {
    std::vector<Prohibition> prohibitions;

    /// Lines `cp[,ir]`; '#' starts a comment. Throws Errc::parse.
    static PrivacyPolicy parse(std::string_view text);
    static PrivacyPolicy load(const std::filesystem::path& path);
};

struct Violation {
    Observation observation;
    Prohibition rule;
};

/// One violation per matching observation. An exact-pair rule wins over a
/// manufacturer-wide one.
std::vector<Violation> check_policy(std::span<const Observation> observations, const PrivacyPolicy& policy);

}  // namespace onsanon::harness
