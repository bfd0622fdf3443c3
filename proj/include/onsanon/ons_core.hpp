#pragma once

// EPC URN to ONS domain translation and NAPTR-based EPCIS selection.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "onsanon/epc_codec.hpp"

namespace onsanon::ons {

inline constexpr std::string_view kUrlPrefixMarker = "!.*$!";
inline constexpr std::string_view kUrlSuffixMarker = "!";
inline constexpr std::string_view kServicePrefix = "EPC+";

/// Scheme label and root suffix of ONS names. Private roots can override.
struct OnsNaming {
    std::string scheme = "sgtin";
    std::string suffix = "id.onsepc.com";
};

struct OnsFqdn {
    std::string item_reference_text;
    std::string company_prefix_text;
    std::string scheme_label = "sgtin";
    std::string suffix = "id.onsepc.com";

    std::string str() const;

    bool operator==(const OnsFqdn&) const = default;
};

/// Strip "urn:epc", drop the serial, reverse the remaining fields, turn ':'
/// into '.', then append the ONS root.
OnsFqdn uri_to_fqdn(const epc::EpcUri& uri, const OnsNaming& naming = {});

struct EpcIdentity {
    std::string company_prefix_text;
    std::string item_reference_text;
    std::string scheme_label;

    bool operator==(const EpcIdentity&) const = default;
};

/// Recovers manufacturer and product class from an ONS query name. A
/// trailing root dot and letter case are ignored.
EpcIdentity fqdn_to_identity(std::string_view fqdn, const OnsNaming& naming = {});

/// Parses an ONS query name into its labels; throws Errc::not_ons.
OnsFqdn parse_fqdn(std::string_view fqdn, const OnsNaming& naming = {});

/// The URL between "!.*$!" and the closing "!".
std::string extract_url(std::string_view regexp_field);

struct NaptrRecord {
    std::uint16_t order = 0;
    std::uint16_t preference = 0;
    std::string flags;
    std::string service;
    std::string regexp;
    std::string replacement;
    /// ONS-shape deviations noticed while parsing. Never fatal.
    std::vector<std::string> warnings;

    /// Zone-file presentation of the RDATA: order pref "flags" "service" "regexp" replacement.
    std::string rdata_text() const;

    bool operator==(const NaptrRecord& o) const
    {
        return order == o.order && preference == o.preference && flags == o.flags && service == o.service &&
               regexp == o.regexp && replacement == o.replacement;
    }
};

NaptrRecord parse_naptr(std::uint16_t order, std::uint16_t preference, std::string flags, std::string service,
                        std::string regexp, std::string replacement);

struct EpcisEndpoint {
    std::string service_name;
    std::string url;
    std::uint16_t preference = 0;
    std::uint16_t order = 0;

    bool operator==(const EpcisEndpoint&) const = default;
};

struct EndpointList {
    std::vector<EpcisEndpoint> endpoints;
    std::vector<std::string> warnings;
};

/// Every usable record as an endpoint, sorted by (service, preference,
/// order, url). Records with a malformed regexp are skipped with a warning.
EndpointList all_endpoints(std::span<const NaptrRecord> records);

/// Lowest-preference endpoint offering `service` (the bare name after
/// "EPC+", compared case-insensitively). Ties go to the lower order, then
/// the lexicographically smaller URL.
EpcisEndpoint select_endpoint(std::span<const NaptrRecord> records, std::string_view service);

}  // namespace onsanon::ons
