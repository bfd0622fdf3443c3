#pragma once

// Zone master-file reading and writing for the record types the toolkit
// serves (SOA, NS, A, TXT, NAPTR, RRSIG, DNSKEY, and RFC 3597 generic RDATA).

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "onsanon/dns_wire.hpp"

namespace onsanon::zonefile {

struct Zone {
    std::string origin;
    std::vector<dns::ResourceRecord> records;
};

/// Parses master-file text. `$ORIGIN` and `$TTL` directives, parentheses,
/// comments, quoted strings and blank owners are honoured.
Zone parse(std::string_view text, std::string_view origin = "", std::uint32_t default_ttl = 3600);
Zone load(const std::filesystem::path& path);

/// One absolute record per line, preceded by `$ORIGIN`.
std::string render(const Zone& zone);
std::string render_record(const dns::ResourceRecord& rr);

/// Presentation tokens (quotes already stripped) to wire RDATA.
dns::Bytes rdata_from_text(std::uint16_t type, std::span<const std::string> tokens, std::string_view origin);

/// DNSKEY records from an anchor file in master-file syntax.
std::vector<dns::DnskeyRecord> load_anchors(const std::filesystem::path& path);
std::vector<dns::DnskeyRecord> parse_anchors(std::string_view text);

/// Epoch seconds from an RRSIG YYYYMMDDHHmmSS stamp (or a plain integer).
std::uint32_t parse_rrsig_time(std::string_view text);

}  // namespace onsanon::zonefile
