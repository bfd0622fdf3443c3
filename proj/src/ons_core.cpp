#include "onsanon/ons_core.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <tuple>

#include <fmt/format.h>

#include "onsanon/error.hpp"

namespace onsanon::ons {

namespace {

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

bool all_digits(std::string_view s)
{
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void check_name_limits(const std::string& name)
{
    if (name.size() > 253)
        throw Error(Errc::encoding, fmt::format("name of {} octets exceeds 253", name.size()));
    std::size_t start = 0;
    while (start <= name.size()) {
        auto dot = name.find('.', start);
        auto len = (dot == std::string::npos ? name.size() : dot) - start;
        if (len == 0 || len > 63)
            throw Error(Errc::encoding, fmt::format("bad label length {} in '{}'", len, name));
        if (dot == std::string::npos)
            break;
        start = dot + 1;
    }
}

/// Bare service name if `service` has the "EPC+" prefix.
std::optional<std::string> service_name(std::string_view service)
{
    if (service.size() < kServicePrefix.size() || !iequals(service.substr(0, kServicePrefix.size()), kServicePrefix))
        return std::nullopt;
    return std::string(service.substr(kServicePrefix.size()));
}

}  // namespace

std::string OnsFqdn::str() const
{
    return fmt::format("{}.{}.{}.{}", item_reference_text, company_prefix_text, scheme_label, suffix);
}

OnsFqdn uri_to_fqdn(const epc::EpcUri& uri, const OnsNaming& naming)
{
    OnsFqdn fqdn{uri.item_reference_text, uri.company_prefix_text, naming.scheme, naming.suffix};
    check_name_limits(fqdn.str());
    return fqdn;
}

OnsFqdn parse_fqdn(std::string_view text, const OnsNaming& naming)
{
    if (text.ends_with('.'))
        text.remove_suffix(1);
    const std::string tail = "." + naming.scheme + "." + naming.suffix;
    if (text.size() <= tail.size() || !iequals(text.substr(text.size() - tail.size()), tail))
        throw Error(Errc::not_ons, fmt::format("'{}' is not under {}", text, tail.substr(1)));
    auto head = text.substr(0, text.size() - tail.size());
    auto dot = head.find('.');
    if (dot == std::string_view::npos || head.find('.', dot + 1) != std::string_view::npos)
        throw Error(Errc::not_ons, fmt::format("'{}' lacks exactly two identity labels", text));
    auto ir = head.substr(0, dot);
    auto cp = head.substr(dot + 1);
    if (!all_digits(ir) || !all_digits(cp))
        throw Error(Errc::not_ons, fmt::format("identity labels of '{}' are not decimal", text));
    OnsFqdn fqdn{std::string(ir), std::string(cp), naming.scheme, naming.suffix};
    check_name_limits(fqdn.str());
    return fqdn;
}

EpcIdentity fqdn_to_identity(std::string_view text, const OnsNaming& naming)
{
    auto fqdn = parse_fqdn(text, naming);
    return EpcIdentity{fqdn.company_prefix_text, fqdn.item_reference_text, lower(fqdn.scheme_label)};
}

std::string extract_url(std::string_view field)
{
    if (!field.starts_with(kUrlPrefixMarker))
        throw Error(Errc::malformed_regexp, fmt::format("'{}' lacks the leading {} marker", field, kUrlPrefixMarker));
    auto rest = field.substr(kUrlPrefixMarker.size());
    auto end = rest.find('!');
    if (end == std::string_view::npos)
        throw Error(Errc::malformed_regexp, fmt::format("'{}' lacks the closing ! marker", field));
    if (end + 1 != rest.size())
        throw Error(Errc::malformed_regexp, fmt::format("trailing data after closing ! in '{}'", field));
    if (end == 0)
        throw Error(Errc::malformed_regexp, fmt::format("empty URL in '{}'", field));
    return std::string(rest.substr(0, end));
}

std::string NaptrRecord::rdata_text() const
{
    return fmt::format("{} {} \"{}\" \"{}\" \"{}\" {}", order, preference, flags, service, regexp, replacement);
}

NaptrRecord parse_naptr(std::uint16_t order, std::uint16_t preference, std::string flags, std::string service,
                        std::string regexp, std::string replacement)
{
    extract_url(regexp);
    NaptrRecord r{order, preference, std::move(flags), std::move(service), std::move(regexp), std::move(replacement), {}};
    if (r.order != 0)
        r.warnings.push_back(fmt::format("order {} is not 0", r.order));
    if (!iequals(r.flags, "u"))
        r.warnings.push_back(fmt::format("flags '{}' is not \"u\"", r.flags));
    if (r.replacement != ".")
        r.warnings.push_back(fmt::format("replacement '{}' is not \".\"", r.replacement));
    if (auto name = service_name(r.service); !name || name->empty())
        r.warnings.push_back(fmt::format("service '{}' does not start with EPC+", r.service));
    return r;
}

EndpointList all_endpoints(std::span<const NaptrRecord> records)
{
    EndpointList out;
    for (const auto& r : records) {
        try {
            auto url = extract_url(r.regexp);
            auto name = service_name(r.service).value_or(r.service);
            out.endpoints.push_back(EpcisEndpoint{std::move(name), std::move(url), r.preference, r.order});
        } catch (const Error& e) {
            out.warnings.push_back(fmt::format("skipped record for service '{}': {}", r.service, e.what()));
        }
    }
    auto key = [](const EpcisEndpoint& e) { return std::tie(e.service_name, e.preference, e.order, e.url); };
    std::sort(out.endpoints.begin(), out.endpoints.end(),
              [&](const EpcisEndpoint& a, const EpcisEndpoint& b) { return key(a) < key(b); });
    return out;
}

EpcisEndpoint select_endpoint(std::span<const NaptrRecord> records, std::string_view service)
{
    const EpcisEndpoint* best = nullptr;
    auto all = all_endpoints(records);
    for (const auto& e : all.endpoints) {
        if (!iequals(e.service_name, service))
            continue;
        if (!best || std::tie(e.preference, e.order, e.url) < std::tie(best->preference, best->order, best->url))
            best = &e;
    }
    if (!best)
        throw Error(Errc::service_not_found, fmt::format("no EPC+{} record among {} records", service, records.size()));
    return *best;
}

}  // namespace onsanon::ons
