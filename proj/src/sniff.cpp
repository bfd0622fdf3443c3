#include "onsanon/sniff.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include <fmt/format.h>

#include "onsanon/dns_wire.hpp"
#include "onsanon/error.hpp"

namespace onsanon::harness {

namespace {

std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

bool decimal_label(std::string_view s)
{
    return !s.empty() && s.size() <= 63 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

SniffResult eavesdrop(std::istream& log, const ons::OnsNaming& naming)
{
    SniffResult result;
    std::string line;
    for (std::size_t lineno = 1; std::getline(log, line); ++lineno) {
        auto text = trim(line);
        if (text.empty() || text.front() == '#')
            continue;
        std::istringstream fields{std::string(text)};
        std::string ts_text, name;
        fields >> ts_text >> name;
        double ts = 0;
        auto [ptr, ec] = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(), ts);
        if (name.empty() || ec != std::errc{} || ptr != ts_text.data() + ts_text.size()) {
            result.warnings.push_back(fmt::format("line {}: unparseable: {}", lineno, text));
            continue;
        }
        ++result.parsed_lines;
        try {
            auto id = ons::fqdn_to_identity(name, naming);
            result.observations.push_back(Observation{ts, dns::normalize_name(name), id.company_prefix_text,
                                                      id.item_reference_text, id.scheme_label, lineno});
        } catch (const Error& e) {
            if (e.code() != Errc::not_ons)
                throw;
            ++result.skipped;
        }
    }
    return result;
}

bool Prohibition::matches(std::string_view cp, std::string_view ir) const
{
    return cp == company_prefix_text && (!item_reference_text || ir == *item_reference_text);
}

std::string Prohibition::str() const
{
    return item_reference_text ? company_prefix_text + "," + *item_reference_text : company_prefix_text;
}

PrivacyPolicy PrivacyPolicy::parse(std::string_view text)
{
    PrivacyPolicy policy;
    std::size_t lineno = 0;
    while (!text.empty()) {
        ++lineno;
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        Prohibition p;
        const auto comma = line.find(',');
        p.company_prefix_text = std::string(trim(line.substr(0, comma)));
        if (comma != std::string_view::npos)
            p.item_reference_text = std::string(trim(line.substr(comma + 1)));
        if (!decimal_label(p.company_prefix_text) || (p.item_reference_text && !decimal_label(*p.item_reference_text)))
            throw Error(Errc::parse, fmt::format("policy line {}: expected cp[,ir] decimal labels", lineno));
        policy.prohibitions.push_back(std::move(p));
    }
    return policy;
}

PrivacyPolicy PrivacyPolicy::load(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f)
        throw Error(Errc::io, fmt::format("cannot read {}", path.string()));
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

std::vector<Violation> check_policy(std::span<const Observation> observations, const PrivacyPolicy& policy)
{
    std::vector<Violation> out;
    for (const auto& obs : observations) {
        const Prohibition* hit = nullptr;
        for (const auto& rule : policy.prohibitions) {
            if (!rule.matches(obs.company_prefix_text, obs.item_reference_text))
                continue;
            if (!hit || (rule.item_reference_text && !hit->item_reference_text))
                hit = &rule;
        }
        if (hit)
            out.push_back(Violation{obs, *hit});
    }
    return out;
}

}  // namespace onsanon::harness
