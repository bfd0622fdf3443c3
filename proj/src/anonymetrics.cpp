#include "onsanon/anonymetrics.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "onsanon/error.hpp"

namespace onsanon::anonymetrics {

namespace {

constexpr double kSumTolerance = 1e-9;

}  // namespace

std::uint64_t NodeInventory::node_count() const
{
    std::uint64_t n = 0;
    for (const auto& c : classes)
        n += c.count;
    return n;
}

std::vector<double> NodeInventory::expand() const
{
    std::vector<double> out;
    out.reserve(node_count());
    for (const auto& c : classes)
        out.insert(out.end(), c.count, c.bandwidth_kbps);
    return out;
}

void NodeInventory::validate() const
{
    for (const auto& c : classes) {
        if (c.count < 1)
            throw Error(Errc::domain, "bandwidth class with zero nodes");
        if (!(c.bandwidth_kbps >= 0) || !std::isfinite(c.bandwidth_kbps))
            throw Error(Errc::domain, fmt::format("bad bandwidth {}", c.bandwidth_kbps));
    }
    if (node_count() < 1)
        throw Error(Errc::domain, "inventory has no nodes");
}

NodeInventory NodeInventory::parse_csv(std::istream& in)
{
    NodeInventory inv;
    std::string line;
    std::size_t lineno = 0;
    bool first_row = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const bool header_allowed = std::exchange(first_row, false);
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw Error(Errc::parse, fmt::format("line {}: expected bandwidth_kbps,count", lineno));
        try {
            BandwidthClass c;
            c.bandwidth_kbps = std::stod(line.substr(0, comma));
            c.count = std::stoull(line.substr(comma + 1));
            inv.classes.push_back(c);
        } catch (const std::logic_error&) {
            if (header_allowed)
                continue;  // header row
            throw Error(Errc::parse, fmt::format("line {}: '{}' is not numeric", lineno, line));
        }
    }
    inv.validate();
    return inv;
}

NodeInventory observed_tor_inventory()
{
    return NodeInventory{{
        {996, 131},
        {621, 63},
        {362, 67},
        {111, 338},
        {59, 315},
        {29, 406},
        {20, 72},
        {19, 68},
        {10, 11},
        {5, 7},
    }};
}

std::string_view model_name(SelectionModel m)
{
    return m == SelectionModel::uniform ? "uniform" : "bandwidth";
}

SelectionModel parse_model(std::string_view name)
{
    if (name == "uniform")
        return SelectionModel::uniform;
    if (name == "bandwidth" || name == "bandwidth_proportional")
        return SelectionModel::bandwidth_proportional;
    throw Error(Errc::config, fmt::format("unknown selection model '{}'", name));
}

std::vector<double> selection_distribution(const NodeInventory& inventory, SelectionModel model)
{
    inventory.validate();
    auto bw = inventory.expand();
    std::vector<double> p(bw.size());
    if (model == SelectionModel::uniform) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(bw.size()));
        return p;
    }
    const double total = std::accumulate(bw.begin(), bw.end(), 0.0);
    if (total <= 0)
        throw Error(Errc::degenerate_model, "bandwidth-proportional selection with zero total bandwidth");
    for (std::size_t i = 0; i < bw.size(); ++i)
        p[i] = bw[i] / total;
    return p;
}

double entropy(std::span<const double> probabilities)
{
    if (probabilities.empty())
        throw Error(Errc::invalid_distribution, "empty distribution");
    double sum = 0;
    double h = 0;
    for (double p : probabilities) {
        if (!(p >= 0) || p > 1)
            throw Error(Errc::invalid_distribution, fmt::format("probability {} outside [0,1]", p));
        sum += p;
        if (p > 0)
            h -= p * std::log2(p);
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw Error(Errc::invalid_distribution, fmt::format("probabilities sum to {}", sum));
    return h < 0 ? 0 : h;
}

double normalized_degree(std::span<const double> probabilities)
{
    if (probabilities.size() < 2)
        throw Error(Errc::undefined_degree, "degree of anonymity needs at least two nodes");
    return entropy(probabilities) / std::log2(static_cast<double>(probabilities.size()));
}

AnonymityReport analyze(const NodeInventory& inventory, SelectionModel model)
{
    auto p = selection_distribution(inventory, model);
    AnonymityReport r;
    r.model = model;
    r.node_count = p.size();
    r.entropy_bits = entropy(p);
    r.max_entropy_bits = std::log2(static_cast<double>(p.size()));
    r.normalized_degree = p.size() > 1 ? r.entropy_bits / r.max_entropy_bits : 0.0;
    return r;
}

double circuit_reliability(double f, unsigned path_length)
{
    if (!(f >= 0 && f <= 1))
        throw Error(Errc::domain, fmt::format("node reliability {} outside [0,1]", f));
    if (path_length < 1)
        throw Error(Errc::domain, "path length must be at least 1");
    return std::pow(f, static_cast<double>(path_length));
}

double compromise_fraction(std::uint64_t m, std::uint64_t n)
{
    if (n < 1)
        throw Error(Errc::domain, "total node count must be at least 1");
    if (m > n)
        throw Error(Errc::domain, fmt::format("{} compromised nodes exceed {} total", m, n));
    const double r = static_cast<double>(m) / static_cast<double>(n);
    return r * r;
}

double amplified_compromise(double base, double factor)
{
    if (!(base >= 0 && base <= 1))
        throw Error(Errc::domain, fmt::format("base fraction {} outside [0,1]", base));
    if (!(factor >= 0))
        throw Error(Errc::domain, fmt::format("negative amplification {}", factor));
    return std::min(1.0, base * factor);
}

FailureSummary node_failure_summary(std::span<const NodeTally> tallies)
{
    std::vector<double> rates;
    for (const auto& t : tallies) {
        auto n = t.successes + t.failures;
        if (n > 0)
            rates.push_back(static_cast<double>(t.failures) / static_cast<double>(n));
    }
    if (rates.empty())
        throw Error(Errc::domain, "no node has any observation");
    FailureSummary s;
    s.nodes = rates.size();
    s.mean = std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size());
    double var = 0;
    for (double r : rates)
        var += (r - s.mean) * (r - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(rates.size()));
    return s;
}

}  // namespace onsanon::anonymetrics
