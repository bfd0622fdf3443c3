#include "onsanon/series.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "onsanon/error.hpp"
#include "onsanon/zonefile.hpp"

namespace onsanon::harness {

namespace {

std::string join(const std::vector<std::string>& parts, char sep)
{
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty())
            out += sep;
        out += p;
    }
    return out;
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find(sep, start);
        if (end == std::string_view::npos)
            end = s.size();
        if (end > start)
            out.emplace_back(s.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

}  // namespace

std::string QuerySeries::serialize() const
{
    std::string out = "# onsanon query series\n";
    out += fmt::format("# label={} seed={} sets={} length={}\n", label, seed, join(source_sets, ','), fqdns.size());
    for (const auto& f : fqdns)
        out += f + "\n";
    return out;
}

QuerySeries QuerySeries::deserialize(std::string_view text)
{
    QuerySeries s;
    std::istringstream in{std::string(text)};
    std::string line;
    std::optional<std::size_t> declared;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line.starts_with('#')) {
            for (const auto& kv : split(line.substr(1), ' ')) {
                auto eq = kv.find('=');
                if (eq == std::string::npos)
                    continue;
                auto key = kv.substr(0, eq);
                auto value = kv.substr(eq + 1);
                if (key == "label")
                    s.label = value;
                else if (key == "seed")
                    s.seed = std::stoull(value);
                else if (key == "sets")
                    s.source_sets = split(value, ',');
                else if (key == "length")
                    declared = std::stoull(value);
            }
            continue;
        }
        s.fqdns.push_back(line);
    }
    if (declared && *declared != s.fqdns.size())
        throw Error(Errc::parse, fmt::format("series declares {} names but holds {}", *declared, s.fqdns.size()));
    return s;
}

void QuerySeries::save(const std::filesystem::path& path) const
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::io, fmt::format("cannot write {}", path.string()));
    out << serialize();
}

QuerySeries QuerySeries::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io, fmt::format("cannot open {}", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

QuerySeries make_series(std::span<const std::string> pool, std::vector<std::string> source_sets, std::size_t length,
                        std::uint64_t seed, std::string label)
{
    if (pool.empty())
        throw Error(Errc::domain, "no names to sample a series from");
    if (length == 0)
        throw Error(Errc::domain, "series length must be positive");
    QuerySeries s;
    s.label = std::move(label);
    s.seed = seed;
    s.source_sets = std::move(source_sets);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < length; ++i)
        s.fqdns.push_back(pool[zonegen::uniform_below(rng, pool.size())]);
    return s;
}

QuerySeries make_series(std::span<const zonegen::ZoneSetSpec> specs, std::size_t length, std::uint64_t seed,
                        std::string label)
{
    std::vector<std::string> pool;
    std::vector<std::string> labels;
    for (const auto& spec : specs) {
        auto names = zonegen::set_fqdns(spec);
        pool.insert(pool.end(), names.begin(), names.end());
        labels.push_back(spec.label);
    }
    return make_series(pool, std::move(labels), length, seed, std::move(label));
}

std::vector<std::string> names_in_zone_dir(const std::filesystem::path& dir)
{
    std::set<std::string> names;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".zone")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
        for (const auto& rr : zonefile::load(f).records)
            if (rr.type == dns::rrtype::NAPTR)
                names.insert(dns::canonical_name(rr.name));
    return {names.begin(), names.end()};
}

}  // namespace onsanon::harness
