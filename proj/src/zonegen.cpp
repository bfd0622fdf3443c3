#include "onsanon/zonegen.hpp"

#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "onsanon/error.hpp"

namespace onsanon::zonegen {

namespace {

constexpr std::string_view kOnsRoot = "sgtin.id.onsepc.com";

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t pow10(unsigned n)
{
    std::uint64_t v = 1;
    while (n-- > 0)
        v *= 10;
    return v;
}

std::string pad(std::uint64_t v, unsigned digits)
{
    return fmt::format("{:0{}}", v, digits);
}

}  // namespace

void ZoneSetSpec::validate() const
{
    if (cp_start > cp_end || ir_start > ir_end)
        throw Error(Errc::spec, fmt::format("set {}: empty range", label));
    if (cp_end >= pow10(cp_digits) || ir_end >= pow10(ir_digits))
        throw Error(Errc::spec, fmt::format("set {}: range exceeds digit width", label));
    if (per_name_min > per_name_max)
        throw Error(Errc::spec, fmt::format("set {}: per-name min {} exceeds max {}", label, per_name_min, per_name_max));
    const auto n = fqdn_count();
    if (total_rrs < n * per_name_min || total_rrs > n * per_name_max)
        throw Error(Errc::spec, fmt::format("set {}: {} records cannot spread over {} names at {}..{} each", label,
                                            total_rrs, n, per_name_min, per_name_max));
}

std::array<ZoneSetSpec, 3> builtin_specs(std::uint64_t seed)
{
    return {{
        {"A", 0, 2, 170, 219, 450, 1, 5, seed},
        {"B", 4160, 4169, 1123, 1222, 4000, 1, 5, seed},
        {"C", 68760, 68809, 22365, 22864, 100000, 1, 5, seed},
    }};
}

ZoneSetSpec builtin_spec(std::string_view label, std::uint64_t seed)
{
    for (auto& s : builtin_specs(seed))
        if (s.label == label)
            return s;
    throw Error(Errc::spec, fmt::format("no builtin set '{}'", label));
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n)
{
    if (n == 0)
        throw Error(Errc::domain, "uniform_below(0)");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

std::vector<unsigned> distribute_counts(std::uint64_t names, std::uint64_t total, unsigned min, unsigned max,
                                        std::mt19937_64& rng)
{
    if (min > max || total < names * min || total > names * max)
        throw Error(Errc::spec, fmt::format("{} records cannot spread over {} names at {}..{}", total, names, min, max));
    std::vector<unsigned> counts(names);
    std::uint64_t sum = 0;
    for (auto& c : counts) {
        c = min + static_cast<unsigned>(uniform_below(rng, max - min + 1));
        sum += c;
    }
    while (sum < total) {
        auto& c = counts[uniform_below(rng, names)];
        if (c < max) {
            ++c;
            ++sum;
        }
    }
    while (sum > total) {
        auto& c = counts[uniform_below(rng, names)];
        if (c > min) {
            --c;
            --sum;
        }
    }
    return counts;
}

std::vector<GeneratedZone> generate_set(const ZoneSetSpec& spec)
{
    spec.validate();
    std::mt19937_64 count_rng(splitmix64(spec.seed));
    const auto counts = distribute_counts(spec.fqdn_count(), spec.total_rrs, spec.per_name_min, spec.per_name_max,
                                          count_rng);
    std::vector<GeneratedZone> zones;
    zones.reserve(spec.zone_count());
    std::size_t idx = 0;
    for (std::uint64_t z = 0; z < spec.zone_count(); ++z) {
        // Each zone owns a stream so zones can be produced independently.
        std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(z + 1)));
        GeneratedZone zone;
        zone.company_prefix_text = pad(spec.cp_start + z, spec.cp_digits);
        zone.origin = fmt::format("{}.{}", zone.company_prefix_text, kOnsRoot);
        zone.names.reserve(spec.names_per_zone());
        for (std::uint64_t i = 0; i < spec.names_per_zone(); ++i, ++idx) {
            NameRecords name;
            const auto ir = pad(spec.ir_start + i, spec.ir_digits);
            name.fqdn = fmt::format("{}.{}", ir, zone.origin);
            for (unsigned k = 0; k < counts[idx]; ++k) {
                const char* service = uniform_below(rng, 2) == 0 ? "EPC+html" : "EPC+xmlrpc";
                auto url = fmt::format("http://epcis-{}.example.com/{}/{}", zone.company_prefix_text, ir, k);
                name.records.push_back(ons::parse_naptr(0, static_cast<std::uint16_t>(k), "u", service,
                                                        fmt::format("{}{}{}", ons::kUrlPrefixMarker, url,
                                                                    ons::kUrlSuffixMarker),
                                                        "."));
            }
            zone.names.push_back(std::move(name));
        }
        zones.push_back(std::move(zone));
    }
    return zones;
}

std::vector<std::string> set_fqdns(const ZoneSetSpec& spec)
{
    spec.validate();
    std::vector<std::string> out;
    out.reserve(spec.fqdn_count());
    for (std::uint64_t z = 0; z < spec.zone_count(); ++z)
        for (std::uint64_t i = 0; i < spec.names_per_zone(); ++i)
            out.push_back(fmt::format("{}.{}.{}", pad(spec.ir_start + i, spec.ir_digits),
                                      pad(spec.cp_start + z, spec.cp_digits), kOnsRoot));
    return out;
}

zonefile::Zone GeneratedZone::to_zone(std::uint32_t ttl) const
{
    zonefile::Zone z;
    z.origin = origin;
    dns::SoaRdata soa{"ns1." + origin, "hostmaster." + origin, serial};
    z.records.push_back(dns::ResourceRecord{origin, dns::rrtype::SOA, dns::kClassIn, ttl, soa.to_rdata()});
    z.records.push_back(
        dns::ResourceRecord{origin, dns::rrtype::NS, dns::kClassIn, ttl, dns::encode_name("ns1." + origin)});
    z.records.push_back(dns::ResourceRecord{"ns1." + origin, dns::rrtype::A, dns::kClassIn, ttl, {127, 0, 0, 1}});
    for (const auto& n : names)
        for (const auto& r : n.records)
            z.records.push_back(dns::ResourceRecord{n.fqdn, dns::rrtype::NAPTR, dns::kClassIn, ttl, dns::naptr_to_rdata(r)});
    return z;
}

std::string GeneratedZone::master_file(std::uint32_t ttl) const
{
    std::string out = fmt::format("$ORIGIN {}.\n$TTL {}\n", origin, ttl);
    out += fmt::format("@ IN SOA ns1 hostmaster {} 3600 900 604800 3600\n", serial);
    out += "@ IN NS ns1\n";
    out += "ns1 IN A 127.0.0.1\n";
    for (const auto& n : names) {
        auto label = n.fqdn.substr(0, n.fqdn.find('.'));
        for (const auto& r : n.records)
            out += fmt::format("{} IN NAPTR {}\n", label, r.rdata_text());
    }
    return out;
}

std::string ZoneStats::csv_line(std::string_view label) const
{
    return fmt::format("{},{},{}", label, fqdns, rrs);
}

ZoneStats stats(std::span<const GeneratedZone> zones)
{
    ZoneStats s;
    for (const auto& z : zones) {
        for (const auto& n : z.names) {
            ++s.fqdns;
            s.rrs += n.records.size();
            ++s.histogram[n.records.size()];
        }
    }
    return s;
}

ZoneStats stats(std::span<const zonefile::Zone> zones)
{
    ZoneStats s;
    for (const auto& z : zones) {
        std::map<std::string, std::size_t> per_name;
        for (const auto& rr : z.records)
            if (rr.type == dns::rrtype::NAPTR)
                ++per_name[dns::canonical_name(rr.name)];
        for (const auto& [name, count] : per_name) {
            ++s.fqdns;
            s.rrs += count;
            ++s.histogram[count];
        }
    }
    return s;
}

std::vector<std::filesystem::path> write_zone_files(std::span<const GeneratedZone> zones,
                                                    const std::filesystem::path& dir, std::string_view label)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    for (const auto& z : zones) {
        auto path = dir / (z.origin + ".zone");
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw Error(Errc::io, fmt::format("cannot write {}", path.string()));
        out << z.master_file();
        paths.push_back(path);
    }
    std::ofstream note(dir / "SIGNING.txt");
    note << fmt::format("Set {}: {} zones. Sign with BIND's tools, RSA keys of 1200 bits (KSK) and 1024 bits (ZSK):\n\n",
                        label, zones.size());
    for (const auto& z : zones) {
        note << fmt::format("dnssec-keygen -a RSASHA256 -b 1200 -f KSK -n ZONE {}\n", z.origin);
        note << fmt::format("dnssec-keygen -a RSASHA256 -b 1024 -n ZONE {}\n", z.origin);
        note << fmt::format("dnssec-signzone -S -o {} {}.zone\n\n", z.origin, z.origin);
    }
    return paths;
}

}  // namespace onsanon::zonegen
