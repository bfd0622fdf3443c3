// Acceptance checks: one PASS/FAIL line per criterion.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "onsanon/anonymetrics.hpp"
#include "onsanon/bench.hpp"
#include "onsanon/epc_codec.hpp"
#include "onsanon/error.hpp"
#include "onsanon/ons_core.hpp"
#include "onsanon/series.hpp"
#include "onsanon/sniff.hpp"
#include "onsanon/stub.hpp"
#include "onsanon/transport.hpp"
#include "onsanon/zonefile.hpp"
#include "onsanon/zonegen.hpp"
#include "support.hpp"

using namespace onsanon;

namespace {

constexpr const char* kTag = "0x30141A87FC4A157FFFFFFFFF";
constexpr const char* kUri = "urn:epc:id:sgtin:0434687.075861.274877906943";
constexpr const char* kName = "075861.0434687.sgtin.id.onsepc.com";

/// Collects failure reasons for one criterion.
struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what)
    {
        if (!ok)
            failures.push_back(what);
    }
};

using Body = std::function<void(Check&)>;

struct Criterion {
    int id;
    std::string title;
    double limit_s;
    Body body;
};

std::vector<zonefile::Zone> set_a_zones()
{
    std::vector<zonefile::Zone> zones;
    for (const auto& z : zonegen::generate_set(zonegen::builtin_spec("A")))
        zones.push_back(z.to_zone());
    return zones;
}

zonefile::Zone fixture_zone()
{
    return zonefile::load(testsupport::data_path("signed_0434687.zone"));
}

std::vector<dns::DnskeyRecord> fixture_anchor()
{
    return zonefile::load_anchors(testsupport::data_path("signed_0434687.zsk.anchor"));
}

transport::TransportConfig config(const std::string& mode, const net::Endpoint& ns,
                                  std::optional<net::Endpoint> proxy = {})
{
    transport::TransportConfig c;
    c.mode = transport::Mode::parse(mode);
    c.nameserver = ns;
    c.proxy = proxy;
    c.timeout = std::chrono::milliseconds(2000);
    return c;
}

std::vector<std::string> sorted_rdata(const std::vector<ons::NaptrRecord>& records)
{
    std::vector<std::string> out;
    for (const auto& r : records)
        out.push_back(r.rdata_text());
    std::sort(out.begin(), out.end());
    return out;
}

void codec_fidelity(Check& c)
{
    auto raw = epc::Epc96::from_hex(kTag);
    auto f = epc::decode_sgtin96(raw);
    c.expect(f.filter == 0, fmt::format("filter {}", f.filter));
    c.expect(f.partition == 5, fmt::format("partition {}", f.partition));
    c.expect(f.company_prefix == 434687, fmt::format("company prefix {}", f.company_prefix));
    c.expect(f.item_reference == 75861, fmt::format("item reference {}", f.item_reference));
    c.expect(f.serial == 274877906943ULL, fmt::format("serial {}", f.serial));
    c.expect(epc::encode_sgtin96(f).to_hex() == kTag, "re-encoding differs");
    c.expect(epc::fields_to_uri(f).str() == kUri, "uri " + epc::fields_to_uri(f).str());
}

void translation(Check& c)
{
    auto fqdn = ons::uri_to_fqdn(epc::split_uri(kUri)).str();
    c.expect(fqdn == kName, "fqdn " + fqdn);
}

void naptr_selection(Check& c)
{
    auto recs = testsupport::sample_naptr_records();
    auto xml = ons::select_endpoint(recs, "xmlrpc");
    c.expect(xml.url == "http://gateway1.xmlrpc.com/servlet/example", "xmlrpc -> " + xml.url);
    c.expect(xml.preference == 0, "xmlrpc preference");
    auto html = ons::select_endpoint(recs, "html");
    c.expect(html.url == "http://www.example.com/products/example.asp", "html -> " + html.url);
}

void zone_totals(Check& c)
{
    const std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> expected{
        {"A", {150, 450}}, {"B", {1000, 4000}}, {"C", {25000, 100000}}};
    for (const auto& spec : zonegen::builtin_specs()) {
        auto zones = zonegen::generate_set(spec);
        auto s = zonegen::stats(zones);
        const auto& [fqdns, rrs] = expected.at(spec.label);
        c.expect(s.fqdns == fqdns, fmt::format("set {} fqdns {}", spec.label, s.fqdns));
        c.expect(s.rrs == rrs, fmt::format("set {} rrs {}", spec.label, s.rrs));
        // Recount directly from the generated records.
        std::uint64_t names = 0, records = 0;
        for (const auto& z : zones)
            for (const auto& n : z.names) {
                ++names;
                records += n.records.size();
                c.expect(n.records.size() >= 1 && n.records.size() <= 5,
                         fmt::format("set {} name {} has {} records", spec.label, n.fqdn, n.records.size()));
            }
        c.expect(names == fqdns && records == rrs, fmt::format("set {} recount {} {}", spec.label, names, records));
        auto again = zonegen::generate_set(spec);
        bool same = again.size() == zones.size();
        for (std::size_t i = 0; same && i < zones.size(); ++i)
            same = zones[i].master_file() == again[i].master_file();
        c.expect(same, fmt::format("set {} not deterministic", spec.label));
    }
}

void anonymity_degree(Check& c)
{
    auto inv = anonymetrics::observed_tor_inventory();
    c.expect(inv.node_count() == 1478, fmt::format("N {}", inv.node_count()));
    auto rep = anonymetrics::analyze(inv, anonymetrics::SelectionModel::bandwidth_proportional);
    c.expect(std::abs(rep.normalized_degree - 0.89) <= 0.02, fmt::format("degree {:.6f}", rep.normalized_degree));
}

void reliability(Check& c)
{
    const double r = anonymetrics::circuit_reliability(0.88, 3);
    c.expect(std::abs(r - 0.6815) <= 0.0005, fmt::format("reliability {:.6f}", r));
}

void amplification(Check& c)
{
    const double lo = anonymetrics::amplified_compromise(0.0021, 70);
    const double hi = anonymetrics::amplified_compromise(0.0067, 70);
    c.expect(lo >= 0.14 && lo <= 0.155, fmt::format("low endpoint {:.4f}", lo));
    c.expect(hi >= 0.46 && hi <= 0.48, fmt::format("high endpoint {:.4f}", hi));
}

void end_to_end(Check& c)
{
    auto zones = set_a_zones();
    auto signed_zones = harness::sign_zones(zones);
    // The nameserver delay stands in for the path to a remote server.
    harness::NameserverOptions nso;
    nso.delay = std::chrono::milliseconds(10);
    harness::StubNameserver plain_ns(zones, nso);
    harness::StubNameserver signed_ns(signed_zones.zones, nso);
    harness::ProxyOptions po;
    po.delay = std::chrono::milliseconds(50);
    harness::StubSocksProxy proxy(po);

    auto specs = zonegen::builtin_specs();
    auto series = harness::make_series(std::span(specs).first(1), harness::kDefaultSeriesLength, 2008, "e2e");

    auto configs_for = [&](const net::Endpoint& proxy_ep) {
        std::vector<transport::TransportConfig> cfg{
            config("direct-dns", plain_ns.endpoint()), config("direct-dnssec", signed_ns.endpoint()),
            config("tor-dns", plain_ns.endpoint(), proxy_ep), config("tor-dnssec", signed_ns.endpoint(), proxy_ep)};
        for (auto& x : cfg)
            if (x.mode.dnssec())
                x.trust_anchors = signed_zones.zsk_anchors;
        return cfg;
    };
    auto configs = configs_for(proxy.endpoint());
    harness::BenchOptions opts;
    opts.parallelism = 1;
    auto report = harness::run_bench(series, configs, opts);

    const std::vector<std::string> modes{"direct-dns", "direct-dnssec", "tor-dns", "tor-dnssec"};
    for (const auto& m : modes) {
        auto st = report.status(m);
        c.expect(st && !st->failed, m + " failed");
    }
    std::size_t failed = 0;
    for (const auto& s : report.samples)
        failed += s.outcome == harness::Outcome::failed;
    c.expect(failed == 0, fmt::format("{} failed queries", failed));

    // (a) same answers for a name in every mode and every repetition.
    std::map<std::string, std::vector<std::string>> answers;
    for (const auto& s : report.samples) {
        if (s.outcome != harness::Outcome::ok)
            continue;
        auto got = sorted_rdata(s.records);
        auto [it, fresh] = answers.emplace(s.fqdn, got);
        c.expect(fresh || it->second == got, fmt::format("(a) {} differs in {}", s.fqdn, s.mode));
        c.expect(!got.empty(), fmt::format("(a) {} empty in {}", s.fqdn, s.mode));
    }
    std::set<std::string> distinct(series.fqdns.begin(), series.fqdns.end());
    c.expect(answers.size() == distinct.size(), "(a) not every name answered");

    for (std::size_t k = 1; k <= series.fqdns.size(); ++k) {
        auto dd = report.row("direct-dns", k);
        auto ds = report.row("direct-dnssec", k);
        auto td = report.row("tor-dns", k);
        auto ts = report.row("tor-dnssec", k);
        if (!dd || !ds || !td || !ts) {
            c.expect(false, fmt::format("missing row at k={}", k));
            continue;
        }
        // (b)
        c.expect(td->mean_ms - dd->mean_ms >= 45,
                 fmt::format("(b) k={} tor-dns {:.2f} vs direct-dns {:.2f}", k, td->mean_ms, dd->mean_ms));
        c.expect(ts->mean_ms - ds->mean_ms >= 45,
                 fmt::format("(b) k={} tor-dnssec {:.2f} vs direct-dnssec {:.2f}", k, ts->mean_ms, ds->mean_ms));
    }
    // (c) over every sample of the two direct modes. Plain answers above 512
    // octets take a second round trip over TCP, so single groups swing more.
    auto pooled_mean = [&](const std::string& mode) {
        double sum = 0;
        std::size_t n = 0;
        for (const auto& s : report.samples)
            if (s.mode == mode && s.outcome == harness::Outcome::ok) {
                sum += s.rtt_ms;
                ++n;
            }
        return n ? sum / static_cast<double>(n) : std::nan("");
    };
    const double plain = pooled_mean("direct-dns");
    const double secured = pooled_mean("direct-dnssec");
    c.expect(std::abs(secured - plain) <= 0.2 * plain,
             fmt::format("(c) direct-dnssec {:.2f} vs direct-dns {:.2f}", secured, plain));
    std::cout << fmt::format("  8: pooled direct means: dns {:.2f} ms, dnssec {:.2f} ms\n", plain, secured);

    // (d) intermittent relay failure absorbed by retries.
    harness::ProxyOptions lossy = po;
    lossy.drop_rate = 0.12;
    lossy.seed = 12;
    harness::StubSocksProxy flaky(lossy);
    auto all = configs_for(flaky.endpoint());
    std::vector<transport::TransportConfig> tor{all[2], all[3]};
    for (auto& x : tor)
        x.max_retries = 3;
    auto lossy_report = harness::run_bench(series, tor, opts);
    unsigned retries = 0, failures = 0;
    for (const auto& r : lossy_report.rows) {
        retries += r.retries;
        failures += r.failures;
    }
    c.expect(failures == 0, fmt::format("(d) {} failures", failures));
    c.expect(retries > 0, "(d) no retries");
    c.expect(flaky.dropped() > 0, "(d) proxy dropped nothing");
    std::cout << fmt::format("  8: lossy run dropped {} of {} connections, {} retries\n", flaky.dropped(),
                             flaky.connections(), retries);
    for (std::size_t k : {std::size_t{1}, series.fqdns.size()})
        for (const auto& m : modes)
            if (auto r = report.row(m, k))
                std::cout << fmt::format("  8: {} k={} mean {:.2f} ms\n", m, k, r->mean_ms);
}

void dnssec_integrity(Check& c)
{
    auto zones = set_a_zones();
    auto signed_zones = harness::sign_zones(zones);
    auto all_zones = signed_zones.zones;
    all_zones.push_back(fixture_zone());
    auto anchors = signed_zones.zsk_anchors;
    for (const auto& a : fixture_anchor())
        anchors.push_back(a);

    {
        harness::StubNameserver ns(all_zones);
        auto cfg = config("direct-dnssec", ns.endpoint());
        cfg.trust_anchors = anchors;
        auto names = zonegen::set_fqdns(zonegen::builtin_spec("A"));
        names.push_back(kName);
        std::size_t secure = 0;
        for (const auto& n : names) {
            try {
                auto r = transport::resolve(n, cfg);
                secure += r.verification && r.verification->verdict == dnssec::Verdict::secure;
            } catch (const Error& e) {
                c.expect(false, n + ": " + e.what());
            }
        }
        c.expect(secure == names.size(), fmt::format("{} of {} answers secure", secure, names.size()));
    }

    // Every single-octet change of the answer or its signature, served live.
    const auto base = fixture_zone();
    struct Flip {
        std::size_t record;
        std::size_t offset;
    };
    std::vector<Flip> flips;
    for (std::size_t i = 0; i < base.records.size(); ++i) {
        const auto& rr = base.records[i];
        if (dns::canonical_name(rr.name) != kName)
            continue;
        if (rr.type == dns::rrtype::NAPTR) {
            for (std::size_t o = 0; o < rr.rdata.size(); ++o)
                flips.push_back({i, o});
        } else if (rr.type == dns::rrtype::RRSIG) {
            const auto sig = dns::RrsigRdata::from_rdata(rr.rdata);
            for (std::size_t o = rr.rdata.size() - sig.signature.size(); o < rr.rdata.size(); ++o)
                flips.push_back({i, o});
        }
    }
    c.expect(flips.size() > 300, fmt::format("only {} flip positions", flips.size()));

    std::atomic<std::size_t> next{0}, caught{0};
    std::mutex m;
    std::vector<std::string> escaped;
    auto worker = [&] {
        for (std::size_t i = next++; i < flips.size(); i = next++) {
            auto zone = base;
            zone.records[flips[i].record].rdata[flips[i].offset] ^= 0x01;
            harness::StubNameserver ns({zone});
            auto cfg = config("direct-dnssec", ns.endpoint());
            cfg.trust_anchors = fixture_anchor();
            bool strict_ok = false;
            try {
                auto r = transport::resolve(kName, cfg);
                (void)r;
            } catch (const Error& e) {
                strict_ok = e.code() == Errc::verification_failed;
            }
            cfg.strict = false;
            bool permissive_ok = false;
            try {
                auto r = transport::resolve(kName, cfg);
                permissive_ok = r.verification && r.verification->verdict == dnssec::Verdict::bogus;
            } catch (const Error& e) {
                // An undecodable answer never reaches the caller either way.
                permissive_ok = e.code() == Errc::decode;
            }
            if (strict_ok && permissive_ok) {
                ++caught;
            } else {
                std::lock_guard lock(m);
                escaped.push_back(fmt::format("record {} octet {}", flips[i].record, flips[i].offset));
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < 8; ++t)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    c.expect(caught == flips.size(),
             fmt::format("{} of {} flips not rejected{}", flips.size() - caught, flips.size(),
                         escaped.empty() ? "" : " (first: " + escaped.front() + ")"));
    std::cout << fmt::format("  9: {} single-octet flips rejected\n", caught.load());
}

void attack_demo(Check& c)
{
    auto zones = set_a_zones();
    zones.push_back(fixture_zone());
    harness::StubNameserver ns(zones);
    harness::StubSocksProxy proxy;

    // Set A traffic with the tracked product looked up among it.
    auto specs = zonegen::builtin_specs();
    auto series = harness::make_series(std::span(specs).first(1), 13, 77, "attack");
    series.fqdns.insert(series.fqdns.begin() + 4, kName);
    series.fqdns.insert(series.fqdns.begin() + 11, kName);
    series.fqdns.push_back("075862.0434687.sgtin.id.onsepc.com");

    auto cfg = config("tor-dns", ns.endpoint(), proxy.endpoint());
    for (const auto& f : series.fqdns)
        transport::resolve(f, cfg);

    std::string text;
    std::size_t expected = 0;
    for (const auto& line : ns.query_log()) {
        text += line + "\n";
        std::istringstream fields(line);
        std::string ts, name, type;
        fields >> ts >> name >> type;
        expected += name == kName && type == "NAPTR";
    }
    c.expect(expected == 2, fmt::format("log holds {} lookups of the pair", expected));

    std::istringstream log(text);
    auto observed = harness::eavesdrop(log);
    c.expect(observed.observations.size() == series.fqdns.size(),
             fmt::format("{} observations for {} queries", observed.observations.size(), series.fqdns.size()));
    auto policy = harness::PrivacyPolicy::parse("0434687,075861\n");
    auto violations = harness::check_policy(observed.observations, policy);
    c.expect(violations.size() == expected, fmt::format("{} violations, expected {}", violations.size(), expected));
    for (const auto& v : violations)
        c.expect(v.observation.fqdn == kName, "violation for " + v.observation.fqdn);
}

void property_suites(Check& c)
{
    std::mt19937_64 rng(1996);

    std::size_t codec_bad = 0;
    for (int i = 0; i < 100000; ++i) {
        auto f = testsupport::random_fields(rng);
        auto raw = epc::encode_sgtin96(f);
        auto bits = testsupport::hex_to_bits(raw.to_hex());
        const bool fields_ok = testsupport::bits_value(bits, 0, 8) == 0x30 && epc::decode_sgtin96(raw) == f &&
                               epc::Epc96::from_hex(raw.to_hex()) == raw &&
                               epc::parse_uri(epc::fields_to_uri(f).str()).company_prefix == f.company_prefix;
        codec_bad += !fields_ok;
    }
    c.expect(codec_bad == 0, fmt::format("{} codec round trips failed", codec_bad));

    std::uniform_real_distribution<double> u(0, 1);
    std::size_t entropy_bad = 0;
    for (int t = 0; t < 2000; ++t) {
        const std::size_t n = 2 + rng() % 300;
        std::vector<double> p(n);
        double s = 0;
        for (auto& x : p) {
            x = rng() % 4 == 0 ? 0.0 : u(rng);
            s += x;
        }
        if (s == 0)
            continue;
        for (auto& x : p)
            x /= s;
        const double h = anonymetrics::entropy(p);
        const double hmax = anonymetrics::entropy(std::vector<double>(n, 1.0 / static_cast<double>(n)));
        entropy_bad += !(h >= 0 && h <= std::log2(static_cast<double>(n)) + 1e-9 && h <= hmax + 1e-9 &&
                         std::abs(hmax - std::log2(static_cast<double>(n))) < 1e-9);
    }
    c.expect(entropy_bad == 0, fmt::format("{} entropy bound violations", entropy_bad));

    const std::vector<std::string> services{"html", "xmlrpc", "soap", "ws"};
    std::size_t select_bad = 0;
    for (int t = 0; t < 3000; ++t) {
        std::vector<ons::NaptrRecord> recs;
        const int n = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i)
            recs.push_back(ons::parse_naptr(static_cast<std::uint16_t>(rng() % 3), static_cast<std::uint16_t>(rng() % 4),
                                            "u", "EPC+" + services[rng() % services.size()],
                                            "!.*$!http://h" + std::to_string(rng() % 6) + "/!", "."));
        const auto& want = services[rng() % services.size()];
        const ons::NaptrRecord* best = nullptr;
        for (const auto& r : recs)
            if (r.service == "EPC+" + want &&
                (!best || std::tuple(r.preference, r.order, ons::extract_url(r.regexp)) <
                              std::tuple(best->preference, best->order, ons::extract_url(best->regexp))))
                best = &r;
        try {
            auto got = ons::select_endpoint(recs, want);
            select_bad += !best || got.url != ons::extract_url(best->regexp) || got.preference != best->preference;
        } catch (const Error& e) {
            select_bad += best || e.code() != Errc::service_not_found;
        }
    }
    c.expect(select_bad == 0, fmt::format("{} selection mismatches", select_bad));

    std::size_t zone_bad = 0;
    for (int t = 0; t < 300; ++t) {
        zonegen::ZoneSetSpec spec;
        spec.label = "R";
        spec.cp_start = rng() % 1000;
        spec.cp_end = spec.cp_start + rng() % 4;
        spec.ir_start = rng() % 1000;
        spec.ir_end = spec.ir_start + rng() % 40;
        spec.per_name_min = static_cast<unsigned>(rng() % 3);
        spec.per_name_max = spec.per_name_min + static_cast<unsigned>(rng() % 6);
        const auto n = spec.fqdn_count();
        spec.total_rrs = n * spec.per_name_min + rng() % (n * (spec.per_name_max - spec.per_name_min) + 1);
        spec.seed = rng();
        std::uint64_t names = 0, total = 0;
        bool bounds = true;
        for (const auto& z : zonegen::generate_set(spec))
            for (const auto& nr : z.names) {
                ++names;
                total += nr.records.size();
                bounds = bounds && nr.records.size() >= spec.per_name_min && nr.records.size() <= spec.per_name_max;
            }
        zone_bad += !(bounds && names == n && total == spec.total_rrs);
    }
    c.expect(zone_bad == 0, fmt::format("{} zone specs missed their totals", zone_bad));
}

}  // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "codec fidelity", 1, codec_fidelity},
        {2, "URI to ONS name", 1, translation},
        {3, "NAPTR selection", 1, naptr_selection},
        {4, "zone totals", 30, zone_totals},
        {5, "anonymity degree", 1, anonymity_degree},
        {6, "circuit reliability", 1, reliability},
        {7, "amplified compromise endpoints", 1, amplification},
        {8, "end-to-end offline experiment", 120, end_to_end},
        {9, "DNSSEC integrity", 10, dnssec_integrity},
        {10, "eavesdropper policy violations", 5, attack_demo},
        {11, "property suites", 120, property_suites},
    };

    int failed = 0;
    for (const auto& cr : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            cr.body(check);
        } catch (const std::exception& e) {
            check.failures.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs >= cr.limit_s)
            check.failures.push_back(fmt::format("took {:.2f} s, limit {} s", secs, cr.limit_s));
        const bool ok = check.failures.empty();
        failed += !ok;
        std::cout << fmt::format("{} {} {} ({:.3f} s)\n", ok ? "PASS" : "FAIL", cr.id, cr.title, secs);
        for (const auto& f : check.failures)
            std::cout << "  - " << f << "\n";
        std::cout.flush();
    }
    return failed == 0 ? 0 : 1;
}
