// onsanon: command-line front end for the ONS privacy toolkit.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
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

using namespace onsanon;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int)
{
    g_interrupted = true;
}

bool looks_like_urn(std::string_view s)
{
    return s.starts_with("urn:") || s.starts_with("URN:");
}

void print_fields(const epc::Sgtin96Fields& f)
{
    fmt::print("hex={}\n", epc::encode_sgtin96(f).to_hex());
    fmt::print("uri={}\n", epc::fields_to_uri(f).str());
    fmt::print("filter={}\npartition={}\n", f.filter, f.partition);
    const auto uri = epc::fields_to_uri(f);
    fmt::print("company_prefix={}\nitem_reference={}\nserial={}\n", uri.company_prefix_text, uri.item_reference_text,
               uri.serial_text);
}

epc::Sgtin96Fields fields_from_input(const std::string& input, unsigned filter)
{
    if (looks_like_urn(input)) {
        auto f = epc::parse_uri(input);
        f.filter = static_cast<std::uint8_t>(filter);
        return f;
    }
    return epc::decode_sgtin96(epc::Epc96::from_hex(input));
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string item; std::getline(in, item, ',');)
        if (!item.empty())
            out.push_back(item);
    return out;
}

std::vector<dns::DnskeyRecord> load_anchor_files(const std::vector<std::string>& files)
{
    std::vector<dns::DnskeyRecord> out;
    for (const auto& f : files) {
        auto keys = zonefile::load_anchors(f);
        out.insert(out.end(), keys.begin(), keys.end());
    }
    return out;
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!(f << text))
        throw Error(Errc::io, fmt::format("cannot write {}", path));
}

struct TransportFlags {
    std::string ns = "127.0.0.1:53";
    std::string proxy;
    unsigned timeout_ms = 3000;
    unsigned retries = 3;
    std::vector<std::string> anchors;
    bool permissive = false;
    bool no_verify = false;

    void add(CLI::App* app)
    {
        app->add_option("--ns", ns, "Nameserver host:port")->capture_default_str();
        app->add_option("--proxy", proxy, "SOCKS4a proxy host:port");
        app->add_option("--timeout", timeout_ms, "Per-attempt timeout in ms")->capture_default_str();
        app->add_option("--retries", retries, "Retries after the first attempt")->capture_default_str();
        app->add_option("--anchor", anchors, "Trust-anchor file with DNSKEY records");
        app->add_flag("--permissive", permissive, "Report the DNSSEC verdict instead of failing");
        app->add_flag("--no-verify", no_verify, "Set the DO bit without checking signatures");
    }

    transport::TransportConfig config(transport::Mode mode) const
    {
        transport::TransportConfig c;
        c.mode = mode;
        c.nameserver = net::Endpoint::parse(ns);
        if (!proxy.empty())
            c.proxy = net::Endpoint::parse(proxy, 9050);
        c.timeout = std::chrono::milliseconds(timeout_ms);
        c.max_retries = retries;
        c.trust_anchors = load_anchor_files(anchors);
        c.strict = !permissive;
        c.verify = !no_verify;
        return c;
    }
};

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"EPC ONS lookup, privacy measurement and testbed tools"};
    app.require_subcommand(1);

    // encode / decode
    std::string codec_input;
    unsigned filter = 0;
    auto* encode = app.add_subcommand("encode", "EPC URN (or hex) to a 96-bit SGTIN tag");
    encode->add_option("input", codec_input, "urn:epc:id:sgtin:cp.ir.serial or hex")->required();
    encode->add_option("--filter", filter, "Filter value for URN input")->check(CLI::Range(0, 7));
    auto* decode = app.add_subcommand("decode", "96-bit SGTIN tag (or URN) to its fields");
    decode->add_option("input", codec_input, "0x-prefixed or bare 24-digit hex, or a URN")->required();

    // translate
    std::string translate_input;
    auto* translate = app.add_subcommand("translate", "URN or tag to ONS name, or ONS name back to identity");
    translate->add_option("input", translate_input)->required();

    // resolve
    std::string resolve_input, route = "direct", service;
    bool resolve_dnssec = false;
    TransportFlags resolve_flags;
    auto* resolve = app.add_subcommand("resolve", "Query the NAPTR records for a tag, URN or ONS name");
    resolve->add_option("input", resolve_input)->required();
    resolve->add_option("--mode", route, "direct or tor")->check(CLI::IsMember({"direct", "tor"}))->capture_default_str();
    resolve->add_flag("--dnssec", resolve_dnssec, "Request and verify signatures");
    resolve->add_option("--service", service, "Select the endpoint for this EPCIS service");
    resolve_flags.add(resolve);

    // zonegen
    std::string set_label, zone_out, custom_label = "custom";
    zonegen::ZoneSetSpec custom;
    std::uint64_t zone_seed = zonegen::kDefaultSeed;
    auto* zonegen_cmd = app.add_subcommand("zonegen", "Generate testbed zone data");
    auto* set_opt = zonegen_cmd->add_option("--set", set_label, "Built-in set")->check(CLI::IsMember({"A", "B", "C"}));
    auto* cps = zonegen_cmd->add_option("--cp-start", custom.cp_start);
    zonegen_cmd->add_option("--cp-end", custom.cp_end);
    zonegen_cmd->add_option("--ir-start", custom.ir_start);
    zonegen_cmd->add_option("--ir-end", custom.ir_end);
    zonegen_cmd->add_option("--total", custom.total_rrs, "Total NAPTR records");
    zonegen_cmd->add_option("--min", custom.per_name_min)->capture_default_str();
    zonegen_cmd->add_option("--max", custom.per_name_max)->capture_default_str();
    zonegen_cmd->add_option("--label", custom_label)->capture_default_str();
    zonegen_cmd->add_option("--seed", zone_seed)->capture_default_str();
    zonegen_cmd->add_option("--out", zone_out, "Directory for master files");
    set_opt->excludes(cps);

    // metrics
    std::string inventory_path, model = "bandwidth";
    std::optional<double> reliability, amplify;
    unsigned path_len = 3;
    std::optional<std::uint64_t> compromised;
    auto* metrics = app.add_subcommand("metrics", "Anonymity and reliability metrics for a relay inventory");
    metrics->add_option("inventory", inventory_path, "CSV of bandwidth_kbps,count (default: built-in census)");
    metrics->add_option("--model", model)->check(CLI::IsMember({"uniform", "bandwidth"}))->capture_default_str();
    metrics->add_option("--reliability", reliability, "Per-relay reliability f");
    metrics->add_option("--path-len", path_len)->capture_default_str();
    metrics->add_option("--compromised", compromised, "Relays held by the adversary");
    metrics->add_option("--amplify", amplify, "Amplification factor on the compromised fraction");

    // series
    auto* series_cmd = app.add_subcommand("series", "Make or show a persisted query series");
    series_cmd->require_subcommand(1);
    std::string series_sets = "A,B,C", series_zones, series_out, series_label = "series", series_file;
    std::size_t series_len = harness::kDefaultSeriesLength;
    std::uint64_t series_seed = 1;
    auto* series_make = series_cmd->add_subcommand("make", "Sample a new series");
    series_make->add_option("--sets", series_sets, "Built-in sets to sample")->capture_default_str();
    series_make->add_option("--zones", series_zones, "Sample names from zone files instead");
    series_make->add_option("--length", series_len)->capture_default_str();
    series_make->add_option("--seed", series_seed)->capture_default_str();
    series_make->add_option("--label", series_label)->capture_default_str();
    series_make->add_option("--out", series_out, "Series file")->required();
    auto* series_show = series_cmd->add_subcommand("show", "Print a series");
    series_show->add_option("file", series_file)->required();

    // bench
    std::string bench_series, bench_modes = "direct-dns,direct-dnssec,tor-dns,tor-dnssec", bench_out = "bench-out";
    unsigned parallel = 1, repetitions = 1;
    TransportFlags bench_flags;
    auto* bench = app.add_subcommand("bench", "Replay a series over transport modes and report latency");
    bench->add_option("--series", bench_series)->required();
    bench->add_option("--modes", bench_modes)->capture_default_str();
    bench->add_option("--parallel", parallel)->capture_default_str();
    bench->add_option("--repetitions", repetitions, "Replays per prefix group")->capture_default_str();
    bench->add_option("--out", bench_out)->capture_default_str();
    bench_flags.add(bench);

    // sniff
    std::string sniff_log, sniff_policy;
    auto* sniff = app.add_subcommand("sniff", "Extract EPC identities from a query log and check a policy");
    sniff->add_option("--log", sniff_log)->required();
    sniff->add_option("--policy", sniff_policy);

    // stub
    std::string stub_zones, anchor_out, stub_log;
    unsigned delay_ms = 0, ns_delay_ms = 0;
    double drop = 0, refuse = 0;
    std::uint16_t ns_port = 0, proxy_port = 0;
    std::uint64_t stub_seed = 1;
    bool sign = false;
    auto* stub = app.add_subcommand("stub", "Serve zones and a SOCKS4a proxy on loopback");
    stub->add_option("--zones", stub_zones)->required();
    stub->add_option("--delay", delay_ms, "Proxy delay per connection in ms")->capture_default_str();
    stub->add_option("--drop", drop, "Proxy connection drop rate")->check(CLI::Range(0.0, 1.0));
    stub->add_option("--refuse", refuse, "Proxy refusal rate")->check(CLI::Range(0.0, 1.0));
    stub->add_option("--ns-delay", ns_delay_ms, "Nameserver delay per reply in ms");
    stub->add_option("--ns-port", ns_port);
    stub->add_option("--proxy-port", proxy_port);
    stub->add_option("--seed", stub_seed, "Seed for proxy faults")->capture_default_str();
    stub->add_flag("--sign", sign, "Sign the zones before serving");
    stub->add_option("--anchor-out", anchor_out, "Write the KSK anchors here when signing");
    stub->add_option("--log", stub_log, "Query log file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*encode || *decode) {
            print_fields(fields_from_input(codec_input, filter));
        } else if (*translate) {
            if (looks_like_urn(translate_input)) {
                epc::parse_uri(translate_input);
                fmt::print("{}\n", ons::uri_to_fqdn(epc::split_uri(translate_input)).str());
            } else if (translate_input.find('.') == std::string::npos) {
                auto uri = epc::fields_to_uri(epc::decode_sgtin96(epc::Epc96::from_hex(translate_input)));
                fmt::print("{}\n{}\n", uri.str(), ons::uri_to_fqdn(uri).str());
            } else {
                auto id = ons::fqdn_to_identity(translate_input);
                fmt::print("urn:epc:idpat:{}:{}.{}.*\n", id.scheme_label, id.company_prefix_text, id.item_reference_text);
            }
        } else if (*resolve) {
            transport::Mode mode{route == "tor" ? transport::Route::proxied : transport::Route::direct,
                                 resolve_dnssec ? transport::Security::dnssec : transport::Security::plain};
            auto cfg = resolve_flags.config(mode);
            if (mode.proxied() && !cfg.proxy)
                cfg.proxy = net::Endpoint{"127.0.0.1", 9050};
            auto r = transport::resolve(resolve_input, cfg);
            fmt::print("; {} NAPTR via {} ({} attempt(s), {:.3f} ms)\n", r.fqdn, mode.name(), r.attempts, r.elapsed_ms);
            if (r.verification)
                fmt::print("; dnssec {} {}\n", dnssec::verdict_name(r.verification->verdict), r.verification->detail);
            for (const auto& rec : r.records) {
                fmt::print("{} IN NAPTR {}\n", r.fqdn, rec.rdata_text());
                for (const auto& w : rec.warnings)
                    fmt::print(stderr, "warning: {}\n", w);
            }
            if (!service.empty()) {
                auto ep = ons::select_endpoint(r.records, service);
                fmt::print("{}\n", ep.url);
            }
        } else if (*zonegen_cmd) {
            zonegen::ZoneSetSpec spec;
            std::string label;
            if (!set_label.empty()) {
                spec = zonegen::builtin_spec(set_label, zone_seed);
                label = set_label;
            } else {
                spec = custom;
                spec.label = custom_label;
                spec.seed = zone_seed;
                label = custom_label;
            }
            spec.validate();
            auto zones = zonegen::generate_set(spec);
            if (!zone_out.empty())
                zonegen::write_zone_files(zones, zone_out, label);
            fmt::print("{}\n", zonegen::stats(zones).csv_line(label));
        } else if (*metrics) {
            namespace am = anonymetrics;
            am::NodeInventory inv;
            if (inventory_path.empty()) {
                inv = am::observed_tor_inventory();
            } else {
                std::ifstream in(inventory_path);
                if (!in)
                    throw Error(Errc::io, fmt::format("cannot read {}", inventory_path));
                inv = am::NodeInventory::parse_csv(in);
            }
            auto rep = am::analyze(inv, am::parse_model(model));
            fmt::print("model={}\nnodes={}\nentropy_bits={:.6f}\nmax_entropy_bits={:.6f}\nnormalized_degree={:.6f}\n",
                       am::model_name(rep.model), rep.node_count, rep.entropy_bits, rep.max_entropy_bits,
                       rep.normalized_degree);
            if (reliability)
                fmt::print("path_len={}\ncircuit_reliability={:.6f}\n", path_len,
                           am::circuit_reliability(*reliability, path_len));
            std::optional<double> base;
            if (compromised) {
                base = am::compromise_fraction(*compromised, rep.node_count);
                fmt::print("compromised={}\ncompromise_fraction={:.6f}\n", *compromised, *base);
            }
            if (amplify && base)
                fmt::print("amplified_compromise={:.6f}\n", am::amplified_compromise(*base, *amplify));
        } else if (*series_make) {
            harness::QuerySeries s;
            if (!series_zones.empty()) {
                auto names = harness::names_in_zone_dir(series_zones);
                s = harness::make_series(names, {series_zones}, series_len, series_seed, series_label);
            } else {
                std::vector<zonegen::ZoneSetSpec> specs;
                for (const auto& l : split_list(series_sets))
                    specs.push_back(zonegen::builtin_spec(l));
                s = harness::make_series(specs, series_len, series_seed, series_label);
            }
            s.save(series_out);
            fmt::print("{}: {} names\n", series_out, s.fqdns.size());
        } else if (*series_show) {
            fmt::print("{}", harness::QuerySeries::load(series_file).serialize());
        } else if (*bench) {
            auto s = harness::QuerySeries::load(bench_series);
            std::vector<transport::TransportConfig> configs;
            for (const auto& m : split_list(bench_modes))
                configs.push_back(bench_flags.config(transport::Mode::parse(m)));
            harness::BenchOptions opts;
            opts.parallelism = parallel;
            opts.repetitions = repetitions;
            auto report = harness::run_bench(s, configs, opts);
            harness::report_emit(report, bench_out);
            for (const auto& m : report.modes)
                if (m.failed)
                    fmt::print(stderr, "mode {} failed: {}\n", m.mode, m.reason);
            fmt::print("{}", report.csv());
        } else if (*sniff) {
            std::ifstream in(sniff_log);
            if (!in)
                throw Error(Errc::io, fmt::format("cannot read {}", sniff_log));
            auto result = harness::eavesdrop(in);
            for (const auto& w : result.warnings)
                fmt::print(stderr, "warning: {}\n", w);
            fmt::print("parsed={} observations={} skipped={}\n", result.parsed_lines, result.observations.size(),
                       result.skipped);
            for (const auto& o : result.observations)
                fmt::print("observed {:.6f} manufacturer={} product={} ({})\n", o.timestamp, o.company_prefix_text,
                           o.item_reference_text, o.fqdn);
            if (!sniff_policy.empty()) {
                auto violations = harness::check_policy(result.observations, harness::PrivacyPolicy::load(sniff_policy));
                fmt::print("violations={}\n", violations.size());
                for (const auto& v : violations)
                    fmt::print("violation line={} rule={} name={}\n", v.observation.line, v.rule.str(),
                               v.observation.fqdn);
            }
        } else if (*stub) {
            auto zones = harness::load_zone_dir(stub_zones);
            if (sign) {
                auto signed_zones = harness::sign_zones(zones);
                zones = std::move(signed_zones.zones);
                if (!anchor_out.empty())
                    write_text(anchor_out, harness::anchors_text(signed_zones.ksk_anchors));
            }
            harness::StubNameserver ns(std::move(zones), {"127.0.0.1", ns_port, std::chrono::milliseconds(ns_delay_ms)});
            harness::ProxyOptions popts;
            popts.port = proxy_port;
            popts.delay = std::chrono::milliseconds(delay_ms);
            popts.drop_rate = drop;
            popts.refuse_rate = refuse;
            popts.seed = stub_seed;
            harness::StubSocksProxy proxy(popts);
            fmt::print("nameserver {}\nproxy {}\n", ns.endpoint().str(), proxy.endpoint().str());
            std::fflush(stdout);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::size_t logged = 0;
            while (!g_interrupted) {
                std::this_thread::sleep_for(std::chrono::milliseconds(200));
                if (stub_log.empty())
                    continue;
                auto log = ns.query_log();
                if (log.size() == logged)
                    continue;
                std::ofstream f(stub_log, std::ios::app);
                for (; logged < log.size(); ++logged)
                    f << log[logged] << '\n';
            }
            proxy.stop();
            ns.stop();
        }
    } catch (const Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
