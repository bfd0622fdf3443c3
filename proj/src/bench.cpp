#include "onsanon/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "onsanon/error.hpp"

namespace onsanon::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v)
{
    return std::isnan(v) ? "nan" : fmt::format("{:.9f}", v);
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

LatencySample resolve_one(const std::string& fqdn, const transport::TransportConfig& config)
{
    LatencySample s;
    s.fqdn = fqdn;
    try {
        auto r = transport::resolve(fqdn, config);
        s.attempts = r.attempts;
        s.rtt_ms = r.elapsed_ms;
        s.records = std::move(r.records);
        if (r.verification)
            s.verdict = r.verification->verdict;
    } catch (const Error& e) {
        s.outcome = Outcome::failed;
        s.rtt_ms = kNaN;
        s.attempts = is_retryable(e.code()) ? config.max_retries + 1 : 1;
        s.error = e.what();
    }
    return s;
}

std::vector<LatencySample> run_group(std::span<const std::string> names, const transport::TransportConfig& config,
                                     unsigned parallelism)
{
    std::vector<LatencySample> out(names.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < names.size();) {
            out[i] = resolve_one(names[i], config);
            out[i].index = i;
        }
    };
    const auto n = std::min<std::size_t>(std::max(1u, parallelism), names.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n; ++t)
        threads.emplace_back(worker);
    worker();
    for (auto& t : threads)
        t.join();
    return out;
}

}  // namespace

double t_quantile_975(unsigned df)
{
    if (df == 0)
        throw Error(Errc::domain, "t quantile needs df >= 1");
    return boost::math::quantile(boost::math::students_t(static_cast<double>(df)), 0.975);
}

Stats summarize(std::span<const double> values)
{
    Stats s;
    s.n = values.size();
    if (s.n == 0)
        return {0, kNaN, kNaN, kNaN};
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
    if (s.n < 2) {
        s.stddev = s.ci95 = kNaN;
        return s;
    }
    double ss = 0;
    for (double v : values)
        ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.ci95 = t_quantile_975(static_cast<unsigned>(s.n - 1)) * s.stddev / std::sqrt(static_cast<double>(s.n));
    return s;
}

std::string BenchReport::csv() const
{
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{},{},{},{},{}\n", r.mode, r.prefix_len, r.n_ok, num(r.mean_ms),
                           num(r.stddev_ms), num(r.ci95_ms), r.retries, r.failures);
    return out;
}

std::string BenchReport::samples_csv() const
{
    std::string out = "mode,prefix_len,repetition,index,fqdn,attempts,rtt_ms,outcome,verdict,error\n";
    for (const auto& s : samples)
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", s.mode, s.prefix_len, s.repetition, s.index, s.fqdn,
                           s.attempts, std::isnan(s.rtt_ms) ? std::string("nan") : fmt::format("{:.17g}", s.rtt_ms),
                           s.outcome == Outcome::ok ? "ok" : "failed",
                           s.verdict ? dnssec::verdict_name(*s.verdict) : std::string(), csv_field(s.error));
    return out;
}

std::string BenchReport::plot_data(const std::string& mode) const
{
    std::string out = fmt::format("# {}\n# prefix_len mean_ms ci_low_ms ci_high_ms n_ok\n", mode);
    for (const auto& r : rows) {
        if (r.mode != mode)
            continue;
        const double ci = std::isnan(r.ci95_ms) ? 0.0 : r.ci95_ms;
        out += fmt::format("{} {} {} {} {}\n", r.prefix_len, num(r.mean_ms), num(r.mean_ms - ci),
                           num(r.mean_ms + ci), r.n_ok);
    }
    return out;
}

const BenchRow* BenchReport::row(const std::string& mode, std::size_t prefix_len) const
{
    for (const auto& r : rows)
        if (r.mode == mode && r.prefix_len == prefix_len)
            return &r;
    return nullptr;
}

const ModeStatus* BenchReport::status(const std::string& mode) const
{
    for (const auto& m : modes)
        if (m.mode == mode)
            return &m;
    return nullptr;
}

BenchReport run_bench(const QuerySeries& series, std::span<const transport::TransportConfig> configs,
                      const BenchOptions& options)
{
    if (series.fqdns.empty())
        throw Error(Errc::domain, "empty query series");
    if (options.parallelism == 0 || options.repetitions == 0)
        throw Error(Errc::domain, "parallelism and repetitions must be positive");
    for (const auto& c : configs)
        c.validate();

    const auto len = options.max_prefix == 0 ? series.fqdns.size() : std::min(options.max_prefix, series.fqdns.size());
    BenchReport report;
    for (const auto& config : configs) {
        const auto mode = config.mode.name();
        ModeStatus status{mode, false, {}};
        for (std::size_t k = 1; k <= len && !status.failed; ++k) {
            std::vector<LatencySample> group;
            for (unsigned rep = 0; rep < options.repetitions; ++rep) {
                auto samples = run_group(std::span(series.fqdns).first(k), config, options.parallelism);
                for (auto& s : samples) {
                    s.mode = mode;
                    s.prefix_len = k;
                    s.repetition = rep;
                }
                group.insert(group.end(), samples.begin(), samples.end());
            }
            if (k == 1 && std::all_of(group.begin(), group.end(),
                                      [](const auto& s) { return s.outcome == Outcome::failed; })) {
                status.failed = true;
                status.reason = group.front().error;
            }

            BenchRow row{mode, k, 0, 0, 0, 0, 0, 0};
            std::vector<double> ok;
            for (const auto& s : group) {
                row.retries += s.attempts - 1;
                if (s.outcome == Outcome::ok)
                    ok.push_back(s.rtt_ms);
                else
                    ++row.failures;
            }
            const auto st = summarize(ok);
            row.n_ok = st.n;
            row.mean_ms = st.mean;
            row.stddev_ms = st.stddev;
            row.ci95_ms = st.ci95;
            report.rows.push_back(row);
            report.samples.insert(report.samples.end(), std::make_move_iterator(group.begin()),
                                  std::make_move_iterator(group.end()));
        }
        report.modes.push_back(std::move(status));
    }
    return report;
}

std::vector<std::filesystem::path> report_emit(const BenchReport& report, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto write = [&](const std::filesystem::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary);
        if (!(f << text))
            throw Error(Errc::io, fmt::format("cannot write {}", p.string()));
        written.push_back(p);
    };
    write(dir / "bench.csv", report.csv());
    write(dir / "samples.csv", report.samples_csv());
    for (const auto& m : report.modes)
        write(dir / fmt::format("plot_{}.dat", m.mode), report.plot_data(m.mode));
    return written;
}

}  // namespace onsanon::harness
