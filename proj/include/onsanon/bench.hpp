#pragma once

// Cumulative-prefix latency benchmark over transport modes.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "onsanon/dnssec.hpp"
#include "onsanon/ons_core.hpp"
#include "onsanon/series.hpp"
#include "onsanon/transport.hpp"

namespace onsanon::harness {

enum class Outcome { ok, failed };

struct LatencySample {
    std::string mode;
    std::size_t prefix_len = 0;
    unsigned repetition = 0;
    /// Position within the series.
    std::size_t index = 0;
    std::string fqdn;
    unsigned attempts = 1;
    /// Wall clock of the whole resolution including retries; NaN when failed.
    double rtt_ms = 0;
    Outcome outcome = Outcome::ok;
    std::optional<dnssec::Verdict> verdict;
    std::vector<ons::NaptrRecord> records;
    std::string error;
};

struct Stats {
    std::size_t n = 0;
    double mean = 0;
    /// Sample standard deviation; NaN below two samples.
    double stddev = 0;
    /// Two-sided 95% Student-t half-width; NaN below two samples.
    double ci95 = 0;
};

/// Two-sided 95% Student-t quantile t(0.975, df).
double t_quantile_975(unsigned df);

Stats summarize(std::span<const double> values);

struct BenchRow {
    std::string mode;
    std::size_t prefix_len = 0;
    std::size_t n_ok = 0;
    double mean_ms = 0;
    double stddev_ms = 0;
    double ci95_ms = 0;
    unsigned retries = 0;
    unsigned failures = 0;
};

struct ModeStatus {
    std::string mode;
    bool failed = false;
    std::string reason;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::vector<LatencySample> samples;
    std::vector<ModeStatus> modes;

    static constexpr const char* kCsvHeader = "mode,prefix_len,n_ok,mean_ms,stddev_ms,ci95_ms,retries,failures";

    std::string csv() const;
    std::string samples_csv() const;
    /// Columns: prefix_len mean ci_low ci_high n_ok.
    std::string plot_data(const std::string& mode) const;

    const BenchRow* row(const std::string& mode, std::size_t prefix_len) const;
    const ModeStatus* status(const std::string& mode) const;
};

struct BenchOptions {
    unsigned parallelism = 1;
    /// Times each prefix group is replayed; samples are pooled.
    unsigned repetitions = 1;
    /// Largest prefix length; 0 means the whole series.
    std::size_t max_prefix = 0;
};

/// Runs prefix groups 1..len serially per mode, each group with up to
/// `parallelism` resolutions in flight. A mode whose first group fails
/// completely is marked failed and skipped.
BenchReport run_bench(const QuerySeries& series, std::span<const transport::TransportConfig> configs,
                      const BenchOptions& options = {});

/// Writes bench.csv, samples.csv and plot_<mode>.dat; returns the paths.
std::vector<std::filesystem::path> report_emit(const BenchReport& report, const std::filesystem::path& dir);

}  // namespace onsanon::harness
