#pragma once

// Anonymity and reliability metrics for an onion-routing node census.

#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace onsanon::anonymetrics {

struct BandwidthClass {
    double bandwidth_kbps = 0;
    std::uint64_t count = 1;
};

/// Node census by bandwidth class; a per-node list is the count == 1 case.
struct NodeInventory {
    std::vector<BandwidthClass> classes;

    std::uint64_t node_count() const;
    /// One bandwidth entry per node.
    std::vector<double> expand() const;
    void validate() const;

    /// Rows of `bandwidth_kbps,count`; '#' comments and a non-numeric header are skipped.
    static NodeInventory parse_csv(std::istream& in);
};

/// The relay census observed during the ONS latency tests (1478 routers).
NodeInventory observed_tor_inventory();

enum class SelectionModel { uniform, bandwidth_proportional };

std::string_view model_name(SelectionModel m);
SelectionModel parse_model(std::string_view name);

/// Per-node selection probabilities, in `expand()` order.
std::vector<double> selection_distribution(const NodeInventory& inventory, SelectionModel model);

/// Shannon entropy in bits. Throws Errc::invalid_distribution when the
/// probabilities are negative or do not sum to 1 within 1e-9.
double entropy(std::span<const double> probabilities);

/// entropy / log2(N). Throws Errc::undefined_degree for N == 1.
double normalized_degree(std::span<const double> probabilities);

struct AnonymityReport {
    std::uint64_t node_count = 0;
    double entropy_bits = 0;
    double max_entropy_bits = 0;
    double normalized_degree = 0;
    SelectionModel model = SelectionModel::uniform;
};

AnonymityReport analyze(const NodeInventory& inventory, SelectionModel model);

/// Probability that all `path_length` relays of a circuit stay up: f^l.
double circuit_reliability(double node_reliability, unsigned path_length);

/// Share of traffic an adversary holding m of N relays can correlate: (m/N)^2.
double compromise_fraction(std::uint64_t compromised, std::uint64_t total);

/// min(1, base * factor).
double amplified_compromise(double base_fraction, double factor);

struct NodeTally {
    std::uint64_t successes = 0;
    std::uint64_t failures = 0;
};

struct FailureSummary {
    double mean = 0;
    double stddev = 0;
    std::size_t nodes = 0;
};

/// Population mean and standard deviation of per-node failure rates.
/// Nodes without observations are ignored.
FailureSummary node_failure_summary(std::span<const NodeTally> tallies);

}  // namespace onsanon::anonymetrics
