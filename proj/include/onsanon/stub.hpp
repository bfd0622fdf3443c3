#pragma once

// Loopback stand-ins for the authoritative servers and the onion proxy, so
// the full pipeline runs offline: a NAPTR/DNSSEC nameserver over UDP and
// TCP, and a SOCKS4a proxy that can delay, refuse or drop connections.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "onsanon/dnssec.hpp"
#include "onsanon/net.hpp"
#include "onsanon/zonefile.hpp"

namespace onsanon::harness {

/// Authoritative data for a handful of zones.
class ZoneStore {
public:
    void add(const zonefile::Zone& zone);

    /// Builds the reply for one decoded query.
    dns::Message answer(const dns::Message& query) const;

    std::size_t zone_count() const { return origins_.size(); }

private:
    struct Node {
        std::map<std::uint16_t, std::vector<dns::ResourceRecord>> rrsets;
        /// covered type -> signatures
        std::map<std::uint16_t, std::vector<dns::ResourceRecord>> sigs;
    };

    const std::string* zone_for(const std::string& name) const;

    std::vector<std::string> origins_;
    std::map<std::string, Node> nodes_;
    std::map<std::string, dns::ResourceRecord> soa_;
};

/// Loads every *.zone file in `dir`, in name order.
std::vector<zonefile::Zone> load_zone_dir(const std::filesystem::path& dir);

struct SignedZones {
    std::vector<zonefile::Zone> zones;
    /// Key-signing keys, one per zone; the usual trust-anchor choice.
    std::vector<dns::DnskeyRecord> ksk_anchors;
    /// Zone-signing keys, for anchoring the NAPTR signatures directly.
    std::vector<dns::DnskeyRecord> zsk_anchors;
};

struct SigningOptions {
    unsigned ksk_bits = 1200;
    unsigned zsk_bits = 1024;
    std::uint8_t algorithm = dnssec::algorithm::RSASHA256;
    std::chrono::hours validity{24 * 30};
};

/// Adds a DNSKEY rrset and RRSIGs for every rrset of each zone: the
/// DNSKEY rrset under the KSK, everything else under the ZSK.
SignedZones sign_zones(std::span<const zonefile::Zone> zones, const SigningOptions& options = {});

/// Anchor-file text (DNSKEY records in master-file syntax).
std::string anchors_text(std::span<const dns::DnskeyRecord> anchors);

struct NameserverOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    /// Added before every reply, to emulate the path to a remote server.
    std::chrono::milliseconds delay{0};
};

class StubNameserver {
public:
    StubNameserver(std::vector<zonefile::Zone> zones, NameserverOptions options = {});
    ~StubNameserver();
    StubNameserver(const StubNameserver&) = delete;
    StubNameserver& operator=(const StubNameserver&) = delete;

    net::Endpoint endpoint() const { return {options_.host, port_}; }

    /// "<epoch seconds> <qname> <qtype>" per received question.
    std::vector<std::string> query_log() const;
    void clear_log();
    std::size_t queries() const { return queries_.load(); }

    void stop();

private:
    void udp_loop();
    void tcp_loop();
    void serve_tcp(net::Socket conn);
    dns::Bytes handle(std::span<const std::uint8_t> wire, bool over_udp);
    void spawn(std::function<void()> fn);

    NameserverOptions options_;
    ZoneStore store_;
    net::Socket udp_;
    net::Socket tcp_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::atomic<std::size_t> queries_{0};
    mutable std::mutex log_mutex_;
    std::vector<std::string> log_;
    std::mutex workers_mutex_;
    std::condition_variable workers_cv_;
    std::size_t workers_ = 0;
    std::thread udp_thread_;
    std::thread tcp_thread_;
};

struct ProxyOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    /// Added before the grant, standing in for circuit latency.
    std::chrono::milliseconds delay{0};
    /// Fraction of connections closed right after the grant.
    double drop_rate = 0;
    /// Fraction of connections answered with 0x5B.
    double refuse_rate = 0;
    std::uint64_t seed = 1;
};

class StubSocksProxy {
public:
    explicit StubSocksProxy(ProxyOptions options = {});
    ~StubSocksProxy();
    StubSocksProxy(const StubSocksProxy&) = delete;
    StubSocksProxy& operator=(const StubSocksProxy&) = delete;

    net::Endpoint endpoint() const { return {options_.host, port_}; }

    std::size_t connections() const { return connections_.load(); }
    std::size_t dropped() const { return dropped_.load(); }
    std::size_t refused() const { return refused_.load(); }

    void stop();

private:
    enum class Fate { relay, drop, refuse };

    void accept_loop();
    void serve(net::Socket client);
    Fate next_fate();

    ProxyOptions options_;
    net::Socket listener_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::atomic<std::size_t> connections_{0};
    std::atomic<std::size_t> dropped_{0};
    std::atomic<std::size_t> refused_{0};
    std::mutex rng_mutex_;
    std::mt19937_64 rng_;
    std::mutex workers_mutex_;
    std::condition_variable workers_cv_;
    std::size_t workers_ = 0;
    std::thread accept_thread_;
};

}  // namespace onsanon::harness
