#include "onsanon/stub.hpp"

#include <algorithm>
#include <arpa/inet.h>
#include <poll.h>
#include <sys/socket.h>

#include <fmt/format.h>

#include "onsanon/error.hpp"

namespace onsanon::harness {

namespace {

constexpr auto kPollSlice = std::chrono::milliseconds(50);
constexpr std::size_t kClassicUdpLimit = 512;

double epoch_seconds()
{
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
}

bool is_subdomain(const std::string& name, const std::string& origin)
{
    if (origin.empty())
        return true;
    return name == origin || (name.size() > origin.size() && name.ends_with(origin) &&
                              name[name.size() - origin.size() - 1] == '.');
}

/// Reads one octet at a time up to a NUL; false on EOF or overlong field.
bool read_cstring(const net::Socket& s, std::string& out, net::Deadline deadline)
{
    out.clear();
    std::array<std::uint8_t, 1> c{};
    while (out.size() <= 255) {
        if (!net::recv_exact(s, c, deadline))
            return false;
        if (c[0] == 0)
            return true;
        out += static_cast<char>(c[0]);
    }
    return false;
}

}  // namespace

void ZoneStore::add(const zonefile::Zone& zone)
{
    auto origin = dns::canonical_name(zone.origin);
    if (std::find(origins_.begin(), origins_.end(), origin) == origins_.end())
        origins_.push_back(origin);
    for (const auto& rr : zone.records) {
        auto name = dns::canonical_name(rr.name);
        auto& node = nodes_[name];
        if (rr.type == dns::rrtype::RRSIG) {
            auto covered = dns::RrsigRdata::from_rdata(rr.rdata).type_covered;
            node.sigs[covered].push_back(rr);
        } else {
            node.rrsets[rr.type].push_back(rr);
            if (rr.type == dns::rrtype::SOA && name == origin)
                soa_[origin] = rr;
        }
    }
}

const std::string* ZoneStore::zone_for(const std::string& name) const
{
    const std::string* best = nullptr;
    for (const auto& o : origins_)
        if (is_subdomain(name, o) && (!best || o.size() > best->size()))
            best = &o;
    return best;
}

dns::Message ZoneStore::answer(const dns::Message& q) const
{
    dns::Message r;
    r.id = q.id;
    r.qr = true;
    r.opcode = q.opcode;
    r.rd = q.rd;
    r.ra = true;
    r.questions = q.questions;
    const auto edns = q.edns();
    const bool dnssec_ok = edns && edns->dnssec_ok;
    if (edns)
        r.set_edns(dns::Edns{4096, dnssec_ok});
    if (q.opcode != 0) {
        r.rcode = dns::rcode::NOTIMP;
        return r;
    }
    if (q.questions.size() != 1 || q.questions.front().qclass != dns::kClassIn) {
        r.rcode = dns::rcode::FORMERR;
        return r;
    }
    const auto& question = q.questions.front();
    const auto name = dns::canonical_name(question.name);
    const auto* origin = zone_for(name);
    if (!origin) {
        r.rcode = dns::rcode::REFUSED;
        return r;
    }
    r.aa = true;

    auto add_soa = [&] {
        if (auto it = soa_.find(*origin); it != soa_.end()) {
            r.authority.push_back(it->second);
            if (dnssec_ok)
                if (auto n = nodes_.find(*origin); n != nodes_.end())
                    if (auto s = n->second.sigs.find(dns::rrtype::SOA); s != n->second.sigs.end())
                        r.authority.insert(r.authority.end(), s->second.begin(), s->second.end());
        }
    };

    auto node = nodes_.find(name);
    if (node == nodes_.end()) {
        r.rcode = dns::rcode::NXDOMAIN;
        add_soa();
        return r;
    }
    auto rrset = node->second.rrsets.find(question.qtype);
    if (rrset == node->second.rrsets.end()) {
        add_soa();
        return r;
    }
    r.answers = rrset->second;
    for (auto& rr : r.answers)
        rr.name = question.name;
    if (dnssec_ok)
        if (auto s = node->second.sigs.find(question.qtype); s != node->second.sigs.end())
            r.answers.insert(r.answers.end(), s->second.begin(), s->second.end());
    return r;
}

std::vector<zonefile::Zone> load_zone_dir(const std::filesystem::path& dir)
{
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".zone")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw Error(Errc::io, fmt::format("no .zone files in {}", dir.string()));
    std::vector<zonefile::Zone> zones;
    for (const auto& f : files)
        zones.push_back(zonefile::load(f));
    return zones;
}

SignedZones sign_zones(std::span<const zonefile::Zone> zones, const SigningOptions& options)
{
    SignedZones out;
    const auto inception = dnssec::now() - 3600;
    const auto expiration = inception + static_cast<std::uint32_t>(
                                            std::chrono::duration_cast<std::chrono::seconds>(options.validity).count());
    for (const auto& zone : zones) {
        auto ksk = dnssec::RsaSigningKey::generate(zone.origin, options.ksk_bits, 257, options.algorithm);
        auto zsk = dnssec::RsaSigningKey::generate(zone.origin, options.zsk_bits, 256, options.algorithm);
        zonefile::Zone signed_zone{zone.origin, {}};
        std::map<std::pair<std::string, std::uint16_t>, std::vector<dns::ResourceRecord>> rrsets;
        std::uint32_t ttl = 3600;
        for (const auto& rr : zone.records) {
            if (rr.type == dns::rrtype::RRSIG || rr.type == dns::rrtype::DNSKEY)
                continue;
            rrsets[{dns::canonical_name(rr.name), rr.type}].push_back(rr);
            if (rr.type == dns::rrtype::SOA)
                ttl = rr.ttl;
        }
        auto& keys = rrsets[{dns::canonical_name(zone.origin), dns::rrtype::DNSKEY}];
        for (const auto* k : {&ksk, &zsk})
            keys.push_back(dns::ResourceRecord{zone.origin, dns::rrtype::DNSKEY, dns::kClassIn, ttl,
                                               k->dnskey().to_rdata()});
        for (const auto& [key, rrset] : rrsets) {
            const auto& signer = key.second == dns::rrtype::DNSKEY ? ksk : zsk;
            auto sig = signer.sign(rrset, inception, expiration);
            signed_zone.records.insert(signed_zone.records.end(), rrset.begin(), rrset.end());
            signed_zone.records.push_back(dns::ResourceRecord{rrset.front().name, dns::rrtype::RRSIG, dns::kClassIn,
                                                              rrset.front().ttl, sig.to_rdata()});
        }
        out.ksk_anchors.push_back(ksk.record());
        out.zsk_anchors.push_back(zsk.record());
        out.zones.push_back(std::move(signed_zone));
    }
    return out;
}

std::string anchors_text(std::span<const dns::DnskeyRecord> anchors)
{
    std::string out;
    for (const auto& a : anchors)
        out += zonefile::render_record(
                   dns::ResourceRecord{a.owner, dns::rrtype::DNSKEY, dns::kClassIn, 3600, a.key.to_rdata()}) +
               "\n";
    return out;
}

// Nameserver

StubNameserver::StubNameserver(std::vector<zonefile::Zone> zones, NameserverOptions options)
    : options_(std::move(options))
{
    for (const auto& z : zones)
        store_.add(z);
    tcp_ = net::listen_tcp(options_.host, options_.port);
    port_ = net::local_port(tcp_);
    udp_ = net::bind_udp(options_.host, port_);
    udp_thread_ = std::thread([this] { udp_loop(); });
    tcp_thread_ = std::thread([this] { tcp_loop(); });
}

StubNameserver::~StubNameserver()
{
    stop();
}

void StubNameserver::stop()
{
    if (stopping_.exchange(true))
        return;
    if (udp_thread_.joinable())
        udp_thread_.join();
    if (tcp_thread_.joinable())
        tcp_thread_.join();
    std::unique_lock lock(workers_mutex_);
    workers_cv_.wait(lock, [this] { return workers_ == 0; });
}

std::vector<std::string> StubNameserver::query_log() const
{
    std::lock_guard lock(log_mutex_);
    return log_;
}

void StubNameserver::clear_log()
{
    std::lock_guard lock(log_mutex_);
    log_.clear();
}

void StubNameserver::spawn(std::function<void()> fn)
{
    {
        std::lock_guard lock(workers_mutex_);
        ++workers_;
    }
    std::thread([this, fn = std::move(fn)] {
        try {
            fn();
        } catch (...) {
        }
        std::lock_guard lock(workers_mutex_);
        --workers_;
        workers_cv_.notify_all();
    }).detach();
}

dns::Bytes StubNameserver::handle(std::span<const std::uint8_t> wire, bool over_udp)
{
    dns::Message query;
    try {
        query = dns::Message::decode(wire);
    } catch (const Error&) {
        if (wire.size() < 2)
            return {};
        dns::Message err;
        err.id = static_cast<std::uint16_t>(wire[0] << 8 | wire[1]);
        err.qr = true;
        err.rcode = dns::rcode::FORMERR;
        return err.encode();
    }
    ++queries_;
    if (!query.questions.empty()) {
        std::lock_guard lock(log_mutex_);
        log_.push_back(fmt::format("{:.6f} {} {}", epoch_seconds(), dns::normalize_name(query.questions.front().name),
                                   dns::type_name(query.questions.front().qtype)));
    }
    if (options_.delay.count() > 0)
        std::this_thread::sleep_for(options_.delay);
    auto reply = store_.answer(query);
    std::size_t size_limit = 65535;
    if (over_udp)
        size_limit = query.edns() ? std::max<std::size_t>(query.edns()->udp_payload, kClassicUdpLimit) : kClassicUdpLimit;
    auto out = reply.encode();
    if (out.size() > size_limit) {
        reply.answers.clear();
        reply.authority.clear();
        reply.tc = true;
        out = reply.encode();
    }
    return out;
}

void StubNameserver::udp_loop()
{
    dns::Bytes buf(65535);
    while (!stopping_) {
        pollfd p{udp_.fd(), POLLIN, 0};
        if (::poll(&p, 1, static_cast<int>(kPollSlice.count())) <= 0)
            continue;
        sockaddr_storage from{};
        socklen_t len = sizeof from;
        auto n = ::recvfrom(udp_.fd(), buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from), &len);
        if (n <= 0)
            continue;
        dns::Bytes wire(buf.begin(), buf.begin() + n);
        spawn([this, wire = std::move(wire), from, len] {
            auto reply = handle(wire, true);
            if (!reply.empty())
                ::sendto(udp_.fd(), reply.data(), reply.size(), 0, reinterpret_cast<const sockaddr*>(&from), len);
        });
    }
}

void StubNameserver::tcp_loop()
{
    while (!stopping_) {
        pollfd p{tcp_.fd(), POLLIN, 0};
        if (::poll(&p, 1, static_cast<int>(kPollSlice.count())) <= 0)
            continue;
        int fd = ::accept4(tcp_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0)
            continue;
        auto conn = std::make_shared<net::Socket>(fd);
        spawn([this, conn] { serve_tcp(std::move(*conn)); });
    }
}

void StubNameserver::serve_tcp(net::Socket conn)
{
    while (!stopping_) {
        auto idle_deadline = net::Clock::now() + std::chrono::seconds(10);
        bool ready = false;
        while (!stopping_ && net::Clock::now() < idle_deadline)
            if ((ready = net::wait_readable(conn.fd(), net::Clock::now() + kPollSlice)))
                break;
        if (!ready)
            return;
        auto deadline = net::Clock::now() + std::chrono::seconds(5);
        std::array<std::uint8_t, 2> len{};
        if (!net::recv_exact(conn, len, deadline))
            return;
        dns::Bytes wire(static_cast<std::size_t>(len[0] << 8 | len[1]));
        if (!net::recv_exact(conn, wire, deadline))
            return;
        auto reply = handle(wire, false);
        if (reply.empty())
            return;
        dns::Bytes framed{static_cast<std::uint8_t>(reply.size() >> 8), static_cast<std::uint8_t>(reply.size())};
        framed.insert(framed.end(), reply.begin(), reply.end());
        net::send_all(conn, framed, deadline);
    }
}

// SOCKS4a proxy

StubSocksProxy::StubSocksProxy(ProxyOptions options) : options_(std::move(options)), rng_(options_.seed)
{
    listener_ = net::listen_tcp(options_.host, options_.port);
    port_ = net::local_port(listener_);
    accept_thread_ = std::thread([this] { accept_loop(); });
}

StubSocksProxy::~StubSocksProxy()
{
    stop();
}

void StubSocksProxy::stop()
{
    if (stopping_.exchange(true))
        return;
    if (accept_thread_.joinable())
        accept_thread_.join();
    std::unique_lock lock(workers_mutex_);
    workers_cv_.wait(lock, [this] { return workers_ == 0; });
}

StubSocksProxy::Fate StubSocksProxy::next_fate()
{
    std::lock_guard lock(rng_mutex_);
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    if (u < options_.refuse_rate)
        return Fate::refuse;
    if (u < options_.refuse_rate + options_.drop_rate)
        return Fate::drop;
    return Fate::relay;
}

void StubSocksProxy::accept_loop()
{
    while (!stopping_) {
        pollfd p{listener_.fd(), POLLIN, 0};
        if (::poll(&p, 1, static_cast<int>(kPollSlice.count())) <= 0)
            continue;
        int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0)
            continue;
        ++connections_;
        {
            std::lock_guard lock(workers_mutex_);
            ++workers_;
        }
        std::thread([this, fd] {
            try {
                serve(net::Socket(fd));
            } catch (...) {
            }
            std::lock_guard lock(workers_mutex_);
            --workers_;
            workers_cv_.notify_all();
        }).detach();
    }
}

void StubSocksProxy::serve(net::Socket client)
{
    const auto deadline = net::Clock::now() + std::chrono::seconds(5);
    std::array<std::uint8_t, 8> head{};
    if (!net::recv_exact(client, head, deadline))
        return;
    std::string user;
    if (!read_cstring(client, user, deadline))
        return;
    std::string host;
    const std::uint16_t port = static_cast<std::uint16_t>(head[2] << 8 | head[3]);
    if (head[4] == 0 && head[5] == 0 && head[6] == 0 && head[7] != 0) {
        if (!read_cstring(client, host, deadline))
            return;
    } else {
        host = fmt::format("{}.{}.{}.{}", head[4], head[5], head[6], head[7]);
    }

    auto reply = [&](std::uint8_t code) {
        std::array<std::uint8_t, 8> r{0x00, code, 0, 0, 0, 0, 0, 0};
        net::send_all(client, r, deadline);
    };
    if (head[0] != 0x04 || head[1] != 0x01) {
        reply(0x5B);
        return;
    }
    const auto fate = next_fate();
    if (fate == Fate::refuse) {
        ++refused_;
        reply(0x5B);
        return;
    }
    if (options_.delay.count() > 0)
        std::this_thread::sleep_for(options_.delay);
    net::Socket upstream;
    try {
        upstream = net::connect_tcp(net::Endpoint{host, port}, net::Clock::now() + std::chrono::seconds(2));
    } catch (const Error&) {
        reply(0x5B);
        return;
    }
    reply(0x5A);
    if (fate == Fate::drop) {
        ++dropped_;
        return;
    }

    std::array<std::uint8_t, 4096> buf{};
    auto idle = net::Clock::now() + std::chrono::seconds(10);
    while (!stopping_ && net::Clock::now() < idle) {
        std::array<pollfd, 2> p{{{client.fd(), POLLIN, 0}, {upstream.fd(), POLLIN, 0}}};
        if (::poll(p.data(), p.size(), static_cast<int>(kPollSlice.count())) <= 0)
            continue;
        for (std::size_t i = 0; i < 2; ++i) {
            if (!(p[i].revents & (POLLIN | POLLHUP | POLLERR)))
                continue;
            const auto& from = i == 0 ? client : upstream;
            const auto& to = i == 0 ? upstream : client;
            auto n = ::recv(from.fd(), buf.data(), buf.size(), 0);
            if (n <= 0)
                return;
            net::send_all(to, std::span(buf.data(), static_cast<std::size_t>(n)),
                          net::Clock::now() + std::chrono::seconds(5));
            idle = net::Clock::now() + std::chrono::seconds(10);
        }
    }
}

}  // namespace onsanon::harness
