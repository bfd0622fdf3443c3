#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "onsanon/error.hpp"
#include "onsanon/stub.hpp"
#include "onsanon/transport.hpp"
#include "onsanon/zonefile.hpp"
#include "support.hpp"

using namespace onsanon;
using namespace onsanon::transport;
using dnssec::Verdict;

namespace {

constexpr const char* kName = "075861.0434687.sgtin.id.onsepc.com";

Errc code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::domain;
}

zonefile::Zone fixture_zone()
{
    return zonefile::load(testsupport::data_path("signed_0434687.zone"));
}

std::vector<dns::DnskeyRecord> anchors(const char* which)
{
    return zonefile::load_anchors(testsupport::data_path(std::string("signed_0434687.") + which + ".anchor"));
}

TransportConfig config(const std::string& mode, const net::Endpoint& ns, std::optional<net::Endpoint> proxy = {})
{
    TransportConfig c;
    c.mode = Mode::parse(mode);
    c.nameserver = ns;
    c.proxy = proxy;
    c.timeout = std::chrono::milliseconds(1000);
    c.trust_anchors = anchors("zsk");
    return c;
}

/// Unsigned zone with `n` NAPTR records at a single name.
zonefile::Zone wide_zone(int n)
{
    std::string text = "$ORIGIN 0000009.sgtin.id.onsepc.com.\n@ IN SOA ns1 hostmaster 1 3600 900 604800 3600\n"
                       "@ IN NS ns1\n";
    for (int i = 0; i < n; ++i)
        text += "000001 IN NAPTR 0 " + std::to_string(i) +
                " \"u\" \"EPC+html\" \"!.*$!http://epcis.example.com/products/item-" + std::to_string(i) + "!\" .\n";
    return zonefile::parse(text);
}

}  // namespace

TEST_CASE("mode names")
{
    CHECK(Mode::parse("direct-dns") == Mode{Route::direct, Security::plain});
    CHECK(Mode::parse("tor-dnssec") == Mode{Route::proxied, Security::dnssec});
    for (const auto& m : Mode::all())
        CHECK(Mode::parse(m.name()) == m);
    CHECK(code_of([] { Mode::parse("carrier-pigeon"); }) == Errc::config);
}

TEST_CASE("configuration checks")
{
    TransportConfig c;
    c.mode = Mode::parse("tor-dns");
    CHECK(code_of([&] { c.validate(); }) == Errc::config);
    c.proxy = net::Endpoint{"127.0.0.1", 9050};
    CHECK_NOTHROW(c.validate());
    c.mode = Mode::parse("direct-dnssec");
    CHECK(code_of([&] { c.validate(); }) == Errc::config);
    c.verify = false;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("SOCKS4a request bytes")
{
    auto req = socks4a_request(net::Endpoint{"ns.example", 53});
    dns::Bytes want{0x04, 0x01, 0x00, 0x35, 0x00, 0x00, 0x00, 0x01, 0x00};
    for (char c : std::string("ns.example"))
        want.push_back(static_cast<std::uint8_t>(c));
    want.push_back(0x00);
    CHECK(req == want);
    CHECK(code_of([] { socks4a_request(net::Endpoint{"", 53}); }) == Errc::config);
}

TEST_CASE("input forms all reach the same query name")
{
    CHECK(input_to_fqdn("0x30141A87FC4A157FFFFFFFFF") == kName);
    CHECK(input_to_fqdn("urn:epc:id:sgtin:0434687.075861.274877906943") == kName);
    CHECK(input_to_fqdn("075861.0434687.sgtin.id.onsepc.com.") == kName);
    CHECK(code_of([] { input_to_fqdn("www.example.com"); }) == Errc::not_ons);
}

TEST_CASE("reply checks")
{
    auto q = dns::build_query(kName, false, 77);
    dns::Message m = dns::Message::decode(q);
    m.qr = true;
    auto wire = [&] { return m.encode(); };
    CHECK_NOTHROW(parse_response(wire(), q));
    m.id = 78;
    CHECK(code_of([&] { parse_response(wire(), q); }) == Errc::decode);
    m.id = 77;
    m.questions[0].name = "other.0434687.sgtin.id.onsepc.com";
    CHECK(code_of([&] { parse_response(wire(), q); }) == Errc::decode);
    m.questions[0].name = kName;
    m.rcode = dns::rcode::NXDOMAIN;
    CHECK(code_of([&] { parse_response(wire(), q); }) == Errc::nxdomain);
    m.rcode = dns::rcode::SERVFAIL;
    CHECK(code_of([&] { parse_response(wire(), q); }) == Errc::servfail);
    m.rcode = dns::rcode::REFUSED;
    CHECK(code_of([&] { parse_response(wire(), q); }) == Errc::resolution_failed);
    m.rcode = 0;
    m.qr = false;
    CHECK(code_of([&] { parse_response(wire(), q); }) == Errc::decode);
}

TEST_CASE("direct resolution against the stub nameserver")
{
    harness::StubNameserver ns({fixture_zone()});
    auto r = resolve(kName, config("direct-dns", ns.endpoint()));
    REQUIRE(r.records.size() == 3);
    CHECK(r.attempts == 1);
    CHECK_FALSE(r.verification);
    CHECK(ons::select_endpoint(r.records, "xmlrpc").url == "http://gateway1.xmlrpc.com/servlet/example");
    CHECK(code_of([&] { resolve("075869.0434687.sgtin.id.onsepc.com", config("direct-dns", ns.endpoint())); }) ==
          Errc::nxdomain);
    CHECK(code_of([&] { resolve("000001.0000001.sgtin.id.onsepc.com", config("direct-dns", ns.endpoint())); }) ==
          Errc::resolution_failed);
}

TEST_CASE("dnssec resolution with either anchor")
{
    harness::StubNameserver ns({fixture_zone()});
    auto zsk = resolve(kName, config("direct-dnssec", ns.endpoint()));
    REQUIRE(zsk.verification);
    CHECK_MESSAGE(zsk.verification->verdict == Verdict::secure, zsk.verification->detail);
    CHECK(zsk.records.size() == 3);

    auto c = config("direct-dnssec", ns.endpoint());
    c.trust_anchors = anchors("ksk");
    ns.clear_log();
    auto ksk = resolve(kName, c);
    REQUIRE(ksk.verification);
    CHECK_MESSAGE(ksk.verification->verdict == Verdict::secure, ksk.verification->detail);
    auto log = ns.query_log();
    REQUIRE(log.size() == 2);
    CHECK(log[1].ends_with("0434687.sgtin.id.onsepc.com DNSKEY"));
}

TEST_CASE("strict and permissive handling of bad answers")
{
    auto zone = fixture_zone();
    for (auto& rr : zone.records)
        if (rr.type == dns::rrtype::NAPTR && rr.name == kName && rr.rdata.back() == 0)
            rr.rdata[rr.rdata.size() - 10] ^= 0x01;
    harness::StubNameserver ns({zone});
    auto c = config("direct-dnssec", ns.endpoint());
    CHECK(code_of([&] { resolve(kName, c); }) == Errc::verification_failed);
    c.strict = false;
    auto r = resolve(kName, c);
    REQUIRE(r.verification);
    CHECK(r.verification->verdict == Verdict::bogus);

    harness::StubNameserver unsigned_ns({wide_zone(2)});
    auto u = config("direct-dnssec", unsigned_ns.endpoint());
    CHECK(code_of([&] { resolve("000001.0000009.sgtin.id.onsepc.com", u); }) == Errc::verification_failed);
    u.strict = false;
    auto ur = resolve("000001.0000009.sgtin.id.onsepc.com", u);
    CHECK(ur.verification->verdict == Verdict::unsigned_answer);
    CHECK(ur.records.size() == 2);
}

TEST_CASE("truncated UDP replies fall back to TCP")
{
    harness::StubNameserver ns({wide_zone(20), fixture_zone()});
    auto q = dns::build_query("000001.0000009.sgtin.id.onsepc.com", false, 99);
    auto r = send_direct(q, ns.endpoint(), std::chrono::milliseconds(1000));
    CHECK(r.via_stream);
    CHECK(r.rrset.size() == 20);
    CHECK(r.wire_size > 512);
    auto small = send_direct(dns::build_query(kName, false, 5), ns.endpoint(), std::chrono::milliseconds(1000));
    CHECK_FALSE(small.via_stream);
}

TEST_CASE("proxied resolution through the stub SOCKS4a proxy")
{
    harness::StubNameserver ns({fixture_zone()});
    harness::StubSocksProxy proxy;
    auto r = resolve(kName, config("tor-dnssec", ns.endpoint(), proxy.endpoint()));
    CHECK(r.records.size() == 3);
    CHECK(r.verification->verdict == Verdict::secure);
    CHECK(proxy.connections() == 1);
}

TEST_CASE("proxy faults map to tunnel errors and exhaust the retry budget")
{
    harness::StubNameserver ns({fixture_zone()});
    harness::ProxyOptions refusing;
    refusing.refuse_rate = 1.0;
    harness::StubSocksProxy refuser(refusing);
    CHECK(code_of([&] { resolve(kName, config("tor-dns", ns.endpoint(), refuser.endpoint())); }) ==
          Errc::tunnel_refused);
    CHECK(refuser.connections() == 4);

    harness::ProxyOptions dropping;
    dropping.drop_rate = 1.0;
    harness::StubSocksProxy dropper(dropping);
    auto c = config("tor-dns", ns.endpoint(), dropper.endpoint());
    c.max_retries = 2;
    CHECK(code_of([&] { resolve(kName, c); }) == Errc::tunnel_broken);
    CHECK(dropper.connections() == 3);
}

TEST_CASE("retries absorb intermittent drops")
{
    harness::StubNameserver ns({fixture_zone()});
    harness::ProxyOptions flaky;
    flaky.drop_rate = 0.5;
    flaky.seed = 4;
    harness::StubSocksProxy proxy(flaky);
    auto c = config("tor-dns", ns.endpoint(), proxy.endpoint());
    c.max_retries = 12;
    unsigned total_attempts = 0;
    for (int i = 0; i < 10; ++i) {
        auto r = resolve(kName, c);
        CHECK(r.records.size() == 3);
        total_attempts += r.attempts;
    }
    CHECK(total_attempts > 10);
    CHECK(proxy.dropped() == total_attempts - 10);
}

TEST_CASE("unreachable and silent servers")
{
    auto silent = net::bind_udp("127.0.0.1", 0);
    auto c = config("direct-dns", net::Endpoint{"127.0.0.1", net::local_port(silent)});
    c.timeout = std::chrono::milliseconds(100);
    c.max_retries = 1;
    auto start = net::Clock::now();
    CHECK(code_of([&] { resolve(kName, c); }) == Errc::timeout);
    CHECK(net::Clock::now() - start >= std::chrono::milliseconds(200));

    std::uint16_t dead_port;
    {
        auto l = net::listen_tcp("127.0.0.1", 0);
        dead_port = net::local_port(l);
    }
    auto p = config("tor-dns", net::Endpoint{"127.0.0.1", 53}, net::Endpoint{"127.0.0.1", dead_port});
    p.max_retries = 0;
    CHECK(code_of([&] { resolve(kName, p); }) == Errc::connect_failed);
}
