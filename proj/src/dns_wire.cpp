#include "onsanon/dns_wire.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <ctime>
#include <random>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "onsanon/error.hpp"

namespace onsanon::dns {

namespace {

struct TypeEntry {
    std::uint16_t type;
    std::string_view name;
};

constexpr std::array<TypeEntry, 9> kTypes{{
    {rrtype::A, "A"},
    {rrtype::NS, "NS"},
    {rrtype::SOA, "SOA"},
    {rrtype::TXT, "TXT"},
    {rrtype::AAAA, "AAAA"},
    {rrtype::NAPTR, "NAPTR"},
    {rrtype::OPT, "OPT"},
    {rrtype::RRSIG, "RRSIG"},
    {rrtype::DNSKEY, "DNSKEY"},
}};

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v)
    {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v)
    {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void name(std::string_view n) { bytes(encode_name(n)); }
    void char_string(std::string_view s)
    {
        if (s.size() > 255)
            throw Error(Errc::encoding, fmt::format("character-string of {} octets exceeds 255", s.size()));
        u8(static_cast<std::uint8_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

/// Bounds-checked reader over a whole message; `msg` is kept for
/// following compression pointers.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> msg, std::size_t pos = 0, std::size_t end = SIZE_MAX)
        : msg_(msg), pos_(pos), end_(std::min(end, msg.size()))
    {
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return end_ - pos_; }

    std::uint8_t u8()
    {
        need(1);
        return msg_[pos_++];
    }
    std::uint16_t u16()
    {
        need(2);
        auto v = static_cast<std::uint16_t>(msg_[pos_] << 8 | msg_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32()
    {
        std::uint32_t hi = u16();
        return hi << 16 | u16();
    }
    Bytes bytes(std::size_t n)
    {
        need(n);
        Bytes b(msg_.begin() + static_cast<std::ptrdiff_t>(pos_), msg_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return b;
    }
    std::string char_string()
    {
        auto n = u8();
        need(n);
        std::string s(reinterpret_cast<const char*>(msg_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::string name()
    {
        std::string out;
        std::size_t p = pos_;
        bool jumped = false;
        int hops = 0;
        std::size_t total = 0;
        while (true) {
            if (p >= msg_.size())
                throw Error(Errc::decode, "name runs past end of message");
            std::uint8_t len = msg_[p];
            if ((len & 0xC0) == 0xC0) {
                if (p + 1 >= msg_.size())
                    throw Error(Errc::decode, "truncated compression pointer");
                if (++hops > 64)
                    throw Error(Errc::decode, "compression pointer loop");
                std::size_t target = static_cast<std::size_t>(len & 0x3F) << 8 | msg_[p + 1];
                if (!jumped) {
                    pos_ = p + 2;
                    jumped = true;
                }
                p = target;
                continue;
            }
            if ((len & 0xC0) != 0)
                throw Error(Errc::decode, "unsupported label type");
            if (len == 0) {
                if (!jumped)
                    pos_ = p + 1;
                break;
            }
            if (p + 1 + len > msg_.size())
                throw Error(Errc::decode, "label runs past end of message");
            total += len + 1u;
            if (total > 255)
                throw Error(Errc::decode, "name exceeds 255 octets");
            if (!out.empty())
                out += '.';
            for (std::size_t i = 0; i < len; ++i) {
                auto c = msg_[p + 1 + i];
                if (c == '.' || c == '\\' || c <= 0x20 || c >= 0x7F)
                    out += fmt::format("\\{:03}", c);
                else
                    out += static_cast<char>(c);
            }
            p += 1u + len;
        }
        if (pos_ > end_)
            throw Error(Errc::decode, "name overruns its record");
        return out;
    }

private:
    void need(std::size_t n) const
    {
        if (remaining() < n)
            throw Error(Errc::decode, fmt::format("need {} octets at offset {}, have {}", n, pos_, remaining()));
    }

    std::span<const std::uint8_t> msg_;
    std::size_t pos_;
    std::size_t end_;
};

/// Re-encodes RDATA whose layout embeds names, resolving compression
/// against the full message.
Bytes expand_rdata(std::uint16_t type, std::span<const std::uint8_t> msg, std::size_t start, std::size_t len)
{
    Reader r(msg, start, start + len);
    Writer w;
    switch (type) {
    case rrtype::NS:
        w.name(r.name());
        break;
    case rrtype::SOA:
        w.name(r.name());
        w.name(r.name());
        for (int i = 0; i < 5; ++i)
            w.u32(r.u32());
        break;
    case rrtype::NAPTR:
        w.u16(r.u16());
        w.u16(r.u16());
        w.char_string(r.char_string());
        w.char_string(r.char_string());
        w.char_string(r.char_string());
        w.name(r.name());
        break;
    default:
        return Bytes(msg.begin() + static_cast<std::ptrdiff_t>(start),
                     msg.begin() + static_cast<std::ptrdiff_t>(start + len));
    }
    if (r.remaining() != 0)
        throw Error(Errc::decode, fmt::format("{} octets of trailing RDATA in {}", r.remaining(), type_name(type)));
    return w.take();
}

std::string quote(std::string_view s)
{
    std::string out = "\"";
    for (unsigned char c : s) {
        if (c == '"' || c == '\\')
            out += fmt::format("\\{}", static_cast<char>(c));
        else if (c < 0x20 || c >= 0x7F)
            out += fmt::format("\\{:03}", c);
        else
            out += static_cast<char>(c);
    }
    return out + "\"";
}

std::string absolute(std::string_view name)
{
    return std::string(name) + ".";
}

std::string format_time(std::uint32_t t)
{
    std::time_t tt = t;
    std::tm tm{};
    gmtime_r(&tt, &tm);
    return fmt::format("{:04}{:02}{:02}{:02}{:02}{:02}", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                       tm.tm_min, tm.tm_sec);
}

}  // namespace

std::string type_name(std::uint16_t type)
{
    for (const auto& e : kTypes)
        if (e.type == type)
            return std::string(e.name);
    return fmt::format("TYPE{}", type);
}

std::optional<std::uint16_t> type_from_name(std::string_view name)
{
    std::string up(name);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    for (const auto& e : kTypes)
        if (e.name == up)
            return e.type;
    if (up.starts_with("TYPE") && up.size() > 4) {
        unsigned v = 0;
        for (char c : up.substr(4)) {
            if (c < '0' || c > '9')
                return std::nullopt;
            v = v * 10 + static_cast<unsigned>(c - '0');
            if (v > 0xFFFF)
                return std::nullopt;
        }
        return static_cast<std::uint16_t>(v);
    }
    return std::nullopt;
}

std::string rcode_name(std::uint8_t code)
{
    switch (code) {
    case rcode::NOERROR: return "NOERROR";
    case rcode::FORMERR: return "FORMERR";
    case rcode::SERVFAIL: return "SERVFAIL";
    case rcode::NXDOMAIN: return "NXDOMAIN";
    case rcode::NOTIMP: return "NOTIMP";
    case rcode::REFUSED: return "REFUSED";
    default: return fmt::format("RCODE{}", code);
    }
}

std::string normalize_name(std::string_view name)
{
    if (name.ends_with('.') && !name.ends_with("\\."))
        name.remove_suffix(1);
    return std::string(name);
}

std::string canonical_name(std::string_view name)
{
    auto out = normalize_name(name);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool names_equal(std::string_view a, std::string_view b)
{
    return canonical_name(a) == canonical_name(b);
}

unsigned label_count(std::string_view name)
{
    auto n = normalize_name(name);
    if (n.empty())
        return 0;
    unsigned count = 1;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] == '\\')
            ++i;
        else if (n[i] == '.')
            ++count;
    }
    if (n == "*" || n.starts_with("*."))
        --count;
    return count;
}

Bytes encode_name(std::string_view name)
{
    auto n = normalize_name(name);
    Bytes out;
    std::string label;
    auto flush = [&] {
        if (label.empty())
            throw Error(Errc::encoding, fmt::format("empty label in '{}'", name));
        if (label.size() > 63)
            throw Error(Errc::encoding, fmt::format("label of {} octets in '{}'", label.size(), name));
        out.push_back(static_cast<std::uint8_t>(label.size()));
        out.insert(out.end(), label.begin(), label.end());
        label.clear();
    };
    for (std::size_t i = 0; i < n.size(); ++i) {
        char c = n[i];
        if (c == '\\') {
            if (i + 3 < n.size() && std::isdigit(static_cast<unsigned char>(n[i + 1])) &&
                std::isdigit(static_cast<unsigned char>(n[i + 2])) && std::isdigit(static_cast<unsigned char>(n[i + 3]))) {
                int v = (n[i + 1] - '0') * 100 + (n[i + 2] - '0') * 10 + (n[i + 3] - '0');
                if (v > 255)
                    throw Error(Errc::encoding, fmt::format("bad escape in '{}'", name));
                label += static_cast<char>(v);
                i += 3;
            } else if (i + 1 < n.size()) {
                label += n[++i];
            } else {
                throw Error(Errc::encoding, fmt::format("dangling escape in '{}'", name));
            }
        } else if (c == '.') {
            flush();
        } else {
            label += c;
        }
    }
    if (!n.empty())
        flush();
    out.push_back(0);
    if (out.size() > 255)
        throw Error(Errc::encoding, fmt::format("name of {} wire octets exceeds 255", out.size()));
    if (n.size() > 253)
        throw Error(Errc::encoding, fmt::format("name of {} octets exceeds 253", n.size()));
    return out;
}

Bytes Message::encode() const
{
    Writer w;
    w.u16(id);
    std::uint16_t flags = static_cast<std::uint16_t>((qr ? 0x8000 : 0) | (opcode & 0x0F) << 11 | (aa ? 0x0400 : 0) |
                                                     (tc ? 0x0200 : 0) | (rd ? 0x0100 : 0) | (ra ? 0x0080 : 0) |
                                                     (ad ? 0x0020 : 0) | (cd ? 0x0010 : 0) | (rcode & 0x0F));
    w.u16(flags);
    w.u16(static_cast<std::uint16_t>(questions.size()));
    w.u16(static_cast<std::uint16_t>(answers.size()));
    w.u16(static_cast<std::uint16_t>(authority.size()));
    w.u16(static_cast<std::uint16_t>(additional.size()));
    for (const auto& q : questions) {
        w.name(q.name);
        w.u16(q.qtype);
        w.u16(q.qclass);
    }
    for (const auto* section : {&answers, &authority, &additional}) {
        for (const auto& rr : *section) {
            w.name(rr.name);
            w.u16(rr.type);
            w.u16(rr.rrclass);
            w.u32(rr.ttl);
            if (rr.rdata.size() > 0xFFFF)
                throw Error(Errc::encoding, "RDATA exceeds 65535 octets");
            w.u16(static_cast<std::uint16_t>(rr.rdata.size()));
            w.bytes(rr.rdata);
        }
    }
    return w.take();
}

Message Message::decode(std::span<const std::uint8_t> wire)
{
    Reader r(wire);
    Message m;
    m.id = r.u16();
    auto flags = r.u16();
    m.qr = flags & 0x8000;
    m.opcode = static_cast<std::uint8_t>(flags >> 11 & 0x0F);
    m.aa = flags & 0x0400;
    m.tc = flags & 0x0200;
    m.rd = flags & 0x0100;
    m.ra = flags & 0x0080;
    m.ad = flags & 0x0020;
    m.cd = flags & 0x0010;
    m.rcode = static_cast<std::uint8_t>(flags & 0x0F);
    auto qd = r.u16();
    auto an = r.u16();
    auto ns = r.u16();
    auto ar = r.u16();
    for (unsigned i = 0; i < qd; ++i) {
        Question q;
        q.name = r.name();
        q.qtype = r.u16();
        q.qclass = r.u16();
        m.questions.push_back(std::move(q));
    }
    auto read_rrs = [&](unsigned count, std::vector<ResourceRecord>& out) {
        for (unsigned i = 0; i < count; ++i) {
            ResourceRecord rr;
            rr.name = r.name();
            rr.type = r.u16();
            rr.rrclass = r.u16();
            rr.ttl = r.u32();
            auto len = r.u16();
            auto start = r.pos();
            r.bytes(len);
            try {
                rr.rdata = expand_rdata(rr.type, wire, start, len);
            } catch (const Error&) {
                // Left raw; consumers of the layout reject it on their own terms.
                rr.rdata.assign(wire.begin() + static_cast<std::ptrdiff_t>(start),
                                wire.begin() + static_cast<std::ptrdiff_t>(start + len));
            }
            out.push_back(std::move(rr));
        }
    };
    read_rrs(an, m.answers);
    read_rrs(ns, m.authority);
    read_rrs(ar, m.additional);
    return m;
}

std::optional<Edns> Message::edns() const
{
    for (const auto& rr : additional) {
        if (rr.type == rrtype::OPT)
            return Edns{rr.rrclass, (rr.ttl & 0x8000) != 0};
    }
    return std::nullopt;
}

void Message::set_edns(const Edns& e)
{
    std::erase_if(additional, [](const ResourceRecord& rr) { return rr.type == rrtype::OPT; });
    additional.push_back(ResourceRecord{"", rrtype::OPT, e.udp_payload, e.dnssec_ok ? 0x8000u : 0u, {}});
}

std::uint16_t random_query_id()
{
    thread_local std::mt19937 rng{std::random_device{}()};
    return static_cast<std::uint16_t>(rng());
}

Bytes build_query(std::string_view name, std::uint16_t qtype, bool dnssec, std::uint16_t id)
{
    Message m;
    m.id = id;
    m.rd = true;
    m.questions.push_back(Question{normalize_name(name), qtype, kClassIn});
    if (dnssec)
        m.set_edns(Edns{4096, true});
    return m.encode();
}

Bytes build_query(std::string_view fqdn, bool dnssec, std::uint16_t id)
{
    return build_query(fqdn, rrtype::NAPTR, dnssec, id);
}

Bytes build_query(std::string_view fqdn, bool dnssec)
{
    return build_query(fqdn, dnssec, random_query_id());
}

Bytes naptr_to_rdata(const ons::NaptrRecord& r)
{
    Writer w;
    w.u16(r.order);
    w.u16(r.preference);
    w.char_string(r.flags);
    w.char_string(r.service);
    w.char_string(r.regexp);
    w.name(r.replacement);
    return w.take();
}

ons::NaptrRecord naptr_from_rdata(std::span<const std::uint8_t> rdata)
{
    Reader r(rdata);
    ons::NaptrRecord n;
    n.order = r.u16();
    n.preference = r.u16();
    n.flags = r.char_string();
    n.service = r.char_string();
    n.regexp = r.char_string();
    auto repl = r.name();
    n.replacement = repl.empty() ? "." : repl;
    if (r.remaining() != 0)
        throw Error(Errc::decode, "trailing octets in NAPTR RDATA");
    return n;
}

Bytes RrsigRdata::to_rdata() const
{
    Writer w;
    w.u16(type_covered);
    w.u8(algorithm);
    w.u8(labels);
    w.u32(original_ttl);
    w.u32(expiration);
    w.u32(inception);
    w.u16(key_tag);
    w.name(signer);
    w.bytes(signature);
    return w.take();
}

RrsigRdata RrsigRdata::from_rdata(std::span<const std::uint8_t> rdata)
{
    Reader r(rdata);
    RrsigRdata s;
    s.type_covered = r.u16();
    s.algorithm = r.u8();
    s.labels = r.u8();
    s.original_ttl = r.u32();
    s.expiration = r.u32();
    s.inception = r.u32();
    s.key_tag = r.u16();
    s.signer = r.name();
    s.signature = r.bytes(r.remaining());
    return s;
}

Bytes DnskeyRdata::to_rdata() const
{
    Writer w;
    w.u16(flags);
    w.u8(protocol);
    w.u8(algorithm);
    w.bytes(public_key);
    return w.take();
}

DnskeyRdata DnskeyRdata::from_rdata(std::span<const std::uint8_t> rdata)
{
    Reader r(rdata);
    DnskeyRdata k;
    k.flags = r.u16();
    k.protocol = r.u8();
    k.algorithm = r.u8();
    k.public_key = r.bytes(r.remaining());
    return k;
}

std::uint16_t DnskeyRdata::key_tag() const
{
    auto rdata = to_rdata();
    std::uint32_t ac = 0;
    for (std::size_t i = 0; i < rdata.size(); ++i)
        ac += (i & 1) ? rdata[i] : static_cast<std::uint32_t>(rdata[i]) << 8;
    ac += (ac >> 16) & 0xFFFF;
    return static_cast<std::uint16_t>(ac & 0xFFFF);
}

Bytes SoaRdata::to_rdata() const
{
    Writer w;
    w.name(mname);
    w.name(rname);
    w.u32(serial);
    w.u32(refresh);
    w.u32(retry);
    w.u32(expire);
    w.u32(minimum);
    return w.take();
}

SoaRdata SoaRdata::from_rdata(std::span<const std::uint8_t> rdata)
{
    Reader r(rdata);
    SoaRdata s;
    s.mname = r.name();
    s.rname = r.name();
    s.serial = r.u32();
    s.refresh = r.u32();
    s.retry = r.u32();
    s.expire = r.u32();
    s.minimum = r.u32();
    return s;
}

Bytes canonical_rdata(std::uint16_t type, std::span<const std::uint8_t> rdata)
{
    switch (type) {
    case rrtype::NS: {
        Reader r(rdata);
        return encode_name(canonical_name(r.name()));
    }
    case rrtype::SOA: {
        auto soa = SoaRdata::from_rdata(rdata);
        soa.mname = canonical_name(soa.mname);
        soa.rname = canonical_name(soa.rname);
        return soa.to_rdata();
    }
    case rrtype::NAPTR: {
        auto n = naptr_from_rdata(rdata);
        n.replacement = canonical_name(n.replacement);
        return naptr_to_rdata(n);
    }
    case rrtype::RRSIG: {
        auto s = RrsigRdata::from_rdata(rdata);
        s.signer = canonical_name(s.signer);
        return s.to_rdata();
    }
    default:
        return Bytes(rdata.begin(), rdata.end());
    }
}

std::string rdata_to_text(std::uint16_t type, std::span<const std::uint8_t> rdata)
{
    switch (type) {
    case rrtype::A:
        if (rdata.size() == 4)
            return fmt::format("{}.{}.{}.{}", rdata[0], rdata[1], rdata[2], rdata[3]);
        break;
    case rrtype::NS: {
        Reader r(rdata);
        return absolute(r.name());
    }
    case rrtype::SOA: {
        auto s = SoaRdata::from_rdata(rdata);
        return fmt::format("{} {} {} {} {} {} {}", absolute(s.mname), absolute(s.rname), s.serial, s.refresh, s.retry,
                           s.expire, s.minimum);
    }
    case rrtype::NAPTR: {
        auto n = naptr_from_rdata(rdata);
        return fmt::format("{} {} {} {} {} {}", n.order, n.preference, quote(n.flags), quote(n.service),
                           quote(n.regexp), n.replacement == "." ? "." : absolute(n.replacement));
    }
    case rrtype::RRSIG: {
        auto s = RrsigRdata::from_rdata(rdata);
        return fmt::format("{} {} {} {} {} {} {} {} {}", type_name(s.type_covered), s.algorithm, s.labels,
                           s.original_ttl, format_time(s.expiration), format_time(s.inception), s.key_tag,
                           absolute(s.signer), base64_encode(s.signature));
    }
    case rrtype::DNSKEY: {
        auto k = DnskeyRdata::from_rdata(rdata);
        return fmt::format("{} {} {} {}", k.flags, k.protocol, k.algorithm, base64_encode(k.public_key));
    }
    default:
        break;
    }
    std::string hex;
    for (auto b : rdata)
        hex += fmt::format("{:02x}", b);
    return fmt::format("\\# {} {}", rdata.size(), hex);
}

std::string base64_encode(std::span<const std::uint8_t> data)
{
    std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
    int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(), static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Bytes base64_decode(std::string_view text)
{
    std::string clean;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c)))
            clean += c;
    if (clean.size() % 4 != 0)
        throw Error(Errc::parse, "base64 length is not a multiple of 4");
    Bytes out(clean.size() / 4 * 3);
    int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                            static_cast<int>(clean.size()));
    if (n < 0)
        throw Error(Errc::parse, "invalid base64");
    std::size_t pad = 0;
    if (!clean.empty() && clean.back() == '=')
        ++pad;
    if (clean.size() > 1 && clean[clean.size() - 2] == '=')
        ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

}  // namespace onsanon::dns
