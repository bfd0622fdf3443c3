#include "onsanon/zonefile.hpp"

#include <cctype>
#include <charconv>
#include <ctime>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "onsanon/error.hpp"

namespace onsanon::zonefile {

namespace {

struct Token {
    std::string text;
    bool quoted = false;
};

struct Entry {
    std::vector<Token> tokens;
    bool blank_owner = false;
    std::size_t line = 0;
};

std::vector<Entry> tokenize(std::string_view text)
{
    std::vector<Entry> entries;
    Entry cur;
    int depth = 0;
    std::size_t line = 1;
    bool at_line_start = true;
    std::size_t i = 0;

    auto finish = [&] {
        if (!cur.tokens.empty())
            entries.push_back(std::move(cur));
        cur = Entry{};
    };

    while (i < text.size()) {
        char c = text[i];
        if (at_line_start && depth == 0) {
            cur.line = line;
            cur.blank_owner = (c == ' ' || c == '\t');
            at_line_start = false;
        }
        if (c == '\n') {
            ++line;
            ++i;
            if (depth == 0) {
                finish();
                at_line_start = true;
            }
            continue;
        }
        if (c == ';') {
            while (i < text.size() && text[i] != '\n')
                ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '(') {
            ++depth;
            ++i;
            continue;
        }
        if (c == ')') {
            if (--depth < 0)
                throw Error(Errc::parse, fmt::format("line {}: unbalanced ')'", line));
            ++i;
            continue;
        }
        Token tok;
        if (c == '"') {
            tok.quoted = true;
            ++i;
            while (true) {
                if (i >= text.size())
                    throw Error(Errc::parse, fmt::format("line {}: unterminated string", line));
                char d = text[i];
                if (d == '"') {
                    ++i;
                    break;
                }
                if (d == '\\' && i + 1 < text.size()) {
                    if (i + 3 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])) &&
                        std::isdigit(static_cast<unsigned char>(text[i + 2])) &&
                        std::isdigit(static_cast<unsigned char>(text[i + 3]))) {
                        tok.text += static_cast<char>((text[i + 1] - '0') * 100 + (text[i + 2] - '0') * 10 +
                                                      (text[i + 3] - '0'));
                        i += 4;
                    } else {
                        tok.text += text[i + 1];
                        i += 2;
                    }
                    continue;
                }
                if (d == '\n')
                    ++line;
                tok.text += d;
                ++i;
            }
        } else {
            while (i < text.size()) {
                char d = text[i];
                if (d == ' ' || d == '\t' || d == '\r' || d == '\n' || d == ';' || d == '(' || d == ')' || d == '"')
                    break;
                if (d == '\\' && i + 1 < text.size()) {
                    tok.text += d;
                    tok.text += text[i + 1];
                    i += 2;
                    continue;
                }
                tok.text += d;
                ++i;
            }
        }
        cur.tokens.push_back(std::move(tok));
    }
    if (depth != 0)
        throw Error(Errc::parse, "unbalanced '(' at end of input");
    finish();
    return entries;
}

std::string resolve_name(std::string_view name, std::string_view origin)
{
    if (name == "@")
        return std::string(origin);
    if (name.ends_with('.') && !name.ends_with("\\."))
        return dns::normalize_name(name);
    if (origin.empty())
        return std::string(name);
    return fmt::format("{}.{}", name, origin);
}

template <typename T>
T parse_uint(std::string_view s, std::string_view what)
{
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error(Errc::parse, fmt::format("bad {} '{}'", what, s));
    return v;
}

bool is_number(std::string_view s)
{
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void need_tokens(std::span<const std::string> tokens, std::size_t n, std::uint16_t type)
{
    if (tokens.size() < n)
        throw Error(Errc::parse, fmt::format("{} RDATA needs {} fields, got {}", dns::type_name(type), n, tokens.size()));
}

std::string join_from(std::span<const std::string> tokens, std::size_t from)
{
    std::string out;
    for (std::size_t i = from; i < tokens.size(); ++i)
        out += tokens[i];
    return out;
}

}  // namespace

std::uint32_t parse_rrsig_time(std::string_view text)
{
    if (text.size() == 14 && is_number(text)) {
        std::tm tm{};
        tm.tm_year = parse_uint<int>(text.substr(0, 4), "year") - 1900;
        tm.tm_mon = parse_uint<int>(text.substr(4, 2), "month") - 1;
        tm.tm_mday = parse_uint<int>(text.substr(6, 2), "day");
        tm.tm_hour = parse_uint<int>(text.substr(8, 2), "hour");
        tm.tm_min = parse_uint<int>(text.substr(10, 2), "minute");
        tm.tm_sec = parse_uint<int>(text.substr(12, 2), "second");
        return static_cast<std::uint32_t>(timegm(&tm));
    }
    return parse_uint<std::uint32_t>(text, "signature time");
}

dns::Bytes rdata_from_text(std::uint16_t type, std::span<const std::string> t, std::string_view origin)
{
    if (!t.empty() && t[0] == "\\#") {
        need_tokens(t, 2, type);
        auto len = parse_uint<std::size_t>(t[1], "generic RDATA length");
        auto hex = join_from(t, 2);
        if (hex.size() != 2 * len)
            throw Error(Errc::parse, "generic RDATA length mismatch");
        dns::Bytes out;
        for (std::size_t i = 0; i < len; ++i)
            out.push_back(static_cast<std::uint8_t>(std::stoul(hex.substr(2 * i, 2), nullptr, 16)));
        return out;
    }
    switch (type) {
    case dns::rrtype::A: {
        need_tokens(t, 1, type);
        dns::Bytes out;
        std::istringstream in(t[0]);
        std::string part;
        while (std::getline(in, part, '.'))
            out.push_back(parse_uint<std::uint8_t>(part, "IPv4 octet"));
        if (out.size() != 4)
            throw Error(Errc::parse, fmt::format("bad IPv4 address '{}'", t[0]));
        return out;
    }
    case dns::rrtype::NS:
        need_tokens(t, 1, type);
        return dns::encode_name(resolve_name(t[0], origin));
    case dns::rrtype::SOA: {
        need_tokens(t, 7, type);
        dns::SoaRdata s;
        s.mname = resolve_name(t[0], origin);
        s.rname = resolve_name(t[1], origin);
        s.serial = parse_uint<std::uint32_t>(t[2], "serial");
        s.refresh = parse_uint<std::uint32_t>(t[3], "refresh");
        s.retry = parse_uint<std::uint32_t>(t[4], "retry");
        s.expire = parse_uint<std::uint32_t>(t[5], "expire");
        s.minimum = parse_uint<std::uint32_t>(t[6], "minimum");
        return s.to_rdata();
    }
    case dns::rrtype::TXT: {
        dns::Bytes out;
        for (const auto& s : t) {
            if (s.size() > 255)
                throw Error(Errc::parse, "TXT string exceeds 255 octets");
            out.push_back(static_cast<std::uint8_t>(s.size()));
            out.insert(out.end(), s.begin(), s.end());
        }
        return out;
    }
    case dns::rrtype::NAPTR: {
        need_tokens(t, 6, type);
        ons::NaptrRecord n;
        n.order = parse_uint<std::uint16_t>(t[0], "order");
        n.preference = parse_uint<std::uint16_t>(t[1], "preference");
        n.flags = t[2];
        n.service = t[3];
        n.regexp = t[4];
        n.replacement = t[5] == "." ? "." : resolve_name(t[5], origin);
        return dns::naptr_to_rdata(n);
    }
    case dns::rrtype::RRSIG: {
        need_tokens(t, 9, type);
        dns::RrsigRdata s;
        auto covered = dns::type_from_name(t[0]);
        if (!covered)
            throw Error(Errc::parse, fmt::format("unknown covered type '{}'", t[0]));
        s.type_covered = *covered;
        s.algorithm = parse_uint<std::uint8_t>(t[1], "algorithm");
        s.labels = parse_uint<std::uint8_t>(t[2], "labels");
        s.original_ttl = parse_uint<std::uint32_t>(t[3], "original TTL");
        s.expiration = parse_rrsig_time(t[4]);
        s.inception = parse_rrsig_time(t[5]);
        s.key_tag = parse_uint<std::uint16_t>(t[6], "key tag");
        s.signer = resolve_name(t[7], origin);
        s.signature = dns::base64_decode(join_from(t, 8));
        return s.to_rdata();
    }
    case dns::rrtype::DNSKEY: {
        need_tokens(t, 4, type);
        dns::DnskeyRdata k;
        k.flags = parse_uint<std::uint16_t>(t[0], "flags");
        k.protocol = parse_uint<std::uint8_t>(t[1], "protocol");
        k.algorithm = parse_uint<std::uint8_t>(t[2], "algorithm");
        k.public_key = dns::base64_decode(join_from(t, 3));
        return k.to_rdata();
    }
    default:
        throw Error(Errc::parse, fmt::format("no presentation parser for {}", dns::type_name(type)));
    }
}

Zone parse(std::string_view text, std::string_view origin_in, std::uint32_t default_ttl)
{
    Zone zone;
    zone.origin = dns::normalize_name(origin_in);
    std::string origin = zone.origin;
    std::uint32_t ttl = default_ttl;
    std::string last_owner;
    bool origin_set = !origin.empty();

    for (const auto& entry : tokenize(text)) {
        const auto& tok = entry.tokens;
        try {
            if (!tok[0].quoted && tok[0].text == "$ORIGIN") {
                if (tok.size() < 2)
                    throw Error(Errc::parse, "$ORIGIN needs a name");
                origin = resolve_name(tok[1].text, origin);
                if (!origin_set) {
                    zone.origin = origin;
                    origin_set = true;
                }
                continue;
            }
            if (!tok[0].quoted && tok[0].text == "$TTL") {
                if (tok.size() < 2)
                    throw Error(Errc::parse, "$TTL needs a value");
                ttl = parse_uint<std::uint32_t>(tok[1].text, "TTL");
                continue;
            }
            if (!tok[0].quoted && tok[0].text.starts_with('$'))
                throw Error(Errc::parse, fmt::format("unsupported directive {}", tok[0].text));

            std::size_t i = 0;
            dns::ResourceRecord rr;
            if (entry.blank_owner) {
                if (last_owner.empty() && origin.empty())
                    throw Error(Errc::parse, "blank owner with no previous record");
                rr.name = last_owner;
            } else {
                rr.name = resolve_name(tok[i++].text, origin);
            }
            rr.ttl = ttl;
            bool have_type = false;
            while (i < tok.size() && !have_type) {
                const auto& s = tok[i++].text;
                if (is_number(s)) {
                    rr.ttl = parse_uint<std::uint32_t>(s, "TTL");
                } else if (s == "IN" || s == "in") {
                    rr.rrclass = dns::kClassIn;
                } else if (auto type = dns::type_from_name(s)) {
                    rr.type = *type;
                    have_type = true;
                } else {
                    throw Error(Errc::parse, fmt::format("unknown type or class '{}'", s));
                }
            }
            if (!have_type)
                throw Error(Errc::parse, "record has no type");
            std::vector<std::string> rdata_tokens;
            for (; i < tok.size(); ++i)
                rdata_tokens.push_back(tok[i].text);
            rr.rdata = rdata_from_text(rr.type, rdata_tokens, origin);
            last_owner = rr.name;
            if (!origin_set) {
                zone.origin = rr.name;
                origin_set = true;
            }
            zone.records.push_back(std::move(rr));
        } catch (const Error& e) {
            throw Error(Errc::parse, fmt::format("line {}: {}", entry.line, e.what()));
        }
    }
    return zone;
}

Zone load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io, fmt::format("cannot open {}", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string render_record(const dns::ResourceRecord& rr)
{
    return fmt::format("{}. {} IN {} {}", rr.name, rr.ttl, dns::type_name(rr.type),
                       dns::rdata_to_text(rr.type, rr.rdata));
}

std::string render(const Zone& zone)
{
    std::string out = fmt::format("$ORIGIN {}.\n", zone.origin);
    for (const auto& rr : zone.records) {
        out += render_record(rr);
        out += '\n';
    }
    return out;
}

std::vector<dns::DnskeyRecord> parse_anchors(std::string_view text)
{
    std::vector<dns::DnskeyRecord> anchors;
    for (const auto& rr : parse(text).records)
        if (rr.type == dns::rrtype::DNSKEY)
            anchors.push_back(dns::DnskeyRecord{rr.name, dns::DnskeyRdata::from_rdata(rr.rdata)});
    return anchors;
}

std::vector<dns::DnskeyRecord> load_anchors(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io, fmt::format("cannot open anchor file {}", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    auto anchors = parse_anchors(buf.str());
    if (anchors.empty())
        throw Error(Errc::config, fmt::format("no DNSKEY records in {}", path.string()));
    return anchors;
}

}  // namespace onsanon::zonefile
