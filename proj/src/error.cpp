#include "onsanon/error.hpp"

namespace onsanon {

std::string_view errc_name(Errc code)
{
    switch (code) {
    case Errc::domain: return "domain-error";
    case Errc::unsupported_scheme: return "unsupported-scheme";
    case Errc::malformed_tag: return "malformed-tag";
    case Errc::overflow: return "overflow";
    case Errc::malformed_uri: return "malformed-uri";
    case Errc::no_partition: return "no-partition";
    case Errc::not_ons: return "not-ons";
    case Errc::malformed_regexp: return "malformed-regexp";
    case Errc::service_not_found: return "service-not-found";
    case Errc::encoding: return "encoding-error";
    case Errc::decode: return "decode-error";
    case Errc::parse: return "parse-error";
    case Errc::io: return "io-error";
    case Errc::config: return "config-error";
    case Errc::timeout: return "timeout";
    case Errc::connect_failed: return "connect-failed";
    case Errc::nxdomain: return "nxdomain";
    case Errc::servfail: return "servfail";
    case Errc::resolution_failed: return "resolution-failed";
    case Errc::tunnel_refused: return "tunnel-refused";
    case Errc::tunnel_timeout: return "tunnel-timeout";
    case Errc::tunnel_broken: return "tunnel-broken";
    case Errc::verification_failed: return "verification-failed";
    case Errc::spec: return "spec-error";
    case Errc::degenerate_model: return "degenerate-model";
    case Errc::invalid_distribution: return "invalid-distribution";
    case Errc::undefined_degree: return "undefined-degree";
    }
    return "unknown-error";
}

bool is_retryable(Errc code)
{
    switch (code) {
    case Errc::timeout:
    case Errc::connect_failed:
    case Errc::servfail:
    case Errc::tunnel_refused:
    case Errc::tunnel_timeout:
    case Errc::tunnel_broken:
    case Errc::decode:
        return true;
    default:
        return false;
    }
}

}  // namespace onsanon
