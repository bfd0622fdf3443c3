#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace onsanon {

enum class Errc {
    domain,
    unsupported_scheme,
    malformed_tag,
    overflow,
    malformed_uri,
    no_partition,
    not_ons,
    malformed_regexp,
    service_not_found,
    encoding,
    decode,
    parse,
    io,
    config,
    timeout,
    connect_failed,
    nxdomain,
    servfail,
    resolution_failed,
    tunnel_refused,
    tunnel_timeout,
    tunnel_broken,
    verification_failed,
    spec,
    degenerate_model,
    invalid_distribution,
    undefined_degree,
};

std::string_view errc_name(Errc code);

/// Failures that a fresh connection might not reproduce.
bool is_retryable(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace onsanon
