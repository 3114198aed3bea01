#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace radar {

struct MalformedRequest final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingHost final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A parsed HTTP/1.x request. Header names are folded to lowercase and
// de-duplicated on parse (values of repeats are comma-joined in arrival
// order). The body is kept as raw bytes, undecoded.
struct RawHttpRequest {
    std::string method;
    std::string target;
    std::string version;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;

    const std::string* find_header(std::string_view lowercase_name) const;
};

// The retrieval namespace key: requests are grouped, indexed, and
// thresholded per (method, host, path). host excludes the port; path is
// percent-decoded once, lowercased, and stripped of the query string.
struct Endpoint {
    std::string method;
    std::string host;
    std::string path;

    auto operator<=>(const Endpoint&) const = default;
    std::string key() const;  // "METHOD host path", used for hashing/printing
};

struct EndpointHash {
    std::size_t operator()(const Endpoint& e) const;
};

// Parses one raw request. Requires a request line and a header block
// terminated by a blank line; everything after the blank line is body.
RawHttpRequest parse_raw_request(std::string_view text);

// Endpoint from the absolute-form authority when present, else the Host
// header. Throws MissingHost when neither yields an authority.
Endpoint extract_endpoint(const RawHttpRequest& req);

// Percent-decodes one pass. Invalid escapes are left in place so the
// residual '%' flows through the abstraction schema. When
// plus_to_space is set, '+' decodes to a space (form-encoded payloads).
std::string percent_decode(std::string_view s, bool plus_to_space = false);

std::string to_lower(std::string_view s);

// True iff value matches the dotted-quad-with-port grammar:
// (0<=n<256).(0<=n<256).(0<=n<256).(0<=n<256):(1<=n<=65535)
bool is_valid_ipv4_port(std::string_view value);

// DNS-label hostname (labels of [a-z0-9-], 1..63 chars, no leading or
// trailing '-') with an optional :port. Dotted-quad-looking values are
// routed to the IPv4 grammar instead, so "256.1.1.1:80" cannot sneak
// through as a "hostname".
bool is_valid_host(std::string_view value);

// Length-prefixed request container: 4-byte little-endian length + raw
// bytes, repeated.
std::vector<std::string> read_request_container(std::string_view bytes);
std::string write_request_container(const std::vector<std::string>& requests);

}  // namespace radar
