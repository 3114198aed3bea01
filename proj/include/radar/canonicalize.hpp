#pragma once

#include <string>
#include <vector>

#include "radar/http.hpp"
#include "radar/schema.hpp"

namespace radar {

// Raised only through CanonicalRequest::encoding_warning; canonicalize
// itself never fails on body codings (the request is still processed
// with the raw bytes mapped through the schema).
inline constexpr std::string_view kUnsupportedEncoding = "UnsupportedEncoding";

struct CanonicalRequest {
    Endpoint endpoint;
    std::vector<std::string> tokens;
    std::vector<std::string> dropped_headers;  // names routed to abstraction
    std::string encoding_warning;              // empty when the body coding was fine

    std::string joined_tokens() const;  // space-separated, the corpus line format
};

struct HeaderPartition {
    // Headers whose values satisfy their rule; excluded from the token
    // stream entirely.
    std::vector<std::pair<std::string, std::string>> kept;
    // Header names routed to token abstraction (failed rule or no rule).
    std::vector<std::string> dropped;
};

// Checks each header against the fixed rule table. Never fails the
// request; it only partitions. Rules: host (IPv4:port or DNS hostname),
// content-length (decimal), connection / accept-encoding / accept
// (member-of-enum lists), user-agent (always to abstraction).
HeaderPartition validate_headers(const RawHttpRequest& req);

// Full pre-processing pipeline: decompress body (gzip/deflate), decode
// URL escapes once, lowercase, validate headers, extract the endpoint,
// and abstract the query string, version, non-kept headers, and body
// into one token sequence.
CanonicalRequest canonicalize(const RawHttpRequest& req,
                              const AbstractionSchema& schema);

// parse + canonicalize in one step.
CanonicalRequest canonicalize_text(std::string_view raw,
                                   const AbstractionSchema& schema);

}  // namespace radar
