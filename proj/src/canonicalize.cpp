#include "radar/canonicalize.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <optional>
#include <unordered_set>

namespace radar {

namespace {

std::vector<std::string_view> split_list(std::string_view value, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t end = value.find(sep, start);
        std::string_view part = value.substr(
            start,
            end == std::string_view::npos ? std::string_view::npos : end - start);
        while (!part.empty() && (part.front() == ' ' || part.front() == '\t')) {
            part.remove_prefix(1);
        }
        while (!part.empty() && (part.back() == ' ' || part.back() == '\t')) {
            part.remove_suffix(1);
        }
        parts.push_back(part);
        if (end == std::string_view::npos) {
            break;
        }
        start = end + 1;
    }
    return parts;
}

bool is_decimal(std::string_view s) {
    return !s.empty() &&
           std::all_of(s.begin(), s.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
}

// "q=0.9" / "level=1" style parameters after a ';'.
bool is_valid_param(std::string_view p) {
    std::size_t eq = p.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 >= p.size()) {
        return false;
    }
    auto ok = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' ||
               c == '-';
    };
    return std::all_of(p.begin(), p.end(),
                       [&](char c) { return c == '=' || ok(c); });
}

bool member_of(std::string_view value,
               const std::unordered_set<std::string_view>& allowed) {
    for (std::string_view member : split_list(value, ',')) {
        auto params = split_list(member, ';');
        if (params.empty() || !allowed.contains(params[0])) {
            return false;
        }
        for (std::size_t i = 1; i < params.size(); ++i) {
            if (!is_valid_param(params[i])) {
                return false;
            }
        }
    }
    return true;
}

bool valid_connection(std::string_view value) {
    static const std::unordered_set<std::string_view> allowed = {
        "close", "keep-alive", "upgrade"};
    return member_of(value, allowed);
}

bool valid_accept_encoding(std::string_view value) {
    static const std::unordered_set<std::string_view> allowed = {
        "gzip", "x-gzip", "deflate",  "compress", "x-compress",
        "br",   "zstd",   "identity", "*"};
    return member_of(value, allowed);
}

bool valid_accept(std::string_view value) {
    static const std::unordered_set<std::string_view> allowed = {
        "*/*",
        "text/*",
        "text/html",
        "text/plain",
        "text/xml",
        "text/css",
        "text/csv",
        "text/javascript",
        "application/*",
        "application/xml",
        "application/xhtml+xml",
        "application/json",
        "application/javascript",
        "application/x-www-form-urlencoded",
        "application/octet-stream",
        "application/pdf",
        "image/*",
        "image/png",
        "image/gif",
        "image/jpeg",
        "image/webp",
        "image/avif",
        "image/x-icon",
        "image/svg+xml",
        "audio/*",
        "video/*"};
    return member_of(value, allowed);
}

// Rule table. A rule returning true keeps the header out of the token
// stream; header names without a rule always go to abstraction.
bool header_rule(std::string_view name, std::string_view lowercase_value,
                 bool& has_rule) {
    has_rule = true;
    if (name == "host") {
        return is_valid_host(lowercase_value);
    }
    if (name == "content-length") {
        return is_decimal(lowercase_value);
    }
    if (name == "connection") {
        return valid_connection(lowercase_value);
    }
    if (name == "accept-encoding") {
        return valid_accept_encoding(lowercase_value);
    }
    if (name == "accept") {
        return valid_accept(lowercase_value);
    }
    if (name == "user-agent") {
        return false;  // attacker-controlled text stays in the token stream
    }
    has_rule = false;
    return false;
}

std::optional<std::string> zlib_inflate(std::string_view data,
                                        int window_bits) {
    z_stream zs{};
    if (inflateInit2(&zs, window_bits) != Z_OK) {
        return std::nullopt;
    }
    std::string out;
    std::array<char, 16384> chunk;
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = reinterpret_cast<Bytef*>(chunk.data());
        zs.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            return std::nullopt;
        }
        out.append(chunk.data(), chunk.size() - zs.avail_out);
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            return std::nullopt;  // truncated stream
        }
        if (out.size() > (64u << 20)) {
            inflateEnd(&zs);
            return std::nullopt;  // refuse to inflate past 64 MiB
        }
    }
    inflateEnd(&zs);
    return out;
}

void append_tokens(std::vector<std::string>& dst,
                   std::vector<std::string>&& src) {
    dst.insert(dst.end(), std::make_move_iterator(src.begin()),
               std::make_move_iterator(src.end()));
}

}  // namespace

std::string CanonicalRequest::joined_tokens() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) {
            out.push_back(' ');
        }
        out += tokens[i];
    }
    return out;
}

HeaderPartition validate_headers(const RawHttpRequest& req) {
    HeaderPartition part;
    for (const auto& [name, value] : req.headers) {
        bool has_rule = false;
        bool keep = header_rule(name, to_lower(value), has_rule);
        if (has_rule && keep) {
            part.kept.emplace_back(name, value);
        } else {
            part.dropped.push_back(name);
        }
    }
    return part;
}

CanonicalRequest canonicalize(const RawHttpRequest& req,
                              const AbstractionSchema& schema) {
    CanonicalRequest out;
    out.endpoint = extract_endpoint(req);

    HeaderPartition part = validate_headers(req);
    out.dropped_headers = part.dropped;

    // Body: decompress before escape decoding so the coded byte stream is
    // not damaged, then one decode pass, then lowercase.
    std::string body = req.body;
    if (const std::string* coding = req.find_header("content-encoding")) {
        std::string c = to_lower(*coding);
        std::optional<std::string> inflated;
        if (c == "gzip" || c == "x-gzip") {
            inflated = zlib_inflate(body, 15 + 16);
            if (!inflated) {
                out.encoding_warning = "gzip body failed to decompress";
            }
        } else if (c == "deflate") {
            inflated = zlib_inflate(body, 15);
            if (!inflated) {
                inflated = zlib_inflate(body, -15);  // raw-deflate senders
            }
            if (!inflated) {
                out.encoding_warning = "deflate body failed to decompress";
            }
        } else if (c != "identity" && !c.empty()) {
            out.encoding_warning =
                std::string(kUnsupportedEncoding) + ": " + c;
        }
        if (inflated) {
            body = std::move(*inflated);
        }
    }
    body = to_lower(percent_decode(body, /*plus_to_space=*/true));

    // Request line remainder: the query string (the path lives in the
    // endpoint) and the protocol version.
    std::string query;
    std::size_t q = req.target.find('?');
    if (q != std::string::npos) {
        query = to_lower(
            percent_decode(req.target.substr(q + 1), /*plus_to_space=*/true));
    }

    if (!query.empty()) {
        append_tokens(out.tokens, abstract_text(query, schema));
    }
    if (!req.version.empty()) {
        append_tokens(out.tokens, abstract_text(to_lower(req.version), schema));
    }
    for (const std::string& name : part.dropped) {
        const std::string* value = req.find_header(name);
        std::string line = name + ":" + (value ? to_lower(*value) : "");
        append_tokens(out.tokens, abstract_text(line, schema));
    }
    if (!body.empty()) {
        append_tokens(out.tokens, abstract_text(body, schema));
    }
    return out;
}

CanonicalRequest canonicalize_text(std::string_view raw,
                                   const AbstractionSchema& schema) {
    return canonicalize(parse_raw_request(raw), schema);
}

}  // namespace radar
