#include "radar/http.hpp"

#include <algorithm>
#include <cctype>

#include "radar/io.hpp"

namespace radar {

namespace {

bool is_ascii_letter(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

// Returns the next line (without terminator) and advances pos past it.
// Accepts CRLF and bare LF.
std::string_view next_line(std::string_view text, std::size_t& pos) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line;
    if (eol == std::string_view::npos) {
        line = text.substr(pos);
        pos = text.size();
    } else {
        line = text.substr(pos, eol - pos);
        pos = eol + 1;
    }
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    return line;
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

// Parses a decimal integer with no sign and no leading garbage; returns
// -1 on any violation. Caps at 10^9 to dodge overflow.
long parse_decimal(std::string_view s) {
    if (s.empty() || s.size() > 9) {
        return -1;
    }
    long v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') {
            return -1;
        }
        v = v * 10 + (c - '0');
    }
    return v;
}

// Splits "host:port" at the last colon. No brackets (IPv6 is out of scope).
std::pair<std::string_view, std::string_view> split_host_port(
    std::string_view value) {
    std::size_t colon = value.rfind(':');
    if (colon == std::string_view::npos) {
        return {value, {}};
    }
    return {value.substr(0, colon), value.substr(colon + 1)};
}

bool looks_like_ipv4(std::string_view host) {
    if (host.empty()) {
        return false;
    }
    return std::all_of(host.begin(), host.end(),
                       [](char c) { return (c >= '0' && c <= '9') || c == '.'; });
}

bool is_valid_dns_name(std::string_view host) {
    if (host.empty() || host.size() > 253) {
        return false;
    }
    std::size_t label_len = 0;
    char prev = '.';
    for (std::size_t i = 0; i < host.size(); ++i) {
        char c = host[i];
        if (c == '.') {
            if (label_len == 0 || prev == '-') {
                return false;
            }
            label_len = 0;
        } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
            ++label_len;
        } else if (c == '-') {
            if (label_len == 0) {
                return false;  // label cannot start with '-'
            }
            ++label_len;
        } else {
            return false;
        }
        if (label_len > 63) {
            return false;
        }
        prev = c;
    }
    return label_len > 0 && prev != '-';
}

}  // namespace

const std::string* RawHttpRequest::find_header(
    std::string_view lowercase_name) const {
    for (const auto& [name, value] : headers) {
        if (name == lowercase_name) {
            return &value;
        }
    }
    return nullptr;
}

std::string Endpoint::key() const { return method + " " + host + " " + path; }

std::size_t EndpointHash::operator()(const Endpoint& e) const {
    Fnv64 h;
    h.update(e.method);
    h.update("\x1f");
    h.update(e.host);
    h.update("\x1f");
    h.update(e.path);
    return static_cast<std::size_t>(h.digest());
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

RawHttpRequest parse_raw_request(std::string_view text) {
    std::size_t pos = 0;
    std::string_view request_line = next_line(text, pos);
    if (trim(request_line).empty()) {
        throw MalformedRequest("missing request line");
    }

    RawHttpRequest req;
    std::size_t sp1 = request_line.find(' ');
    if (sp1 == std::string_view::npos || sp1 == 0) {
        throw MalformedRequest("request line has no target");
    }
    std::string_view method = request_line.substr(0, sp1);
    if (!std::all_of(method.begin(), method.end(), is_ascii_letter)) {
        throw MalformedRequest("method contains non-letter characters");
    }
    req.method = std::string(method);

    std::string_view rest = trim(request_line.substr(sp1 + 1));
    std::size_t sp2 = rest.rfind(' ');
    if (sp2 == std::string_view::npos) {
        req.target = std::string(rest);
    } else {
        std::string_view version = rest.substr(sp2 + 1);
        std::string lower_version = to_lower(version);
        if (lower_version.rfind("http/", 0) != 0) {
            throw MalformedRequest("request line version is not HTTP/x");
        }
        req.target = std::string(trim(rest.substr(0, sp2)));
        req.version = std::string(version);
    }
    if (req.target.empty()) {
        throw MalformedRequest("empty request target");
    }

    bool terminated = false;
    while (pos < text.size()) {
        std::string_view line = next_line(text, pos);
        if (line.empty()) {
            terminated = true;
            break;
        }
        std::size_t colon = line.find(':');
        if (colon == std::string_view::npos || colon == 0) {
            throw MalformedRequest("header line without ':' separator");
        }
        std::string name = to_lower(trim(line.substr(0, colon)));
        std::string value(trim(line.substr(colon + 1)));
        auto it = std::find_if(req.headers.begin(), req.headers.end(),
                               [&](const auto& h) { return h.first == name; });
        if (it == req.headers.end()) {
            req.headers.emplace_back(std::move(name), std::move(value));
        } else {
            it->second += ", " + value;
        }
    }
    if (!terminated) {
        throw MalformedRequest("header block not terminated by a blank line");
    }
    req.body = std::string(text.substr(pos));
    return req;
}

Endpoint extract_endpoint(const RawHttpRequest& req) {
    std::string target = req.target;
    std::string authority;

    // absolute-form: scheme://authority/path
    std::size_t scheme_end = target.find("://");
    if (scheme_end != std::string::npos &&
        std::all_of(target.begin(),
                    target.begin() + static_cast<std::ptrdiff_t>(scheme_end),
                    is_ascii_letter)) {
        std::string after = target.substr(scheme_end + 3);
        std::size_t slash = after.find('/');
        if (slash == std::string::npos) {
            authority = after;
            target = "/";
        } else {
            authority = after.substr(0, slash);
            target = after.substr(slash);
        }
    }
    if (authority.empty()) {
        if (const std::string* host = req.find_header("host")) {
            authority = *host;
        }
    }
    if (authority.empty()) {
        throw MissingHost("no Host header and no absolute-form authority");
    }

    // Strip userinfo and port; the namespace key is the bare host.
    std::size_t at = authority.rfind('@');
    if (at != std::string::npos) {
        authority = authority.substr(at + 1);
    }
    auto [host_part, port] = split_host_port(authority);
    (void)port;
    if (host_part.empty()) {
        throw MissingHost("empty host in authority");
    }

    std::size_t cut = target.find_first_of("?#");
    std::string path = target.substr(0, cut);
    if (path.empty()) {
        path = "/";
    }

    Endpoint ep;
    ep.method = req.method;
    ep.host = to_lower(host_part);
    ep.path = to_lower(percent_decode(path));
    return ep;
}

std::string percent_decode(std::string_view s, bool plus_to_space) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '%' && i + 2 < s.size()) {
            int hi = hex_value(s[i + 1]);
            int lo = hex_value(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                i += 2;
                continue;
            }
        }
        if (plus_to_space && c == '+') {
            out.push_back(' ');
            continue;
        }
        out.push_back(c);
    }
    return out;
}

bool is_valid_ipv4_port(std::string_view value) {
    auto [host, port] = split_host_port(value);
    if (port.empty()) {
        return false;  // the grammar requires a port
    }
    long port_num = parse_decimal(port);
    if (port_num < 1 || port_num > 65535) {
        return false;
    }
    int octets = 0;
    std::size_t start = 0;
    while (start <= host.size()) {
        std::size_t dot = host.find('.', start);
        std::string_view octet = host.substr(
            start, dot == std::string_view::npos ? std::string_view::npos
                                                 : dot - start);
        long v = parse_decimal(octet);
        if (v < 0 || v > 255) {
            return false;
        }
        // "00" style zero-padding is not part of the grammar
        if (octet.size() > 1 && octet.front() == '0') {
            return false;
        }
        ++octets;
        if (dot == std::string_view::npos) {
            break;
        }
        start = dot + 1;
    }
    return octets == 4;
}

bool is_valid_host(std::string_view value) {
    auto [host, port] = split_host_port(value);
    if (looks_like_ipv4(host)) {
        return is_valid_ipv4_port(value);
    }
    if (!port.empty()) {
        long port_num = parse_decimal(port);
        if (port_num < 1 || port_num > 65535) {
            return false;
        }
    } else if (value.find(':') != std::string_view::npos) {
        return false;  // trailing ':' with empty port
    }
    return is_valid_dns_name(host);
}

std::vector<std::string> read_request_container(std::string_view bytes) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (pos + 4 > bytes.size()) {
            throw CorruptFile("container truncated in length prefix");
        }
        std::uint32_t len = 0;
        for (int i = 3; i >= 0; --i) {
            len = (len << 8) |
                  static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(i)]);
        }
        pos += 4;
        if (pos + len > bytes.size()) {
            throw CorruptFile("container truncated in payload");
        }
        out.emplace_back(bytes.substr(pos, len));
        pos += len;
    }
    return out;
}

std::string write_request_container(const std::vector<std::string>& requests) {
    std::string out;
    for (const std::string& r : requests) {
        std::uint32_t len = static_cast<std::uint32_t>(r.size());
        for (int i = 0; i < 4; ++i) {
            out.push_back(static_cast<char>((len >> (8 * i)) & 0xff));
        }
        out += r;
    }
    return out;
}

}  // namespace radar
