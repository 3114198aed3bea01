#include "radar/detector.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "radar/io.hpp"

namespace radar {

namespace {

constexpr std::string_view kProfilesHeader = "profiles-version: 1";

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

}  // namespace

void EndpointProfile::validate() const {
    if (threshold < 0.0 || threshold > 1.0) {
        throw std::invalid_argument("profile threshold must be in [0, 1]");
    }
    if (k < 2) {
        throw std::invalid_argument("profile k must be >= 2");
    }
    if (train_count < 1) {
        throw std::invalid_argument("profile train_count must be >= 1");
    }
}

const char* verdict_reason_name(VerdictReason r) {
    switch (r) {
        case VerdictReason::scored:
            return "scored";
        case VerdictReason::unknown_endpoint:
            return "unknown-endpoint";
        case VerdictReason::empty_tokens:
            return "empty-tokens";
    }
    return "?";
}

VerdictReason verdict_reason_from_name(std::string_view name) {
    if (name == "scored") {
        return VerdictReason::scored;
    }
    if (name == "unknown-endpoint") {
        return VerdictReason::unknown_endpoint;
    }
    if (name == "empty-tokens") {
        return VerdictReason::empty_tokens;
    }
    throw std::invalid_argument("unknown verdict reason '" + std::string(name) +
                                "'");
}

std::vector<double> max_distance_scale(std::span<const double> distances) {
    if (distances.empty()) {
        throw std::invalid_argument("max_distance_scale of an empty list");
    }
    double maxd = 0.0;
    for (double d : distances) {
        if (d < 0.0 || !std::isfinite(d)) {
            throw std::invalid_argument(
                "max_distance_scale requires finite non-negative distances");
        }
        maxd = std::max(maxd, d);
    }
    std::vector<double> out(distances.size());
    if (maxd == 0.0) {
        std::fill(out.begin(), out.end(), 1.0);
        return out;
    }
    for (std::size_t i = 0; i < distances.size(); ++i) {
        out[i] = 1.0 - distances[i] / maxd;
    }
    return out;
}

double anomaly_score(const AnnIndex& index, const EndpointProfile& profile,
                     std::span<const float> vector) {
    std::vector<Neighbor> neighbors =
        index.query(profile.endpoint, vector, profile.k);
    std::vector<double> distances;
    distances.reserve(neighbors.size());
    for (const Neighbor& n : neighbors) {
        // Distances can round a hair below zero in float; clamp before
        // scaling, whose contract requires non-negative inputs.
        distances.push_back(std::max(0.0, static_cast<double>(n.distance)));
    }
    std::vector<double> scaled = max_distance_scale(distances);
    return *std::max_element(scaled.begin(), scaled.end());
}

Detector::Detector(const EmbeddingModel& model, const AnnIndex& index,
                   std::vector<EndpointProfile> profiles,
                   const AbstractionSchema& schema)
    : model_(model), index_(index), schema_(schema) {
    for (EndpointProfile& p : profiles) {
        p.validate();
        Endpoint key = p.endpoint;
        profiles_.emplace(std::move(key), std::move(p));
    }
}

const EndpointProfile* Detector::profile_for(const Endpoint& endpoint) const {
    auto it = profiles_.find(endpoint);
    return it == profiles_.end() ? nullptr : &it->second;
}

Verdict Detector::classify(std::string_view raw) const {
    return classify_canonical(canonicalize_text(raw, schema_));
}

Verdict Detector::classify_canonical(const CanonicalRequest& canonical) const {
    Verdict v;
    v.endpoint = canonical.endpoint;

    const EndpointProfile* profile = profile_for(canonical.endpoint);
    if (profile == nullptr || !index_.has_endpoint(canonical.endpoint)) {
        v.reason = VerdictReason::unknown_endpoint;
        v.anomaly = true;
        return v;
    }
    v.threshold = profile->threshold;

    if (canonical.tokens.empty()) {
        v.reason = VerdictReason::empty_tokens;
        v.anomaly = true;
        return v;
    }
    std::vector<float> vec = model_.sentence_vector(canonical.tokens);
    double norm = 0.0;
    for (float x : vec) {
        norm += static_cast<double>(x) * x;
    }
    if (norm == 0.0) {
        // No token produced signal; same policy as an empty sequence.
        v.reason = VerdictReason::empty_tokens;
        v.anomaly = true;
        return v;
    }

    v.score = anomaly_score(index_, *profile, vec);
    v.reason = VerdictReason::scored;
    v.anomaly = v.score < v.threshold;
    return v;
}

void save_profiles(const std::filesystem::path& path,
                   const std::vector<EndpointProfile>& profiles) {
    std::string out(kProfilesHeader);
    out.push_back('\n');
    for (const EndpointProfile& p : profiles) {
        p.validate();
        out += fmt::format("{}\t{}\t{}\t{:.6f}\t{}\t{}\n", p.endpoint.method,
                           p.endpoint.host, p.endpoint.path, p.threshold, p.k,
                           p.train_count);
    }
    write_file(path, out);
}

std::vector<EndpointProfile> load_profiles(const std::filesystem::path& path) {
    std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw CorruptFile(path.string() + ": empty profiles file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kProfilesHeader) {
        throw IncompatibleVersion(path.string() +
                                  ": unsupported profiles header '" + line + "'");
    }
    std::vector<EndpointProfile> profiles;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto fields = split_tabs(line);
        if (fields.size() != 6) {
            throw CorruptFile(path.string() + ":" + std::to_string(line_no) +
                              ": expected 6 tab-separated fields");
        }
        EndpointProfile p;
        p.endpoint.method = std::string(fields[0]);
        p.endpoint.host = std::string(fields[1]);
        p.endpoint.path = std::string(fields[2]);
        p.threshold = std::stod(std::string(fields[3]));
        p.k = std::stoi(std::string(fields[4]));
        p.train_count = std::stoull(std::string(fields[5]));
        p.validate();
        profiles.push_back(std::move(p));
    }
    return profiles;
}

std::string format_verdict(const Verdict& v) {
    return fmt::format("{}\t{}\t{}\t{:.6f}\t{:.6f}\t{}\t{}", v.endpoint.method,
                       v.endpoint.host, v.endpoint.path, v.score, v.threshold,
                       v.anomaly ? "anomaly" : "normal",
                       verdict_reason_name(v.reason));
}

Verdict parse_verdict(std::string_view line) {
    auto fields = split_tabs(line);
    if (fields.size() != 7) {
        throw std::invalid_argument("verdict line must have 7 fields");
    }
    Verdict v;
    v.endpoint.method = std::string(fields[0]);
    v.endpoint.host = std::string(fields[1]);
    v.endpoint.path = std::string(fields[2]);
    v.score = std::stod(std::string(fields[3]));
    v.threshold = std::stod(std::string(fields[4]));
    if (fields[5] == "anomaly") {
        v.anomaly = true;
    } else if (fields[5] == "normal") {
        v.anomaly = false;
    } else {
        throw std::invalid_argument("unknown verdict label");
    }
    v.reason = verdict_reason_from_name(fields[6]);
    return v;
}

}  // namespace radar
