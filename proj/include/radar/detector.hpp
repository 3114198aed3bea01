#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radar/canonicalize.hpp"
#include "radar/embedding.hpp"
#include "radar/index.hpp"

namespace radar {

// Per-endpoint calibration record. k >= 2 because with a single
// retrieved neighbor the max-distance scaling maps every score to 0.
struct EndpointProfile {
    Endpoint endpoint;
    double threshold = 0.5;
    int k = 10;
    std::uint64_t train_count = 1;

    void validate() const;  // throws std::invalid_argument
};

enum class VerdictReason { scored, unknown_endpoint, empty_tokens };

const char* verdict_reason_name(VerdictReason r);
VerdictReason verdict_reason_from_name(std::string_view name);

struct Verdict {
    Endpoint endpoint;
    double score = 0.0;
    double threshold = 0.0;
    bool anomaly = true;
    VerdictReason reason = VerdictReason::scored;
};

// X' = 1 - X / max(X). The farthest retrieved neighbor maps to exactly
// 0, the nearest to the top score. All-zero distance lists (exact
// duplicates only) map to all ones: zero distance is exact membership.
std::vector<double> max_distance_scale(std::span<const double> distances);

// Nearest-neighbor score after scaling: query profile.k neighbors and
// return the maximum normalized value. In [0, 1].
double anomaly_score(const AnnIndex& index, const EndpointProfile& profile,
                     std::span<const float> vector);

// Immutable serving state; classify is const and callable concurrently.
class Detector {
  public:
    Detector(const EmbeddingModel& model, const AnnIndex& index,
             std::vector<EndpointProfile> profiles,
             const AbstractionSchema& schema);

    // anomaly iff score < threshold (strict: an exact-match score of 1.0
    // stays normal at threshold 1.0). Unknown endpoints and empty token
    // sequences are anomalies by policy.
    Verdict classify(std::string_view raw) const;
    Verdict classify_canonical(const CanonicalRequest& canonical) const;

    const EndpointProfile* profile_for(const Endpoint& endpoint) const;

  private:
    const EmbeddingModel& model_;
    const AnnIndex& index_;
    const AbstractionSchema& schema_;
    std::map<Endpoint, EndpointProfile> profiles_;
};

// Profiles file: version header, then one tab-separated record per
// endpoint: method, host, path, threshold, k, train_count.
void save_profiles(const std::filesystem::path& path,
                   const std::vector<EndpointProfile>& profiles);
std::vector<EndpointProfile> load_profiles(const std::filesystem::path& path);

// Verdict stream line: method, host, path, score (6 decimals),
// threshold, label, reason — tab-separated.
std::string format_verdict(const Verdict& v);
Verdict parse_verdict(std::string_view line);

}  // namespace radar
