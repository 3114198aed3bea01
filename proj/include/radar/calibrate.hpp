#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "radar/datasets.hpp"
#include "radar/detector.hpp"

namespace radar {

struct EmptyConfusion final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Positive class = anomaly.
struct Confusion {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
};

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double accuracy = 0.0;
    double f1 = 0.0;
};

// precision = tp/(tp+fp), recall = tp/(tp+fn), accuracy = (tp+tn)/total,
// f1 = 2PR/(P+R); every 0/0 is 0 by convention.
Metrics compute_metrics(const Confusion& c);

struct ScoredSample {
    double score;
    bool anomaly;  // ground-truth label
};

struct ThresholdSweep {
    double best_threshold = 0.5;
    double best_f1 = 0.0;
    bool single_class = false;  // all labels identical; threshold fell back to 0.5
    std::vector<std::pair<double, Metrics>> grid;  // {0.0, 0.1, ..., 1.0}
};

// Evaluates thresholds 0.0..1.0 in 0.1 increments; a sample is predicted
// anomalous iff score < t. Picks the F1 argmax, ties to the lower
// threshold.
ThresholdSweep sweep_threshold(std::span<const ScoredSample> samples);

struct LabeledVector {
    std::vector<float> vector;
    bool anomaly;
};

struct KSweep {
    int best_k = 0;
    double best_threshold = 0.5;
    double best_f1 = 0.0;
    bool single_class = false;
    struct Entry {
        int k;
        double threshold;
        Metrics metrics;
    };
    std::vector<Entry> grid;
};

// The published sweep runs K from 1; K=1 is excluded here because the
// scaling formula maps a single neighbor to score 0 unconditionally.
std::vector<int> default_k_grid();     // {2,3,5,10,20,50,100,200,500,1000}
std::vector<int> exhaustive_k_grid();  // {2..1000}

// For each k: re-score every validation vector against the endpoint
// namespace and run the threshold sweep. Joint argmax over (k, t) by F1;
// ties resolve to the lower threshold, then the lower k.
KSweep sweep_k(const AnnIndex& index, const Endpoint& endpoint,
               std::span<const LabeledVector> validation,
               std::span<const int> k_grid);

enum class CalibrationStatus { calibrated, defaulted, single_class };

const char* calibration_status_name(CalibrationStatus s);

struct EndpointCalibration {
    EndpointProfile profile;
    CalibrationStatus status = CalibrationStatus::defaulted;
    Metrics metrics;  // at the chosen (k, threshold); zeros when defaulted
    std::size_t validation_count = 0;
    KSweep sweep;  // empty grid when defaulted
};

struct CalibrationReport {
    std::vector<EndpointCalibration> entries;
    // Validation endpoints with no namespace in the index (no normal
    // representation); excluded from calibration.
    std::vector<std::pair<Endpoint, std::size_t>> missing_namespaces;
    std::size_t unparseable = 0;   // validation requests that failed to parse
    std::size_t unscoreable = 0;   // empty-token requests left out of sweeps

    std::vector<EndpointProfile> profiles() const;
};

struct CalibrateOptions {
    std::vector<int> k_grid = default_k_grid();
    int default_k = 10;
    double default_threshold = 0.5;
};

// Per-endpoint sweep over a labeled validation set. Endpoints present in
// the index but absent from validation keep flagged default profiles.
CalibrationReport calibrate(const EmbeddingModel& model, const AnnIndex& index,
                            std::span<const LabeledRequest> validation,
                            const AbstractionSchema& schema,
                            const CalibrateOptions& options = {});

// Line-oriented tab-separated report plus a JSON mirror of the same
// content (grids included).
void write_calibration_report(const CalibrationReport& report,
                              const std::filesystem::path& tsv_path);
void write_calibration_report_json(const CalibrationReport& report,
                                   const std::filesystem::path& json_path);

}  // namespace radar
