#include "radar/calibrate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "radar/io.hpp"

namespace radar {

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

Confusion confusion_at(std::span<const ScoredSample> samples, double t) {
    Confusion c;
    for (const ScoredSample& s : samples) {
        const bool predicted = s.score < t;
        if (predicted && s.anomaly) {
            ++c.tp;
        } else if (predicted && !s.anomaly) {
            ++c.fp;
        } else if (!predicted && s.anomaly) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

}  // namespace

Metrics compute_metrics(const Confusion& c) {
    if (c.total() == 0) {
        throw EmptyConfusion("confusion matrix has no observations");
    }
    Metrics m;
    m.precision = safe_div(static_cast<double>(c.tp),
                           static_cast<double>(c.tp + c.fp));
    m.recall = safe_div(static_cast<double>(c.tp),
                        static_cast<double>(c.tp + c.fn));
    m.accuracy = static_cast<double>(c.tp + c.tn) /
                 static_cast<double>(c.total());
    m.f1 = safe_div(2.0 * m.precision * m.recall, m.precision + m.recall);
    return m;
}

ThresholdSweep sweep_threshold(std::span<const ScoredSample> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("sweep_threshold over an empty score set");
    }
    const bool first = samples.front().anomaly;
    const bool single_class =
        std::all_of(samples.begin(), samples.end(),
                    [&](const ScoredSample& s) { return s.anomaly == first; });

    ThresholdSweep sweep;
    sweep.single_class = single_class;
    bool have_best = false;
    for (int i = 0; i <= 10; ++i) {
        const double t = static_cast<double>(i) / 10.0;
        Metrics m = compute_metrics(confusion_at(samples, t));
        sweep.grid.emplace_back(t, m);
        if (!have_best || m.f1 > sweep.best_f1) {
            have_best = true;
            sweep.best_f1 = m.f1;
            sweep.best_threshold = t;
        }
    }
    if (single_class) {
        sweep.best_threshold = 0.5;  // no meaningful F1 signal; flagged
    }
    return sweep;
}

std::vector<int> default_k_grid() {
    return {2, 3, 5, 10, 20, 50, 100, 200, 500, 1000};
}

std::vector<int> exhaustive_k_grid() {
    std::vector<int> grid;
    grid.reserve(999);
    for (int k = 2; k <= 1000; ++k) {
        grid.push_back(k);
    }
    return grid;
}

KSweep sweep_k(const AnnIndex& index, const Endpoint& endpoint,
               std::span<const LabeledVector> validation,
               std::span<const int> k_grid) {
    if (validation.empty()) {
        throw std::invalid_argument("sweep_k over an empty validation set");
    }
    if (k_grid.empty()) {
        throw std::invalid_argument("sweep_k with an empty k grid");
    }
    std::vector<int> ks(k_grid.begin(), k_grid.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    KSweep sweep;
    bool have_best = false;
    std::vector<ScoredSample> scores(validation.size());
    for (int k : ks) {
        if (k < 2) {
            throw std::invalid_argument("k grid values must be >= 2");
        }
        EndpointProfile probe{endpoint, 0.0, k,
                              std::max<std::uint64_t>(
                                  1, index.namespace_size(endpoint))};
        for (std::size_t i = 0; i < validation.size(); ++i) {
            scores[i].score = anomaly_score(index, probe, validation[i].vector);
            scores[i].anomaly = validation[i].anomaly;
        }
        ThresholdSweep ts = sweep_threshold(scores);
        sweep.single_class = ts.single_class;
        const auto& chosen =
            *std::find_if(ts.grid.begin(), ts.grid.end(), [&](const auto& g) {
                return g.first == ts.best_threshold;
            });
        sweep.grid.push_back({k, ts.best_threshold, chosen.second});
        const bool better =
            !have_best || ts.best_f1 > sweep.best_f1 ||
            (ts.best_f1 == sweep.best_f1 &&
             ts.best_threshold < sweep.best_threshold);
        if (better) {
            have_best = true;
            sweep.best_f1 = ts.best_f1;
            sweep.best_threshold = ts.best_threshold;
            sweep.best_k = k;
        }
    }
    return sweep;
}

const char* calibration_status_name(CalibrationStatus s) {
    switch (s) {
        case CalibrationStatus::calibrated:
            return "calibrated";
        case CalibrationStatus::defaulted:
            return "defaulted";
        case CalibrationStatus::single_class:
            return "single-class";
    }
    return "?";
}

std::vector<EndpointProfile> CalibrationReport::profiles() const {
    std::vector<EndpointProfile> out;
    out.reserve(entries.size());
    for (const EndpointCalibration& e : entries) {
        out.push_back(e.profile);
    }
    return out;
}

CalibrationReport calibrate(const EmbeddingModel& model, const AnnIndex& index,
                            std::span<const LabeledRequest> validation,
                            const AbstractionSchema& schema,
                            const CalibrateOptions& options) {
    CalibrationReport report;

    std::map<Endpoint, std::vector<LabeledVector>> by_endpoint;
    std::map<Endpoint, std::size_t> seen;
    for (const LabeledRequest& r : validation) {
        CanonicalRequest canonical;
        try {
            canonical = canonicalize_text(r.raw, schema);
        } catch (const MalformedRequest&) {
            ++report.unparseable;
            continue;
        } catch (const MissingHost&) {
            ++report.unparseable;
            continue;
        }
        ++seen[canonical.endpoint];
        if (canonical.tokens.empty()) {
            ++report.unscoreable;
            continue;
        }
        std::vector<float> vec = model.sentence_vector(canonical.tokens);
        double norm = 0.0;
        for (float x : vec) {
            norm += static_cast<double>(x) * x;
        }
        if (norm == 0.0) {
            ++report.unscoreable;
            continue;
        }
        by_endpoint[canonical.endpoint].push_back(
            {std::move(vec), r.label == Label::anomaly});
    }

    for (const Endpoint& ep : index.endpoints()) {
        EndpointCalibration entry;
        entry.profile.endpoint = ep;
        entry.profile.train_count = index.namespace_size(ep);
        auto it = by_endpoint.find(ep);
        if (it == by_endpoint.end() || it->second.empty()) {
            entry.profile.k = options.default_k;
            entry.profile.threshold = options.default_threshold;
            entry.status = CalibrationStatus::defaulted;
        } else {
            entry.validation_count = it->second.size();
            entry.sweep = sweep_k(index, ep, it->second, options.k_grid);
            entry.profile.k = entry.sweep.best_k;
            entry.profile.threshold = entry.sweep.best_threshold;
            entry.status = entry.sweep.single_class
                               ? CalibrationStatus::single_class
                               : CalibrationStatus::calibrated;
            for (const KSweep::Entry& g : entry.sweep.grid) {
                if (g.k == entry.sweep.best_k) {
                    entry.metrics = g.metrics;
                    break;
                }
            }
        }
        entry.profile.validate();
        report.entries.push_back(std::move(entry));
    }

    for (const auto& [ep, count] : seen) {
        if (!index.has_endpoint(ep)) {
            report.missing_namespaces.emplace_back(ep, count);
        }
    }
    return report;
}

void write_calibration_report(const CalibrationReport& report,
                              const std::filesystem::path& tsv_path) {
    std::string out = "calibration-version: 1\n";
    out +=
        "# method\thost\tpath\tstatus\tthreshold\tk\ttrain_count\tvalidation_"
        "count\tprecision\trecall\taccuracy\tf1\n";
    for (const EndpointCalibration& e : report.entries) {
        out += fmt::format(
            "{}\t{}\t{}\t{}\t{:.6f}\t{}\t{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\n",
            e.profile.endpoint.method, e.profile.endpoint.host,
            e.profile.endpoint.path, calibration_status_name(e.status),
            e.profile.threshold, e.profile.k, e.profile.train_count,
            e.validation_count, e.metrics.precision, e.metrics.recall,
            e.metrics.accuracy, e.metrics.f1);
    }
    for (const auto& [ep, count] : report.missing_namespaces) {
        out += fmt::format("# no-namespace\t{}\t{}\t{}\t{}\n", ep.method,
                           ep.host, ep.path, count);
    }
    write_file(tsv_path, out);
}

void write_calibration_report_json(const CalibrationReport& report,
                                   const std::filesystem::path& json_path) {
    nlohmann::json doc;
    doc["calibration_version"] = 1;
    doc["unparseable"] = report.unparseable;
    doc["unscoreable"] = report.unscoreable;
    doc["entries"] = nlohmann::json::array();
    for (const EndpointCalibration& e : report.entries) {
        nlohmann::json j;
        j["endpoint"] = {{"method", e.profile.endpoint.method},
                         {"host", e.profile.endpoint.host},
                         {"path", e.profile.endpoint.path}};
        j["status"] = calibration_status_name(e.status);
        j["threshold"] = e.profile.threshold;
        j["k"] = e.profile.k;
        j["train_count"] = e.profile.train_count;
        j["validation_count"] = e.validation_count;
        j["metrics"] = {{"precision", e.metrics.precision},
                        {"recall", e.metrics.recall},
                        {"accuracy", e.metrics.accuracy},
                        {"f1", e.metrics.f1}};
        j["k_grid"] = nlohmann::json::array();
        for (const KSweep::Entry& g : e.sweep.grid) {
            j["k_grid"].push_back({{"k", g.k},
                                   {"threshold", g.threshold},
                                   {"f1", g.metrics.f1},
                                   {"precision", g.metrics.precision},
                                   {"recall", g.metrics.recall},
                                   {"accuracy", g.metrics.accuracy}});
        }
        doc["entries"].push_back(std::move(j));
    }
    doc["missing_namespaces"] = nlohmann::json::array();
    for (const auto& [ep, count] : report.missing_namespaces) {
        doc["missing_namespaces"].push_back({{"method", ep.method},
                                             {"host", ep.host},
                                             {"path", ep.path},
                                             {"count", count}});
    }
    write_file(json_path, doc.dump(2) + "\n");
}

}  // namespace radar
