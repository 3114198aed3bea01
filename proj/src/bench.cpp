#include "radar/bench.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <sstream>

#include "radar/calibrate.hpp"
#include "radar/detector.hpp"
#include "radar/io.hpp"

namespace radar {

namespace {

using Clock = std::chrono::steady_clock;

const Endpoint& bench_endpoint() {
    static const Endpoint ep{"BENCH", "bench.local", "/"};
    return ep;
}

[[noreturn]] void schema_error(const YAML::Node& node, const std::string& msg) {
    throw BenchSchemaError(
        fmt::format("bench config line {}: {}", node.Mark().line + 1, msg));
}

BenchMethod method_from_name(const YAML::Node& node, std::string_view name) {
    std::string lower;
    for (char c : name) {
        lower.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                             : c);
    }
    if (lower == "hnsw" || lower == "hnswlib") {
        return BenchMethod::hnsw;
    }
    if (lower == "bruteforce" || lower == "brute-force" ||
        lower == "bruteforce-blas" || lower == "brute") {
        return BenchMethod::brute_force;
    }
    schema_error(node, fmt::format("unknown method '{}'", name));
}

bool known_parameter(std::string_view name) {
    return name == "K" || name == "k" || name == "ef_construction" ||
           name == "ef_search" || name == "M" || name == "m";
}

std::vector<std::string> scalar_list(const YAML::Node& node,
                                     const char* field) {
    std::vector<std::string> out;
    if (node.IsScalar()) {
        out.push_back(node.as<std::string>());
        return out;
    }
    if (!node.IsSequence()) {
        schema_error(node, fmt::format("'{}' must be a scalar or a list", field));
    }
    for (const YAML::Node& item : node) {
        if (!item.IsScalar()) {
            schema_error(item, fmt::format("'{}' entries must be scalars", field));
        }
        out.push_back(item.as<std::string>());
    }
    if (out.empty()) {
        schema_error(node, fmt::format("'{}' must not be empty", field));
    }
    return out;
}

BenchEntry parse_entry(const YAML::Node& node) {
    if (!node.IsMap()) {
        schema_error(node, "each config entry must be a mapping");
    }
    BenchEntry entry;
    bool saw_method = false, saw_space = false, saw_groups = false;
    for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        if (key == "name") {
            entry.name = kv.second.as<std::string>();
        } else if (key == "library") {
            entry.library = kv.second.as<std::string>();
        } else if (key == "method") {
            for (const std::string& m : scalar_list(kv.second, "method")) {
                entry.methods.push_back(method_from_name(kv.second, m));
            }
            saw_method = true;
        } else if (key == "space") {
            for (const std::string& s : scalar_list(kv.second, "space")) {
                try {
                    entry.spaces.push_back(distance_from_name(s));
                } catch (const std::invalid_argument& e) {
                    schema_error(kv.second, e.what());
                }
            }
            saw_space = true;
        } else if (key == "run_groups") {
            if (!kv.second.IsMap() || kv.second.size() == 0) {
                schema_error(kv.second,
                             "'run_groups' must be a non-empty mapping");
            }
            for (const auto& group : kv.second) {
                BenchRunGroup rg;
                rg.parameter = group.first.as<std::string>();
                if (!known_parameter(rg.parameter)) {
                    schema_error(group.second,
                                 fmt::format("unknown run-group parameter '{}'",
                                             rg.parameter));
                }
                if (!group.second.IsMap() || !group.second["query_args"]) {
                    schema_error(group.second,
                                 "run group must contain 'query_args'");
                }
                for (const auto& inner : group.second) {
                    if (inner.first.as<std::string>() != "query_args") {
                        schema_error(inner.second,
                                     fmt::format("unknown run-group field '{}'",
                                                 inner.first.as<std::string>()));
                    }
                }
                const YAML::Node& args = group.second["query_args"];
                if (!args.IsSequence() || args.size() == 0) {
                    schema_error(args,
                                 "'query_args' must be a non-empty list of "
                                 "value lists");
                }
                for (const YAML::Node& list : args) {
                    if (!list.IsSequence()) {
                        schema_error(list, "'query_args' entries must be lists");
                    }
                    for (const YAML::Node& v : list) {
                        std::int64_t value;
                        try {
                            value = v.as<std::int64_t>();
                        } catch (const YAML::Exception&) {
                            schema_error(v, "query_args values must be integers");
                        }
                        if (value < 1) {
                            schema_error(v, "query_args values must be >= 1");
                        }
                        // duplicates within a group are dropped
                        if (std::find(rg.values.begin(), rg.values.end(),
                                      value) == rg.values.end()) {
                            rg.values.push_back(value);
                        }
                    }
                }
                if (rg.values.empty()) {
                    schema_error(group.second, "run group has no values");
                }
                entry.run_groups.push_back(std::move(rg));
            }
            saw_groups = true;
        } else {
            schema_error(kv.second, fmt::format("unknown field '{}'", key));
        }
    }
    if (entry.name.empty()) {
        schema_error(node, "entry is missing 'name'");
    }
    if (!saw_method) {
        schema_error(node, "entry is missing 'method'");
    }
    if (!saw_space) {
        schema_error(node, "entry is missing 'space'");
    }
    if (!saw_groups) {
        schema_error(node, "entry is missing 'run_groups'");
    }
    return entry;
}

struct InstanceParams {
    int k;
    int m;
    int ef_construction;
    int ef_search;
};

InstanceParams bind_params(const BenchInstance& inst,
                           const BenchDefaults& defaults) {
    InstanceParams p{defaults.k, defaults.m, defaults.ef_construction,
                     defaults.ef_search};
    const int v = static_cast<int>(
        std::min<std::int64_t>(inst.value, 1'000'000));
    if (inst.parameter == "K" || inst.parameter == "k") {
        p.k = v;
    } else if (inst.parameter == "ef_construction") {
        p.ef_construction = std::max(v, p.m);
    } else if (inst.parameter == "ef_search") {
        p.ef_search = v;
    } else if (inst.parameter == "M" || inst.parameter == "m") {
        p.m = std::max(2, v);
        p.ef_construction = std::max(p.ef_construction, p.m);
    }
    return p;
}

std::vector<float> normalized_rows(std::span<const float> rows, int dim) {
    std::vector<float> out(rows.begin(), rows.end());
    const std::size_t count = rows.size() / static_cast<std::size_t>(dim);
    for (std::size_t i = 0; i < count; ++i) {
        float* row = out.data() + i * static_cast<std::size_t>(dim);
        double norm = 0.0;
        for (int d = 0; d < dim; ++d) {
            norm += static_cast<double>(row[d]) * row[d];
        }
        if (norm == 0.0) {
            throw ZeroVector("zero vector in cosine space");
        }
        const float inv = static_cast<float>(1.0 / std::sqrt(norm));
        for (int d = 0; d < dim; ++d) {
            row[d] *= inv;
        }
    }
    return out;
}

double score_from_neighbors(const std::vector<Neighbor>& neighbors) {
    std::vector<double> distances;
    distances.reserve(neighbors.size());
    for (const Neighbor& n : neighbors) {
        distances.push_back(
            std::max(0.0, static_cast<double>(n.distance)));
    }
    std::vector<double> scaled = max_distance_scale(distances);
    return *std::max_element(scaled.begin(), scaled.end());
}

BenchRecord run_instance(const BenchInstance& inst, const BenchDataset& data,
                         const BenchDefaults& defaults) {
    BenchRecord rec;
    rec.instance = inst;
    const InstanceParams p = bind_params(inst, defaults);
    const std::size_t n_train = data.train_count();
    const std::size_t n_test = data.test_count();
    const int dim = data.dim;

    std::vector<float> flat;           // brute-force store
    std::unique_ptr<AnnIndex> index;   // hnsw store

    const auto build_start = Clock::now();
    if (inst.method == BenchMethod::hnsw) {
        IndexConfig cfg;
        cfg.m = p.m;
        cfg.ef_construction = p.ef_construction;
        cfg.ef_search = p.ef_search;
        cfg.distance = inst.space;
        cfg.seed = defaults.seed;
        index = std::make_unique<AnnIndex>(dim, cfg);
        for (std::size_t i = 0; i < n_train; ++i) {
            index->insert(bench_endpoint(),
                          std::span<const float>(
                              data.train.data() + i * static_cast<std::size_t>(dim),
                              static_cast<std::size_t>(dim)),
                          static_cast<std::uint64_t>(i));
        }
    } else {
        flat = inst.space == Distance::cosine
                   ? normalized_rows(data.train, dim)
                   : std::vector<float>(data.train.begin(), data.train.end());
    }
    rec.build_seconds =
        std::chrono::duration<double>(Clock::now() - build_start).count();

    auto prepare_query = [&](std::size_t i) -> std::vector<float> {
        const float* row = data.test.data() + i * static_cast<std::size_t>(dim);
        std::vector<float> q(row, row + dim);
        if (inst.space == Distance::cosine) {
            q = normalized_rows(q, dim);
        }
        return q;
    };
    auto run_query = [&](const std::vector<float>& q) {
        if (index) {
            return index->query(bench_endpoint(), q, p.k);
        }
        return exact_knn(q, flat, n_train, dim, inst.space, p.k);
    };

    // warm-up pass, excluded from timing
    for (std::size_t i = 0; i < n_test; ++i) {
        (void)run_query(prepare_query(i));
    }

    std::vector<ScoredSample> scores(n_test);
    rec.query_seconds.resize(n_test);
    for (std::size_t i = 0; i < n_test; ++i) {
        std::vector<float> q = prepare_query(i);
        const auto t0 = Clock::now();
        std::vector<Neighbor> neighbors = run_query(q);
        rec.query_seconds[i] =
            std::chrono::duration<double>(Clock::now() - t0).count();
        scores[i] = {score_from_neighbors(neighbors), data.labels[i] != 0};
        rec.neighbors_per_query = neighbors.size();
    }

    ThresholdSweep sweep = sweep_threshold(scores);
    rec.best_threshold = sweep.best_threshold;
    Confusion c;
    for (const ScoredSample& s : scores) {
        const bool predicted = s.score < sweep.best_threshold;
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
    rec.precision = compute_metrics(c).precision;

    double total = 0.0;
    for (double t : rec.query_seconds) {
        total += t;
    }
    rec.qps = total > 0.0 ? static_cast<double>(n_test) / total : 0.0;
    rec.ok = true;
    return rec;
}

}  // namespace

const char* bench_method_name(BenchMethod m) {
    switch (m) {
        case BenchMethod::hnsw:
            return "hnsw";
        case BenchMethod::brute_force:
            return "bruteforce";
    }
    return "?";
}

BenchConfig parse_bench_config(const std::filesystem::path& path) {
    return parse_bench_config_text(read_file(path));
}

BenchConfig parse_bench_config_text(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw BenchSchemaError(fmt::format("bench config line {}: {}",
                                           e.mark.line + 1, e.msg));
    }
    if (!root.IsSequence() || root.size() == 0) {
        throw BenchSchemaError(
            "bench config must be a non-empty list of entries");
    }
    BenchConfig cfg;
    for (const YAML::Node& node : root) {
        cfg.entries.push_back(parse_entry(node));
    }
    return cfg;
}

std::string BenchInstance::label() const {
    return fmt::format("{}-{}-{}-{}={}", entry_name, bench_method_name(method),
                       distance_name(space), parameter, value);
}

std::vector<BenchInstance> expand_instances(const BenchConfig& config) {
    std::vector<BenchInstance> out;
    for (const BenchEntry& entry : config.entries) {
        for (BenchMethod method : entry.methods) {
            for (Distance space : entry.spaces) {
                for (const BenchRunGroup& group : entry.run_groups) {
                    for (std::int64_t value : group.values) {
                        BenchInstance inst;
                        inst.entry_name = entry.name;
                        inst.method = method;
                        inst.space = space;
                        inst.parameter = group.parameter;
                        inst.value = value;
                        out.push_back(std::move(inst));
                    }
                }
            }
        }
    }
    return out;
}

std::size_t BenchDataset::train_count() const {
    return dim > 0 ? train.size() / static_cast<std::size_t>(dim) : 0;
}

std::size_t BenchDataset::test_count() const {
    return dim > 0 ? test.size() / static_cast<std::size_t>(dim) : 0;
}

std::vector<BenchRecord> run_bench(std::span<const BenchInstance> instances,
                                   const BenchDataset& dataset,
                                   const BenchDefaults& defaults) {
    if (dataset.dim <= 0 || dataset.train_count() == 0 ||
        dataset.test_count() == 0 ||
        dataset.labels.size() != dataset.test_count()) {
        throw std::invalid_argument("bench dataset is empty or inconsistent");
    }
    std::vector<BenchRecord> records;
    records.reserve(instances.size());
    for (const BenchInstance& inst : instances) {
        try {
            records.push_back(run_instance(inst, dataset, defaults));
        } catch (const std::exception& e) {
            BenchRecord rec;
            rec.instance = inst;
            rec.ok = false;
            rec.error = e.what();
            records.push_back(std::move(rec));
        }
    }
    return records;
}

void emit_frontier(std::span<const BenchRecord> records, FrontierAxis axis,
                   const std::filesystem::path& path) {
    std::vector<const BenchRecord*> ok;
    for (const BenchRecord& r : records) {
        if (r.ok) {
            ok.push_back(&r);
        }
    }
    std::sort(ok.begin(), ok.end(),
              [axis](const BenchRecord* a, const BenchRecord* b) {
                  const double av = axis == FrontierAxis::qps ? a->qps
                                                              : a->build_seconds;
                  const double bv = axis == FrontierAxis::qps ? b->qps
                                                              : b->build_seconds;
                  if (av != bv) {
                      return av < bv;
                  }
                  return a->instance.label() < b->instance.label();
              });
    std::string out =
        "name\tmethod\tspace\tparameter\tvalue\tprecision\tqps\tbuild_seconds\n";
    for (const BenchRecord* r : ok) {
        out += fmt::format("{}\t{}\t{}\t{}\t{}\t{:.6f}\t{:.3f}\t{:.6f}\n",
                           r->instance.entry_name,
                           bench_method_name(r->instance.method),
                           distance_name(r->instance.space),
                           r->instance.parameter, r->instance.value,
                           r->precision, r->qps, r->build_seconds);
    }
    write_file(path, out);
}

std::vector<FrontierRow> read_frontier(const std::filesystem::path& path) {
    std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    std::vector<FrontierRow> rows;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (header) {
            header = false;
            continue;
        }
        std::istringstream ls(line);
        FrontierRow row;
        std::string value, precision, qps, build;
        if (!std::getline(ls, row.name, '\t') ||
            !std::getline(ls, row.method, '\t') ||
            !std::getline(ls, row.space, '\t') ||
            !std::getline(ls, row.parameter, '\t') ||
            !std::getline(ls, value, '\t') ||
            !std::getline(ls, precision, '\t') ||
            !std::getline(ls, qps, '\t') || !std::getline(ls, build, '\t')) {
            throw CorruptFile(path.string() + ": bad frontier row");
        }
        row.value = std::stoll(value);
        row.precision = std::stod(precision);
        row.qps = std::stod(qps);
        row.build_seconds = std::stod(build);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace radar
