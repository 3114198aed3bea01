#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "radar/index.hpp"

namespace radar {

struct BenchSchemaError final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BenchMethod { hnsw, brute_force };

const char* bench_method_name(BenchMethod m);

struct BenchRunGroup {
    std::string parameter;  // one of: K, ef_construction, ef_search, M
    std::vector<std::int64_t> values;  // deduplicated, file order
};

struct BenchEntry {
    std::string name;
    std::string library;  // informational
    std::vector<BenchMethod> methods;
    std::vector<Distance> spaces;
    std::vector<BenchRunGroup> run_groups;
};

struct BenchConfig {
    std::vector<BenchEntry> entries;
};

// YAML config mirroring the run-group schema:
//
//   - name: Hnswlib
//     library: Hnswlib
//     method: [Hnswlib]
//     space: [cosine,l2,ip]
//     run_groups:
//       K:
//         query_args: [[10,50,100]]
//       ef_construction:
//         query_args: [[10, 20, 40]]
//
// Unknown fields, spaces, methods, and run-group parameters are rejected
// with line diagnostics.
BenchConfig parse_bench_config(const std::filesystem::path& path);
BenchConfig parse_bench_config_text(std::string_view text);

struct BenchInstance {
    std::string entry_name;
    BenchMethod method = BenchMethod::hnsw;
    Distance space = Distance::cosine;
    std::string parameter;
    std::int64_t value = 0;

    std::string label() const;
};

// Deterministic Cartesian expansion: entry order, then method order,
// then space order, then run-group order, then argument order.
std::vector<BenchInstance> expand_instances(const BenchConfig& config);

struct BenchDataset {
    int dim = 0;
    std::vector<float> train;          // row-major
    std::vector<float> test;           // row-major
    std::vector<std::uint8_t> labels;  // per test row; 1 = anomaly
    std::size_t train_count() const;
    std::size_t test_count() const;
};

struct BenchDefaults {
    int k = 10;
    int m = 16;
    int ef_construction = 200;
    int ef_search = 200;
    std::uint64_t seed = 1;
};

struct BenchRecord {
    BenchInstance instance;
    bool ok = false;
    std::string error;
    double build_seconds = 0.0;
    std::vector<double> query_seconds;  // per query, warm-up pass excluded
    std::size_t neighbors_per_query = 0;
    double precision = 0.0;
    double best_threshold = 0.0;
    double qps = 0.0;  // query count / summed query wall time
};

// Runs instances sequentially on the same dataset. A failing instance is
// recorded with its reason and never aborts the rest of the suite.
std::vector<BenchRecord> run_bench(std::span<const BenchInstance> instances,
                                   const BenchDataset& dataset,
                                   const BenchDefaults& defaults = {});

enum class FrontierAxis { qps, build_time };

struct FrontierRow {
    std::string name;
    std::string method;
    std::string space;
    std::string parameter;
    std::int64_t value = 0;
    double precision = 0.0;
    double qps = 0.0;
    double build_seconds = 0.0;
};

// Plot-ready tab-separated table of the successful records, sorted by
// the chosen axis.
void emit_frontier(std::span<const BenchRecord> records, FrontierAxis axis,
                   const std::filesystem::path& path);
std::vector<FrontierRow> read_frontier(const std::filesystem::path& path);

}  // namespace radar
