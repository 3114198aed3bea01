#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "radar/http.hpp"

namespace radar {

struct DuplicateId final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnknownEndpoint final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroVector final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Distance : std::uint8_t {
    cosine = 0,
    squared_l2 = 1,
    inner_product = 2,
};

const char* distance_name(Distance d);
Distance distance_from_name(std::string_view name);  // throws invalid_argument

struct IndexConfig {
    int m = 16;
    int ef_construction = 200;
    int ef_search = 200;
    Distance distance = Distance::cosine;
    std::uint64_t seed = 1;

    void validate() const;  // m >= 2, ef_construction >= m, ef_search >= 1
};

struct Neighbor {
    std::uint64_t id;
    float distance;
};

// 1 - dot(u,v)/(|u||v|), range [0,2]. Throws ZeroVector on zero inputs.
float cosine_distance(std::span<const float> u, std::span<const float> v);
float squared_l2_distance(std::span<const float> u, std::span<const float> v);
// 1 - dot(u,v); may be negative for non-normalized inputs.
float inner_product_distance(std::span<const float> u,
                             std::span<const float> v);

// Exact k-NN over a contiguous row-major buffer; ascending by
// (distance, id). The oracle the approximate search is measured against.
std::vector<Neighbor> exact_knn(std::span<const float> query,
                                std::span<const float> data, std::size_t count,
                                int dim, Distance distance, int k);

// HNSW graph over per-endpoint namespaces. Each namespace is its own
// small-world graph; all namespaces share the id space and the on-disk
// artifact. Vectors are stored L2-normalized in cosine space.
//
// Concurrency: single writer, multiple readers. Queries are const and
// may run concurrently with each other but not with insert().
class AnnIndex {
  public:
    AnnIndex(int dim, IndexConfig config = {});

    int dim() const { return dim_; }
    const IndexConfig& config() const { return config_; }
    void set_ef_search(int ef);

    std::size_t size() const { return ids_.size(); }
    bool has_endpoint(const Endpoint& endpoint) const;
    std::size_t namespace_size(const Endpoint& endpoint) const;
    std::vector<Endpoint> endpoints() const;

    void insert(const Endpoint& endpoint, std::span<const float> vector,
                std::uint64_t id);

    // Up to min(k, namespace size) neighbors, ascending by (distance, id).
    // Search runs with ef = max(ef_search, k).
    std::vector<Neighbor> query(const Endpoint& endpoint,
                                std::span<const float> vector, int k) const;

    // Exact scan of the namespace; ground truth for recall measurements.
    std::vector<Neighbor> brute_force_query(const Endpoint& endpoint,
                                            std::span<const float> vector,
                                            int k) const;

    void save(const std::filesystem::path& path) const;
    static AnnIndex load(const std::filesystem::path& path);

    // Structural invariants: degree bounds, link validity, entry point
    // consistency. Throws std::logic_error on violation.
    void validate_structure() const;

  private:
    struct Node {
        std::uint32_t slot;
        std::vector<std::vector<std::uint32_t>> links;  // per level, 0..top
    };
    struct Graph {
        std::uint64_t level_seed = 0;
        std::int64_t entry = -1;
        int max_level = -1;
        std::vector<Node> nodes;
    };
    struct Candidate {
        float dist;
        std::uint32_t node;
    };

    const float* slot_vector(std::uint32_t slot) const;
    float node_distance(const Graph& g, std::span<const float> q,
                        std::uint32_t node) const;
    std::uint32_t greedy_descend(const Graph& g, std::span<const float> q,
                                 std::uint32_t start, int level) const;
    std::vector<Candidate> search_layer(const Graph& g,
                                        std::span<const float> q,
                                        std::uint32_t start, int ef,
                                        int level) const;
    std::vector<std::uint32_t> select_neighbors(const Graph& g,
                                                std::vector<Candidate> cands,
                                                int m) const;
    void shrink_links(Graph& g, std::uint32_t node, int level, int cap);
    int sample_level(const Graph& g) const;
    std::vector<float> prepared(std::span<const float> vector) const;

    int dim_;
    IndexConfig config_;
    std::vector<float> vectors_;
    std::vector<std::uint64_t> ids_;
    std::unordered_map<std::uint64_t, std::uint32_t> id_slots_;
    std::map<Endpoint, Graph> graphs_;
};

}  // namespace radar
