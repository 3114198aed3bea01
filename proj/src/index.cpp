#include "radar/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <queue>

#include "radar/io.hpp"

namespace radar {

namespace {

constexpr char kIndexMagic[8] = {'R', 'A', 'D', 'A', 'R', 'I', 'X', '\0'};
constexpr std::uint32_t kIndexVersion = 1;

float dot(const float* a, const float* b, int dim) {
    float s = 0.0f;
    for (int i = 0; i < dim; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

float l2sq(const float* a, const float* b, int dim) {
    float s = 0.0f;
    for (int i = 0; i < dim; ++i) {
        const float d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double norm_of(std::span<const float> v) {
    double s = 0.0;
    for (float x : v) {
        s += static_cast<double>(x) * x;
    }
    return std::sqrt(s);
}

void check_dims(std::span<const float> u, std::span<const float> v) {
    if (u.size() != v.size()) {
        throw DimensionMismatch("vector dimensions differ: " +
                                std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()));
    }
}

// Stored vectors are pre-normalized in cosine space, so the in-graph
// distance is a plain transform of the dot product.
float raw_distance(const float* a, const float* b, int dim, Distance d) {
    switch (d) {
        case Distance::cosine:
        case Distance::inner_product:
            return 1.0f - dot(a, b, dim);
        case Distance::squared_l2:
            return l2sq(a, b, dim);
    }
    return 0.0f;
}

// Counter-based level sampling: level depends only on (namespace seed,
// node ordinal), so incremental inserts after a reload draw the same
// levels as a fresh build.
double unit_from_hash(std::uint64_t seed, std::uint64_t n) {
    Fnv64 h;
    h.update(&seed, sizeof(seed));
    h.update(&n, sizeof(n));
    std::uint64_t bits = h.digest();
    bits ^= bits >> 33;
    bits *= 0xff51afd7ed558ccdULL;
    bits ^= bits >> 33;
    double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
}

}  // namespace

const char* distance_name(Distance d) {
    switch (d) {
        case Distance::cosine:
            return "cosine";
        case Distance::squared_l2:
            return "l2";
        case Distance::inner_product:
            return "ip";
    }
    return "?";
}

Distance distance_from_name(std::string_view name) {
    if (name == "cosine") {
        return Distance::cosine;
    }
    if (name == "l2" || name == "squared-l2") {
        return Distance::squared_l2;
    }
    if (name == "ip" || name == "inner-product") {
        return Distance::inner_product;
    }
    throw std::invalid_argument("unknown distance space '" + std::string(name) +
                                "'");
}

void IndexConfig::validate() const {
    if (m < 2) {
        throw std::invalid_argument("index m must be >= 2");
    }
    if (ef_construction < m) {
        throw std::invalid_argument("ef_construction must be >= m");
    }
    if (ef_search < 1) {
        throw std::invalid_argument("ef_search must be >= 1");
    }
}

float cosine_distance(std::span<const float> u, std::span<const float> v) {
    check_dims(u, v);
    const double nu = norm_of(u);
    const double nv = norm_of(v);
    if (nu == 0.0 || nv == 0.0) {
        throw ZeroVector("cosine distance of a zero vector is undefined");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        d += static_cast<double>(u[i]) * v[i];
    }
    return static_cast<float>(1.0 - d / (nu * nv));
}

float squared_l2_distance(std::span<const float> u, std::span<const float> v) {
    check_dims(u, v);
    return l2sq(u.data(), v.data(), static_cast<int>(u.size()));
}

float inner_product_distance(std::span<const float> u,
                             std::span<const float> v) {
    check_dims(u, v);
    return 1.0f - dot(u.data(), v.data(), static_cast<int>(u.size()));
}

std::vector<Neighbor> exact_knn(std::span<const float> query,
                                std::span<const float> data, std::size_t count,
                                int dim, Distance distance, int k) {
    std::vector<Neighbor> all;
    all.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const float* row = data.data() + i * static_cast<std::size_t>(dim);
        float d = raw_distance(query.data(), row, dim, distance);
        all.push_back({static_cast<std::uint64_t>(i), d});
    }
    auto less = [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) {
            return a.distance < b.distance;
        }
        return a.id < b.id;
    };
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                   all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep),
                      all.end(), less);
    all.resize(keep);
    return all;
}

AnnIndex::AnnIndex(int dim, IndexConfig config)
    : dim_(dim), config_(config) {
    if (dim_ <= 0) {
        throw std::invalid_argument("index dimension must be positive");
    }
    config_.validate();
}

void AnnIndex::set_ef_search(int ef) {
    if (ef < 1) {
        throw std::invalid_argument("ef_search must be >= 1");
    }
    config_.ef_search = ef;
}

bool AnnIndex::has_endpoint(const Endpoint& endpoint) const {
    return graphs_.contains(endpoint);
}

std::size_t AnnIndex::namespace_size(const Endpoint& endpoint) const {
    auto it = graphs_.find(endpoint);
    return it == graphs_.end() ? 0 : it->second.nodes.size();
}

std::vector<Endpoint> AnnIndex::endpoints() const {
    std::vector<Endpoint> out;
    out.reserve(graphs_.size());
    for (const auto& [ep, g] : graphs_) {
        out.push_back(ep);
    }
    return out;
}

const float* AnnIndex::slot_vector(std::uint32_t slot) const {
    return vectors_.data() + static_cast<std::size_t>(slot) * dim_;
}

float AnnIndex::node_distance(const Graph& g, std::span<const float> q,
                              std::uint32_t node) const {
    return raw_distance(q.data(), slot_vector(g.nodes[node].slot), dim_,
                        config_.distance);
}

std::vector<float> AnnIndex::prepared(std::span<const float> vector) const {
    if (static_cast<int>(vector.size()) != dim_) {
        throw DimensionMismatch("vector has dimension " +
                                std::to_string(vector.size()) + ", index has " +
                                std::to_string(dim_));
    }
    std::vector<float> v(vector.begin(), vector.end());
    if (config_.distance == Distance::cosine) {
        const double norm = norm_of(vector);
        if (norm == 0.0) {
            throw ZeroVector("zero vector in cosine space");
        }
        const float inv = static_cast<float>(1.0 / norm);
        for (float& x : v) {
            x *= inv;
        }
    }
    return v;
}

int AnnIndex::sample_level(const Graph& g) const {
    const double ml = 1.0 / std::log(static_cast<double>(config_.m));
    const double u = unit_from_hash(g.level_seed, g.nodes.size());
    return static_cast<int>(-std::log(u) * ml);
}

std::uint32_t AnnIndex::greedy_descend(const Graph& g, std::span<const float> q,
                                       std::uint32_t start, int level) const {
    std::uint32_t cur = start;
    float cur_dist = node_distance(g, q, cur);
    bool improved = true;
    while (improved) {
        improved = false;
        const auto& links = g.nodes[cur].links[static_cast<std::size_t>(level)];
        for (std::uint32_t nb : links) {
            const float d = node_distance(g, q, nb);
            if (d < cur_dist || (d == cur_dist && nb < cur)) {
                cur = nb;
                cur_dist = d;
                improved = true;
            }
        }
    }
    return cur;
}

std::vector<AnnIndex::Candidate> AnnIndex::search_layer(
    const Graph& g, std::span<const float> q, std::uint32_t start, int ef,
    int level) const {
    auto cand_less = [](const Candidate& a, const Candidate& b) {
        if (a.dist != b.dist) {
            return a.dist > b.dist;  // min-heap by distance
        }
        return a.node > b.node;
    };
    auto result_less = [](const Candidate& a, const Candidate& b) {
        if (a.dist != b.dist) {
            return a.dist < b.dist;  // max-heap by distance
        }
        return a.node < b.node;
    };
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(cand_less)>
        candidates(cand_less);
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(result_less)>
        results(result_less);
    std::vector<char> visited(g.nodes.size(), 0);

    const float d0 = node_distance(g, q, start);
    candidates.push({d0, start});
    results.push({d0, start});
    visited[start] = 1;

    while (!candidates.empty()) {
        Candidate c = candidates.top();
        if (c.dist > results.top().dist &&
            results.size() >= static_cast<std::size_t>(ef)) {
            break;
        }
        candidates.pop();
        for (std::uint32_t nb :
             g.nodes[c.node].links[static_cast<std::size_t>(level)]) {
            if (visited[nb]) {
                continue;
            }
            visited[nb] = 1;
            const float d = node_distance(g, q, nb);
            if (results.size() < static_cast<std::size_t>(ef) ||
                d < results.top().dist) {
                candidates.push({d, nb});
                results.push({d, nb});
                if (results.size() > static_cast<std::size_t>(ef)) {
                    results.pop();
                }
            }
        }
    }
    std::vector<Candidate> out;
    out.reserve(results.size());
    while (!results.empty()) {
        out.push_back(results.top());
        results.pop();
    }
    std::reverse(out.begin(), out.end());  // ascending by distance
    return out;
}

// Heuristic selection: keep a candidate only if it is closer to the
// query than to every already-kept neighbor, which spreads links across
// directions instead of clustering them.
std::vector<std::uint32_t> AnnIndex::select_neighbors(
    const Graph& g, std::vector<Candidate> cands, int m) const {
    std::sort(cands.begin(), cands.end(), [](const Candidate& a,
                                             const Candidate& b) {
        if (a.dist != b.dist) {
            return a.dist < b.dist;
        }
        return a.node < b.node;
    });
    std::vector<std::uint32_t> selected;
    for (const Candidate& c : cands) {
        if (static_cast<int>(selected.size()) >= m) {
            break;
        }
        bool keep = true;
        const float* cv = slot_vector(g.nodes[c.node].slot);
        for (std::uint32_t s : selected) {
            const float d = raw_distance(cv, slot_vector(g.nodes[s].slot), dim_,
                                         config_.distance);
            if (d < c.dist) {
                keep = false;
                break;
            }
        }
        if (keep) {
            selected.push_back(c.node);
        }
    }
    return selected;
}

void AnnIndex::shrink_links(Graph& g, std::uint32_t node, int level, int cap) {
    auto& links = g.nodes[node].links[static_cast<std::size_t>(level)];
    if (static_cast<int>(links.size()) <= cap) {
        return;
    }
    const float* base = slot_vector(g.nodes[node].slot);
    std::vector<Candidate> cands;
    cands.reserve(links.size());
    for (std::uint32_t nb : links) {
        cands.push_back({raw_distance(base, slot_vector(g.nodes[nb].slot), dim_,
                                      config_.distance),
                         nb});
    }
    links = select_neighbors(g, std::move(cands), cap);
}

void AnnIndex::insert(const Endpoint& endpoint, std::span<const float> vector,
                      std::uint64_t id) {
    if (id_slots_.contains(id)) {
        throw DuplicateId("point id " + std::to_string(id) +
                          " already present");
    }
    std::vector<float> v = prepared(vector);

    const std::uint32_t slot = static_cast<std::uint32_t>(ids_.size());
    vectors_.insert(vectors_.end(), v.begin(), v.end());
    ids_.push_back(id);
    id_slots_.emplace(id, slot);

    auto [it, created] = graphs_.try_emplace(endpoint);
    Graph& g = it->second;
    if (created) {
        g.level_seed = fnv1a64(endpoint.key()) ^ config_.seed;
    }

    const int level = sample_level(g);
    const std::uint32_t node = static_cast<std::uint32_t>(g.nodes.size());
    Node n;
    n.slot = slot;
    n.links.resize(static_cast<std::size_t>(level) + 1);
    g.nodes.push_back(std::move(n));

    if (g.entry < 0) {
        g.entry = node;
        g.max_level = level;
        return;
    }

    std::span<const float> q(slot_vector(slot), static_cast<std::size_t>(dim_));
    std::uint32_t ep = static_cast<std::uint32_t>(g.entry);
    for (int l = g.max_level; l > level; --l) {
        ep = greedy_descend(g, q, ep, l);
    }
    for (int l = std::min(level, g.max_level); l >= 0; --l) {
        std::vector<Candidate> found =
            search_layer(g, q, ep, config_.ef_construction, l);
        // new node is not yet linked, so it never appears in `found`
        std::vector<std::uint32_t> neighbors =
            select_neighbors(g, found, config_.m);
        const int cap = l == 0 ? 2 * config_.m : config_.m;
        for (std::uint32_t nb : neighbors) {
            g.nodes[node].links[static_cast<std::size_t>(l)].push_back(nb);
            g.nodes[nb].links[static_cast<std::size_t>(l)].push_back(node);
            shrink_links(g, nb, l, cap);
        }
        ep = found.empty() ? ep : found.front().node;
    }
    if (level > g.max_level) {
        g.max_level = level;
        g.entry = node;
    }
}

std::vector<Neighbor> AnnIndex::query(const Endpoint& endpoint,
                                      std::span<const float> vector,
                                      int k) const {
    if (k < 1) {
        throw std::invalid_argument("k must be >= 1");
    }
    auto it = graphs_.find(endpoint);
    if (it == graphs_.end()) {
        throw UnknownEndpoint("no namespace for endpoint " + endpoint.key());
    }
    const Graph& g = it->second;
    std::vector<float> q = prepared(vector);

    const int ef = std::max(config_.ef_search, k);
    std::uint32_t ep = static_cast<std::uint32_t>(g.entry);
    for (int l = g.max_level; l > 0; --l) {
        ep = greedy_descend(g, q, ep, l);
    }
    std::vector<Candidate> found = search_layer(g, q, ep, ef, 0);

    std::vector<Neighbor> out;
    out.reserve(found.size());
    for (const Candidate& c : found) {
        out.push_back({ids_[g.nodes[c.node].slot], c.dist});
    }
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) {
            return a.distance < b.distance;
        }
        return a.id < b.id;
    });
    if (out.size() > static_cast<std::size_t>(k)) {
        out.resize(static_cast<std::size_t>(k));
    }
    return out;
}

std::vector<Neighbor> AnnIndex::brute_force_query(const Endpoint& endpoint,
                                                  std::span<const float> vector,
                                                  int k) const {
    if (k < 1) {
        throw std::invalid_argument("k must be >= 1");
    }
    auto it = graphs_.find(endpoint);
    if (it == graphs_.end()) {
        throw UnknownEndpoint("no namespace for endpoint " + endpoint.key());
    }
    const Graph& g = it->second;
    std::vector<float> q = prepared(vector);

    std::vector<Neighbor> all;
    all.reserve(g.nodes.size());
    for (const Node& n : g.nodes) {
        all.push_back({ids_[n.slot], raw_distance(q.data(), slot_vector(n.slot),
                                                  dim_, config_.distance)});
    }
    auto less = [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) {
            return a.distance < b.distance;
        }
        return a.id < b.id;
    };
    const std::size_t keep =
        std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep),
                      all.end(), less);
    all.resize(keep);
    return all;
}

void AnnIndex::save(const std::filesystem::path& path) const {
    BinaryWriter w(path);
    w.bytes(kIndexMagic, sizeof(kIndexMagic));
    w.u32(kIndexVersion);
    w.i32(dim_);
    w.i32(config_.m);
    w.i32(config_.ef_construction);
    w.i32(config_.ef_search);
    w.u8(static_cast<std::uint8_t>(config_.distance));
    w.u64(config_.seed);

    w.u64(ids_.size());
    for (std::uint64_t id : ids_) {
        w.u64(id);
    }
    w.f32_span(vectors_);

    w.u64(graphs_.size());
    for (const auto& [ep, g] : graphs_) {
        w.str(ep.method);
        w.str(ep.host);
        w.str(ep.path);
        w.u64(g.nodes.size());
        w.u64(static_cast<std::uint64_t>(g.entry));
        w.i32(g.max_level);
        for (const Node& n : g.nodes) {
            w.u32(n.slot);
            w.u32(static_cast<std::uint32_t>(n.links.size()));
            for (const auto& level_links : n.links) {
                w.u32(static_cast<std::uint32_t>(level_links.size()));
                for (std::uint32_t nb : level_links) {
                    w.u32(nb);
                }
            }
        }
    }
    w.finish();
}

AnnIndex AnnIndex::load(const std::filesystem::path& path) {
    BinaryReader r(path);
    char magic[8];
    r.bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) {
        throw CorruptFile(path.string() + ": not an index file");
    }
    const std::uint32_t version = r.u32();
    if (version != kIndexVersion) {
        throw IncompatibleVersion(path.string() + ": index format version " +
                                  std::to_string(version) + ", expected " +
                                  std::to_string(kIndexVersion));
    }
    const int dim = r.i32();
    IndexConfig cfg;
    cfg.m = r.i32();
    cfg.ef_construction = r.i32();
    cfg.ef_search = r.i32();
    cfg.distance = static_cast<Distance>(r.u8());
    cfg.seed = r.u64();

    AnnIndex index(dim, cfg);
    const std::uint64_t count = r.u64();
    index.ids_.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t id = r.u64();
        index.ids_.push_back(id);
        index.id_slots_.emplace(id, static_cast<std::uint32_t>(i));
    }
    index.vectors_.resize(count * static_cast<std::uint64_t>(dim));
    r.f32_span(index.vectors_);

    const std::uint64_t graph_count = r.u64();
    for (std::uint64_t gi = 0; gi < graph_count; ++gi) {
        Endpoint ep;
        ep.method = r.str();
        ep.host = r.str();
        ep.path = r.str();
        Graph g;
        g.level_seed = fnv1a64(ep.key()) ^ cfg.seed;
        const std::uint64_t nodes = r.u64();
        g.entry = static_cast<std::int64_t>(r.u64());
        g.max_level = r.i32();
        g.nodes.reserve(nodes);
        for (std::uint64_t ni = 0; ni < nodes; ++ni) {
            Node n;
            n.slot = r.u32();
            if (n.slot >= count) {
                throw CorruptFile(path.string() + ": node slot out of range");
            }
            const std::uint32_t levels = r.u32();
            n.links.resize(levels);
            for (std::uint32_t li = 0; li < levels; ++li) {
                const std::uint32_t degree = r.u32();
                n.links[li].reserve(degree);
                for (std::uint32_t d = 0; d < degree; ++d) {
                    const std::uint32_t nb = r.u32();
                    if (nb >= nodes) {
                        throw CorruptFile(path.string() +
                                          ": link target out of range");
                    }
                    n.links[li].push_back(nb);
                }
            }
            g.nodes.push_back(std::move(n));
        }
        index.graphs_.emplace(std::move(ep), std::move(g));
    }
    return index;
}

void AnnIndex::validate_structure() const {
    for (const auto& [ep, g] : graphs_) {
        if (g.nodes.empty()) {
            throw std::logic_error("empty namespace graph for " + ep.key());
        }
        if (g.entry < 0 ||
            g.entry >= static_cast<std::int64_t>(g.nodes.size())) {
            throw std::logic_error("entry point out of range for " + ep.key());
        }
        const std::size_t entry_levels =
            g.nodes[static_cast<std::size_t>(g.entry)].links.size();
        if (static_cast<int>(entry_levels) != g.max_level + 1) {
            throw std::logic_error("entry point level mismatch for " + ep.key());
        }
        for (std::size_t ni = 0; ni < g.nodes.size(); ++ni) {
            const Node& n = g.nodes[ni];
            if (n.links.empty() ||
                static_cast<int>(n.links.size()) > g.max_level + 1) {
                throw std::logic_error("node level out of range for " + ep.key());
            }
            for (std::size_t l = 0; l < n.links.size(); ++l) {
                const int cap = l == 0 ? 2 * config_.m : config_.m;
                if (static_cast<int>(n.links[l].size()) > cap) {
                    throw std::logic_error("degree bound violated for " +
                                           ep.key());
                }
                for (std::uint32_t nb : n.links[l]) {
                    if (nb >= g.nodes.size() || nb == ni) {
                        throw std::logic_error("bad link target for " + ep.key());
                    }
                    if (g.nodes[nb].links.size() <= l) {
                        throw std::logic_error(
                            "link to node missing that level for " + ep.key());
                    }
                }
            }
        }
    }
}

}  // namespace radar
