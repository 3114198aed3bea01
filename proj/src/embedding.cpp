#include "radar/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "radar/io.hpp"

namespace radar {

namespace {

constexpr char kModelMagic[8] = {'R', 'A', 'D', 'A', 'R', 'L', 'M', '\0'};
constexpr std::uint32_t kModelVersion = 1;
constexpr std::size_t kNegTableSize = 1'000'000;
constexpr float kMaxLogit = 8.0f;

// mt19937_64 is algorithm-specified, so draws are identical across
// platforms; the bounding below avoids the implementation-defined
// std::uniform_* distributions.
struct Rng {
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    std::mt19937_64 gen;

    std::uint64_t next() { return gen(); }
    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>(next() % n);
    }
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    float uniform(float a, float b) {
        return a + (b - a) * static_cast<float>(unit());
    }
};

float sigmoid(float x) {
    x = std::clamp(x, -kMaxLogit, kMaxLogit);
    return 1.0f / (1.0f + std::exp(-x));
}

}  // namespace

void TrainingConfig::validate() const {
    if (dim <= 0) {
        throw std::invalid_argument("dim must be positive");
    }
    if (min_ngram <= 0 || min_ngram > max_ngram) {
        throw std::invalid_argument("require 0 < min_ngram <= max_ngram");
    }
    if (bucket_count <= 0) {
        throw std::invalid_argument("bucket_count must be positive");
    }
    if (negatives < 1) {
        throw std::invalid_argument("negatives must be >= 1");
    }
    if (window < 1 || epochs < 1 || threads < 1) {
        throw std::invalid_argument("window, epochs, and threads must be >= 1");
    }
    if (!(learning_rate > 0.0f)) {
        throw std::invalid_argument("learning_rate must be positive");
    }
    if (min_word_count < 0) {
        throw std::invalid_argument("min_word_count must be >= 0");
    }
}

std::vector<std::string> char_ngrams(std::string_view word, int minn,
                                     int maxn) {
    std::string wrapped = "<" + std::string(word) + ">";
    std::vector<std::string> out;
    const std::size_t n = wrapped.size();
    for (std::size_t start = 0; start < n; ++start) {
        for (int len = minn; len <= maxn; ++len) {
            if (start + static_cast<std::size_t>(len) > n) {
                break;
            }
            out.emplace_back(wrapped.substr(start, static_cast<std::size_t>(len)));
        }
    }
    // The full wrapped form is always an entry of its own; the substring
    // pass already covers it when its length falls inside [minn, maxn].
    if (n < static_cast<std::size_t>(minn) || n > static_cast<std::size_t>(maxn)) {
        out.push_back(std::move(wrapped));
    }
    return out;
}

std::uint32_t hash_ngram(std::string_view ngram, std::uint32_t bucket_count) {
    return fnv1a32(ngram) % bucket_count;
}

bool EmbeddingModel::has_word(std::string_view word) const {
    return vocab_ids_.contains(std::string(word));
}

std::uint64_t EmbeddingModel::word_count(std::string_view word) const {
    auto it = vocab_ids_.find(std::string(word));
    return it == vocab_ids_.end() ? 0 : vocab_counts_[it->second];
}

void EmbeddingModel::accumulate_row(std::size_t row,
                                    std::vector<float>& acc) const {
    const float* src = input_.data() + row * static_cast<std::size_t>(config_.dim);
    for (int d = 0; d < config_.dim; ++d) {
        acc[static_cast<std::size_t>(d)] += src[d];
    }
}

void EmbeddingModel::subword_rows(std::string_view word,
                                  std::vector<std::size_t>& rows) const {
    rows.clear();
    auto it = vocab_ids_.find(std::string(word));
    if (it != vocab_ids_.end()) {
        rows.push_back(it->second);
    }
    const std::size_t base = vocab_words_.size();
    for (const std::string& ng :
         char_ngrams(word, config_.min_ngram, config_.max_ngram)) {
        rows.push_back(base + hash_ngram(ng, static_cast<std::uint32_t>(
                                                 config_.bucket_count)));
    }
}

std::vector<float> EmbeddingModel::word_vector(std::string_view word) const {
    std::vector<float> acc(static_cast<std::size_t>(config_.dim), 0.0f);
    if (word.empty()) {
        return acc;
    }
    std::vector<std::size_t> rows;
    subword_rows(word, rows);
    for (std::size_t row : rows) {
        accumulate_row(row, acc);
    }
    const float inv = 1.0f / static_cast<float>(rows.size());
    for (float& x : acc) {
        x *= inv;
    }
    return acc;
}

std::vector<float> EmbeddingModel::sentence_vector(
    std::span<const std::string> tokens) const {
    std::vector<float> acc(static_cast<std::size_t>(config_.dim), 0.0f);
    if (tokens.empty()) {
        return acc;  // zero vector; the detector flags this case
    }
    for (const std::string& token : tokens) {
        std::vector<float> wv = word_vector(token);
        double norm = 0.0;
        for (float x : wv) {
            norm += static_cast<double>(x) * x;
        }
        if (norm > 0.0) {
            const float inv = static_cast<float>(1.0 / std::sqrt(norm));
            for (int d = 0; d < config_.dim; ++d) {
                acc[static_cast<std::size_t>(d)] +=
                    wv[static_cast<std::size_t>(d)] * inv;
            }
        }
    }
    const float inv = 1.0f / static_cast<float>(tokens.size());
    for (float& x : acc) {
        x *= inv;
    }
    return acc;
}

namespace {

struct TrainerState {
    const TrainingConfig* cfg;
    float* input;   // (vocab + buckets) x dim
    float* output;  // vocab x dim
    std::vector<std::vector<std::uint32_t>> lines;     // word ids per line
    std::vector<std::vector<std::size_t>> word_rows;   // input rows per vocab word
    std::vector<std::uint32_t> negative_table;
    std::uint64_t total_tokens = 0;
    std::atomic<std::uint64_t> processed_tokens{0};
};

void build_negative_table(const std::vector<std::uint64_t>& counts,
                          std::vector<std::uint32_t>& table) {
    double z = 0.0;
    for (std::uint64_t c : counts) {
        z += std::pow(static_cast<double>(c), 0.75);
    }
    table.reserve(kNegTableSize);
    double cumulative = 0.0;
    std::size_t filled = 0;
    for (std::size_t w = 0; w < counts.size(); ++w) {
        cumulative += std::pow(static_cast<double>(counts[w]), 0.75) / z;
        std::size_t upto = std::min(
            kNegTableSize,
            static_cast<std::size_t>(cumulative * kNegTableSize + 0.5));
        for (; filled < upto; ++filled) {
            table.push_back(static_cast<std::uint32_t>(w));
        }
    }
    while (table.size() < kNegTableSize) {
        table.push_back(static_cast<std::uint32_t>(counts.size() - 1));
    }
}

// One CBOW example: bow rows -> mean hidden, logistic loss against the
// center word plus sampled negatives, gradient pushed back onto every
// bow row (fastText-style, gradient not divided by |bow|).
double cbow_step(TrainerState& st, std::span<const std::size_t> bow,
                 std::uint32_t target, float lr, Rng& rng,
                 std::vector<float>& hidden, std::vector<float>& grad) {
    const int dim = st.cfg->dim;
    std::fill(hidden.begin(), hidden.end(), 0.0f);
    for (std::size_t row : bow) {
        const float* src = st.input + row * static_cast<std::size_t>(dim);
        for (int d = 0; d < dim; ++d) {
            hidden[static_cast<std::size_t>(d)] += src[d];
        }
    }
    const float inv = 1.0f / static_cast<float>(bow.size());
    for (float& x : hidden) {
        x *= inv;
    }
    std::fill(grad.begin(), grad.end(), 0.0f);

    double loss = 0.0;
    auto one_target = [&](std::uint32_t word, bool positive) {
        float* out_row = st.output + static_cast<std::size_t>(word) * dim;
        float dot = 0.0f;
        for (int d = 0; d < dim; ++d) {
            dot += hidden[static_cast<std::size_t>(d)] * out_row[d];
        }
        float score = sigmoid(dot);
        loss += positive ? -std::log(static_cast<double>(score))
                         : -std::log(1.0 - static_cast<double>(score));
        float alpha = lr * ((positive ? 1.0f : 0.0f) - score);
        for (int d = 0; d < dim; ++d) {
            grad[static_cast<std::size_t>(d)] += alpha * out_row[d];
            out_row[d] += alpha * hidden[static_cast<std::size_t>(d)];
        }
    };

    one_target(target, true);
    for (int i = 0; i < st.cfg->negatives; ++i) {
        std::uint32_t neg = target;
        for (int tries = 0; tries < 32 && neg == target; ++tries) {
            neg = st.negative_table[rng.below(
                static_cast<std::uint32_t>(st.negative_table.size()))];
        }
        if (neg == target) {
            continue;  // single-word vocabulary; nothing to contrast against
        }
        one_target(neg, false);
    }

    for (std::size_t row : bow) {
        float* dst = m.input_.data() + row * static_cast<std::size_t>(dim);
        for (int d = 0; d < dim; ++d) {
            dst[d] += grad[static_cast<std::size_t>(d)];
        }
    }
    return loss;
}

// Processes lines [begin, end) once. Returns (loss sum, example count).
std::pair<double, std::uint64_t> train_lines(TrainerState& st,
                                             std::size_t begin,
                                             std::size_t end,
                                             std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    const TrainingConfig& cfg = *st.cfg;
    std::vector<float> hidden(static_cast<std::size_t>(cfg.dim));
    std::vector<float> grad(static_cast<std::size_t>(cfg.dim));
    std::vector<std::size_t> bow;
    double loss = 0.0;
    std::uint64_t examples = 0;

    const std::uint64_t denom =
        st.total_tokens * static_cast<std::uint64_t>(cfg.epochs);
    for (std::size_t li = begin; li < end; ++li) {
        const auto& line = st.lines[li];
        const std::uint64_t done =
            st.processed_tokens.load(std::memory_order_relaxed);
        const float progress =
            denom ? static_cast<float>(static_cast<double>(done) / denom) : 0.0f;
        const float lr = cfg.learning_rate * std::max(0.0f, 1.0f - progress);

        for (std::size_t t = 0; t < line.size(); ++t) {
            const int b = 1 + static_cast<int>(
                                  rng.below(static_cast<std::uint32_t>(cfg.window)));
            bow.clear();
            const std::size_t lo =
                t >= static_cast<std::size_t>(b) ? t - static_cast<std::size_t>(b) : 0;
            const std::size_t hi =
                std::min(line.size(), t + static_cast<std::size_t>(b) + 1);
            for (std::size_t c = lo; c < hi; ++c) {
                if (c == t) {
                    continue;
                }
                const auto& rows = st.word_rows[line[c]];
                bow.insert(bow.end(), rows.begin(), rows.end());
            }
            if (bow.empty()) {
                continue;
            }
            loss += cbow_step(st, bow, line[t], lr, rng, hidden, grad);
            ++examples;
        }
        st.processed_tokens.fetch_add(line.size(), std::memory_order_relaxed);
    }
    return {loss, examples};
}

}  // namespace

EmbeddingModel train_cbow(const std::vector<std::vector<std::string>>& corpus,
                          const TrainingConfig& cfg) {
    cfg.validate();

    // Vocabulary: count, filter by min_word_count, order by count
    // descending (ties lexicographic) for stable ids.
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& line : corpus) {
        for (const std::string& tok : line) {
            if (!tok.empty()) {
                ++counts[tok];
            }
        }
    }
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    entries.reserve(counts.size());
    for (auto& [word, count] : counts) {
        if (count >= static_cast<std::uint64_t>(cfg.min_word_count)) {
            entries.emplace_back(word, count);
        }
    }
    if (entries.empty()) {
        throw EmptyCorpus("no words survive min_word_count filtering");
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });

    EmbeddingModel model;
    model.config_ = cfg;
    model.vocab_words_.reserve(entries.size());
    model.vocab_counts_.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        model.vocab_words_.push_back(entries[i].first);
        model.vocab_counts_.push_back(entries[i].second);
        model.vocab_ids_.emplace(entries[i].first,
                                 static_cast<std::uint32_t>(i));
    }

    const std::size_t vocab = model.vocab_words_.size();
    const std::size_t rows = vocab + static_cast<std::size_t>(cfg.bucket_count);
    const std::size_t dim = static_cast<std::size_t>(cfg.dim);
    model.input_.resize(rows * dim);
    model.output_.assign(vocab * dim, 0.0f);
    {
        Rng rng(cfg.seed);
        const float bound = 1.0f / static_cast<float>(cfg.dim);
        for (float& x : model.input_) {
            x = rng.uniform(-bound, bound);
        }
    }

    TrainerState st;
    st.cfg = &cfg;
    st.model = &model;
    st.word_rows.resize(vocab);
    for (std::size_t w = 0; w < vocab; ++w) {
        model.subword_rows(model.vocab_words_[w], st.word_rows[w]);
    }
    st.lines.reserve(corpus.size());
    for (const auto& line : corpus) {
        std::vector<std::uint32_t> ids;
        ids.reserve(line.size());
        for (const std::string& tok : line) {
            auto it = model.vocab_ids_.find(tok);
            if (it != model.vocab_ids_.end()) {
                ids.push_back(it->second);
            }
        }
        st.total_tokens += ids.size();
        st.lines.push_back(std::move(ids));
    }
    if (st.total_tokens == 0) {
        throw EmptyCorpus("corpus has no in-vocabulary tokens");
    }
    build_negative_table(model.vocab_counts_, st.negative_table);

    const int workers = std::min<int>(
        cfg.threads, std::max<std::size_t>(1, st.lines.size()));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss = 0.0;
        std::uint64_t examples = 0;
        if (workers <= 1) {
            auto [l, n] = train_lines(st, 0, st.lines.size(),
                                      cfg.seed + 0x9e3779b9ULL * (epoch + 1));
            loss = l;
            examples = n;
        } else {
            // Racy multi-worker mode: matrices are shared without locks,
            // so results are approximate and not covered by the
            // determinism contract.
            std::vector<std::thread> pool;
            std::vector<double> losses(static_cast<std::size_t>(workers), 0.0);
            std::vector<std::uint64_t> ns(static_cast<std::size_t>(workers), 0);
            const std::size_t chunk =
                (st.lines.size() + static_cast<std::size_t>(workers) - 1) /
                static_cast<std::size_t>(workers);
            for (int w = 0; w < workers; ++w) {
                const std::size_t b = static_cast<std::size_t>(w) * chunk;
                const std::size_t e = std::min(st.lines.size(), b + chunk);
                pool.emplace_back([&, w, b, e] {
                    auto [l, n] = train_lines(
                        st, b, e,
                        cfg.seed + 0x9e3779b9ULL * (epoch + 1) +
                            0x85ebca6bULL * static_cast<std::uint64_t>(w + 1));
                    losses[static_cast<std::size_t>(w)] = l;
                    ns[static_cast<std::size_t>(w)] = n;
                });
            }
            for (auto& t : pool) {
                t.join();
            }
            for (int w = 0; w < workers; ++w) {
                loss += losses[static_cast<std::size_t>(w)];
                examples += ns[static_cast<std::size_t>(w)];
            }
        }
        model.epoch_losses_.push_back(examples ? loss / static_cast<double>(examples)
                                               : 0.0);
    }
    return model;
}

void EmbeddingModel::save(const std::filesystem::path& path) const {
    BinaryWriter w(path);
    w.bytes(kModelMagic, sizeof(kModelMagic));
    w.u32(kModelVersion);
    w.f32(config_.learning_rate);
    w.i32(config_.dim);
    w.i32(config_.window);
    w.i32(config_.epochs);
    w.i32(config_.min_ngram);
    w.i32(config_.max_ngram);
    w.i32(config_.bucket_count);
    w.i32(config_.negatives);
    w.i32(config_.min_word_count);
    w.u64(config_.seed);
    w.i32(config_.threads);
    w.u64(vocab_words_.size());
    for (std::size_t i = 0; i < vocab_words_.size(); ++i) {
        w.str(vocab_words_[i]);
        w.u64(vocab_counts_[i]);
    }
    w.f32_span(input_);
    w.finish();
}

EmbeddingModel EmbeddingModel::load(const std::filesystem::path& path) {
    BinaryReader r(path);
    char magic[8];
    r.bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
        throw CorruptFile(path.string() + ": not a model file");
    }
    std::uint32_t version = r.u32();
    if (version != kModelVersion) {
        throw IncompatibleVersion(path.string() + ": model format version " +
                                  std::to_string(version) + ", expected " +
                                  std::to_string(kModelVersion));
    }
    EmbeddingModel m;
    m.config_.learning_rate = r.f32();
    m.config_.dim = r.i32();
    m.config_.window = r.i32();
    m.config_.epochs = r.i32();
    m.config_.min_ngram = r.i32();
    m.config_.max_ngram = r.i32();
    m.config_.bucket_count = r.i32();
    m.config_.negatives = r.i32();
    m.config_.min_word_count = r.i32();
    m.config_.seed = r.u64();
    m.config_.threads = r.i32();
    m.config_.validate();
    const std::uint64_t vocab = r.u64();
    m.vocab_words_.reserve(vocab);
    m.vocab_counts_.reserve(vocab);
    for (std::uint64_t i = 0; i < vocab; ++i) {
        m.vocab_words_.push_back(r.str());
        m.vocab_counts_.push_back(r.u64());
        m.vocab_ids_.emplace(m.vocab_words_.back(),
                             static_cast<std::uint32_t>(i));
    }
    const std::size_t rows =
        static_cast<std::size_t>(vocab) +
        static_cast<std::size_t>(m.config_.bucket_count);
    m.input_.resize(rows * static_cast<std::size_t>(m.config_.dim));
    r.f32_span(m.input_);
    return m;
}

std::vector<std::vector<std::string>> read_token_corpus(
    const std::filesystem::path& path) {
    std::string text = read_file(path);
    std::vector<std::vector<std::string>> corpus;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::vector<std::string> tokens;
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            tokens.push_back(tok);
        }
        corpus.push_back(std::move(tokens));
    }
    return corpus;
}

void write_token_corpus(const std::filesystem::path& path,
                        const std::vector<std::vector<std::string>>& corpus) {
    std::string out;
    for (const auto& line : corpus) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (i) {
                out.push_back(' ');
            }
            out += line[i];
        }
        out.push_back('\n');
    }
    write_file(path, out);
}

}  // namespace radar
