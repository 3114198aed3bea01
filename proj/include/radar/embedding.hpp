#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace radar {

struct EmptyCorpus final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingConfig {
    float learning_rate = 0.05f;
    int dim = 100;
    int window = 5;
    int epochs = 5;
    int min_ngram = 3;
    int max_ngram = 6;
    int bucket_count = 2'000'000;
    int negatives = 5;
    int min_word_count = 5;
    std::uint64_t seed = 1;
    int threads = 1;  // >1 enables racy multi-worker updates (non-deterministic)

    void validate() const;  // throws std::invalid_argument
};

// All substrings of length minn..maxn of the boundary-wrapped word
// ("<word>"), ordered by start position then length, plus the full
// wrapped form when the substring pass did not already produce it.
std::vector<std::string> char_ngrams(std::string_view word, int minn, int maxn);

// Stable 32-bit FNV-1a reduced modulo bucket_count.
std::uint32_t hash_ngram(std::string_view ngram, std::uint32_t bucket_count);

// Subword CBOW model. Input rows 0..vocab-1 are word vectors, rows
// vocab..vocab+buckets-1 are hashed n-gram vectors. Inference never
// fails on out-of-vocabulary words: they fall back to the mean of their
// n-gram bucket vectors.
class EmbeddingModel {
  public:
    int dim() const { return config_.dim; }
    const TrainingConfig& config() const { return config_; }
    std::size_t vocab_size() const { return vocab_words_.size(); }
    bool has_word(std::string_view word) const;
    std::uint64_t word_count(std::string_view word) const;

    std::vector<float> word_vector(std::string_view word) const;
    std::vector<float> sentence_vector(std::span<const std::string> tokens) const;

    // Mean loss per epoch, recorded during training.
    const std::vector<double>& epoch_losses() const { return epoch_losses_; }

    void save(const std::filesystem::path& path) const;
    static EmbeddingModel load(const std::filesystem::path& path);

  private:
    friend EmbeddingModel train_cbow(
        const std::vector<std::vector<std::string>>& corpus,
        const TrainingConfig& cfg);

    void accumulate_row(std::size_t row, std::vector<float>& acc) const;
    void subword_rows(std::string_view word, std::vector<std::size_t>& rows) const;

    TrainingConfig config_;
    std::vector<std::string> vocab_words_;
    std::vector<std::uint64_t> vocab_counts_;
    std::unordered_map<std::string, std::uint32_t> vocab_ids_;
    std::vector<float> input_;   // (vocab + buckets) x dim, row-major
    std::vector<float> output_;  // vocab x dim, training only (not persisted)
    std::vector<double> epoch_losses_;
};

EmbeddingModel train_cbow(const std::vector<std::vector<std::string>>& corpus,
                          const TrainingConfig& cfg);

// Corpus file: one canonical request per line, tokens space-separated.
std::vector<std::vector<std::string>> read_token_corpus(
    const std::filesystem::path& path);
void write_token_corpus(const std::filesystem::path& path,
                        const std::vector<std::vector<std::string>>& corpus);

}  // namespace radar
