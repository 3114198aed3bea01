#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "radar/http.hpp"

namespace radar {

struct UnknownFormat final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientNormals final : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Label : std::uint8_t { normal = 0, anomaly = 1 };

struct LabeledRequest {
    std::string raw;
    Label label = Label::normal;
    std::string source;
};

enum class CorpusFormat { csic, atrdf, container };

CorpusFormat corpus_format_from_name(std::string_view name);  // throws UnknownFormat

struct LoadReport {
    std::size_t loaded = 0;
    std::size_t skipped = 0;  // malformed entries
    std::map<Endpoint, std::size_t> endpoint_histogram;
};

// Loads a labeled raw-HTTP corpus.
//
//   csic      directory with normal/ and anomalous/ subdirectories (or
//             *normal* / *anom* file names at the top level); each file
//             holds concatenated requests. Blocks are sliced at
//             request-line-looking lines, which covers both the
//             one-request-per-block and fully concatenated layouts.
//   atrdf     directory of one-request files plus a labels.tsv manifest
//             (filename<TAB>normal|anomaly).
//   container length-prefixed binary; a file is all-normal, a directory
//             uses normal/ and anomalous/ subdirectories.
//
// Malformed entries are skipped and counted in the report.
std::vector<LabeledRequest> load_corpus(const std::filesystem::path& path,
                                        CorpusFormat format,
                                        LoadReport* report = nullptr);

struct SplitSpec {
    enum class Mode {
        csic_half,      // half the normals train, rest + anomalies test
        atrdf_80_20,    // 80% of normals train
        fraction,       // train_fraction of normals train
    };
    Mode mode = Mode::fraction;
    double train_fraction = 0.8;
    std::uint64_t seed = 1;
};

struct CorpusSplit {
    std::vector<LabeledRequest> train;  // normals only
    std::vector<LabeledRequest> test;   // held-out normals + all anomalies
};

// Deterministic under seed; train and test keep the corpus order and
// partition it exactly. Throws InsufficientNormals when the train side
// would be empty.
CorpusSplit split(const std::vector<LabeledRequest>& corpus,
                  const SplitSpec& spec);

// Attack payload table: versioned tab-separated text,
// `class<TAB>payload` per line. Data, not code.
struct PayloadEntry {
    std::string attack_class;
    std::string payload;
};
std::vector<PayloadEntry> builtin_payload_table();
std::vector<PayloadEntry> load_payload_table(const std::filesystem::path& path);

// Deterministic synthetic corpus: per-endpoint templates with values
// drawn from small grammars; anomalies are the same templates with one
// parameter replaced by a payload-table entry.
std::vector<LabeledRequest> generate_synthetic(std::uint64_t seed,
                                               int endpoints,
                                               int normals_per_endpoint,
                                               int anomalies_per_endpoint);

}  // namespace radar
