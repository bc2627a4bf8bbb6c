#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tlgnn/error.hpp"

namespace tlgnn {

using WordId = std::int32_t;

// A tokenized document before vocabulary mapping.
struct RawDocument {
  int label_id = 0;
  std::vector<std::string> words;
};

struct Document {
  int label_id = 0;
  std::vector<WordId> tokens;
};

struct LabelSet {
  std::vector<std::string> names;
  std::unordered_map<std::string, int> ids;

  int size() const { return static_cast<int>(names.size()); }
  // Returns -1 for unknown labels.
  int find(std::string_view name) const;
  int intern(const std::string& name);
};

struct RawCorpus {
  std::vector<RawDocument> train;
  std::vector<RawDocument> test;
  LabelSet labels;
  // Documents whose token list was empty after preprocessing.
  std::size_t dropped_train = 0;
  std::size_t dropped_test = 0;
};

enum class DatasetFormat { kLabelTabText };

DatasetFormat parse_dataset_format(std::string_view name);

// Lowercases and splits on ASCII whitespace.
std::vector<std::string> tokenize(std::string_view text);

// Each nonempty line is `<label>\t<text>`. Labels receive dense ids in order of
// first appearance in the training file; a test label absent from training is an error.
RawCorpus load_dataset(const std::filesystem::path& train_path,
                       const std::filesystem::path& test_path,
                       DatasetFormat format = DatasetFormat::kLabelTabText);

// Parses a single dataset file against an existing label set. Unknown labels
// are interned when `allow_new_labels`, an error otherwise.
std::vector<RawDocument> load_documents(const std::filesystem::path& path, LabelSet& labels,
                                        bool allow_new_labels, std::size_t* dropped = nullptr);

class Vocabulary {
 public:
  static constexpr WordId kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  // Words must not contain kUnkToken; frequencies align with `words`.
  static Vocabulary from_words(const std::vector<std::string>& words,
                               const std::vector<std::uint64_t>& frequencies,
                               std::uint64_t unk_frequency, int min_freq);

  WordId lookup(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& word(WordId id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::uint64_t frequency(WordId id) const { return freqs_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(words_.size()); }
  int min_freq() const { return min_freq_; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> freqs_;
  std::unordered_map<std::string, WordId> index_;
  int min_freq_ = 1;
};

// Words seen fewer than `min_freq` times across `train_docs` collapse into UNK.
Vocabulary build_vocabulary(const std::vector<RawDocument>& train_docs, int min_freq);

Document encode_document(const RawDocument& doc, const Vocabulary& vocab);
std::vector<Document> encode_documents(const std::vector<RawDocument>& docs,
                                       const Vocabulary& vocab);

// Validation size is round(ratio * n). Both halves keep the input's relative order.
template <class Doc>
std::pair<std::vector<Doc>, std::vector<Doc>> split_validation(const std::vector<Doc>& train_docs,
                                                               double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("validation ratio must lie in (0, 1), got " + std::to_string(ratio));
  }
  if (train_docs.size() < 2) {
    throw DataError("validation split needs at least 2 training documents");
  }
  const std::size_t n = train_docs.size();
  const auto n_val = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<char> in_val(n, 0);
  for (std::size_t i = 0; i < n_val; ++i) in_val[order[i]] = 1;

  std::pair<std::vector<Doc>, std::vector<Doc>> out;
  out.first.reserve(n - n_val);
  out.second.reserve(n_val);
  for (std::size_t i = 0; i < n; ++i) {
    (in_val[i] ? out.second : out.first).push_back(train_docs[i]);
  }
  return out;
}

struct Corpus {
  std::vector<Document> train;
  std::vector<Document> val;
  std::vector<Document> test;
  LabelSet labels;
  Vocabulary vocab;
  std::size_t dropped_empty = 0;

  int num_classes() const { return labels.size(); }
};

struct PrepareOptions {
  int min_freq = 5;
  double val_ratio = 0.1;
  std::uint64_t split_seed = 1;
};

// load -> split -> vocabulary over the remaining training part -> encode.
Corpus prepare_corpus(RawCorpus raw, const PrepareOptions& options);
Corpus prepare_corpus(const std::filesystem::path& train_path,
                      const std::filesystem::path& test_path, const PrepareOptions& options);

// Text dump, one line per document: `<partition>\t<label>\t<space-joined words>`.
std::string serialize_corpus(const Corpus& corpus);

struct CorpusStats {
  std::size_t train = 0, val = 0, test = 0;
  int classes = 0;
  int vocab_size = 0;
  double avg_length = 0.0;  // over all partitions
  double unk_rate = 0.0;    // fraction of tokens mapped to UNK, all partitions
};

CorpusStats corpus_stats(const Corpus& corpus);

struct EmbeddingInit {
  int dim = 0;
  std::vector<float> matrix;  // vocab_size x dim, row-major
  double coverage = 0.0;      // fraction of non-UNK vocabulary rows found in the file
};

// GloVe text format (`word v1 ... vd`). Rows for words absent from the file, UNK
// included, are drawn uniformly from [-0.01, 0.01].
EmbeddingInit load_pretrained_embeddings(const std::filesystem::path& path,
                                         const Vocabulary& vocab, int dim, std::uint64_t seed);

EmbeddingInit random_embeddings(const Vocabulary& vocab, int dim, std::uint64_t seed);

}  // namespace tlgnn
