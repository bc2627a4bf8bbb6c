#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tlgnn/corpus.hpp"

namespace tlgnn {

// Directed word pair: the message travels from `source` to `target`.
struct EdgePair {
  WordId source = 0;
  WordId target = 0;

  friend bool operator==(const EdgePair&, const EdgePair&) = default;
  friend auto operator<=>(const EdgePair&, const EdgePair&) = default;
};

inline std::uint64_t pack_pair(WordId source, WordId target) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(source)) << 32) |
         static_cast<std::uint32_t>(target);
}

inline EdgePair unpack_pair(std::uint64_t key) {
  return {static_cast<WordId>(key >> 32), static_cast<WordId>(key & 0xffffffffu)};
}

// Occurrence counts of (word at neighbor position, word at center position)
// within a symmetric window p, self pairs included.
class EdgeStats {
 public:
  void add(WordId source, WordId target, std::uint64_t count = 1);
  void merge(const EdgeStats& other);

  std::uint64_t count(WordId source, WordId target) const;
  std::uint64_t total() const { return total_; }
  std::size_t size() const { return counts_.size(); }

  // Sorted by (source, target).
  std::vector<std::pair<EdgePair, std::uint64_t>> sorted() const;

 private:
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

EdgeStats count_edge_pairs(const std::vector<Document>& train_docs, int window);

// Maps frequent directed pairs to dedicated parameter slots. Everything else,
// including pairs never seen in training, resolves to the shared public slot 0.
class EdgeVocabulary {
 public:
  static constexpr std::uint32_t kPublicIndex = 0;

  EdgeVocabulary() = default;

  // Named pairs receive indices 1..E in (source, target) order.
  static EdgeVocabulary from_pairs(const std::vector<EdgePair>& named, std::uint32_t min_count,
                                   int window);

  std::uint32_t resolve(WordId source, WordId target) const;
  std::optional<std::uint32_t> find(WordId source, WordId target) const;

  std::size_t named_count() const { return named_.size(); }
  std::size_t parameter_count() const { return named_.size() + 1; }
  std::uint32_t min_count() const { return min_count_; }
  int window() const { return window_; }
  // named()[i] holds index i + 1.
  const std::vector<EdgePair>& named() const { return named_; }

 private:
  std::vector<EdgePair> named_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
  std::uint32_t min_count_ = 1;
  int window_ = 0;
};

EdgeVocabulary build_edge_vocabulary(const EdgeStats& stats, std::uint32_t min_count, int window);

// Positive pointwise mutual information between words co-occurring inside a
// sliding window, the fixed edge weighting used for the corpus-graph comparison
// and the fixed-edge ablation. Symmetric; self pairs are never stored.
class PmiTable {
 public:
  double value(WordId a, WordId b) const;  // 0 when absent
  bool contains(WordId a, WordId b) const;
  void set(WordId a, WordId b, double pmi);
  void set_window_stats(int window, std::uint64_t num_windows) {
    window_ = window;
    num_windows_ = num_windows;
  }

  std::size_t size() const { return values_.size(); }  // unordered pairs
  std::uint64_t num_windows() const { return num_windows_; }
  int window() const { return window_; }

  // Unordered pairs with a < b, sorted.
  std::vector<std::pair<EdgePair, double>> sorted() const;

 private:
  friend PmiTable compute_pmi_table(const std::vector<Document>&, int);
  std::unordered_map<std::uint64_t, double> values_;
  std::uint64_t num_windows_ = 0;
  int window_ = 0;
};

PmiTable compute_pmi_table(const std::vector<Document>& docs, int window);

}  // namespace tlgnn
