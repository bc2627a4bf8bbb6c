#include "tlgnn/edge_vocab.hpp"

#include <algorithm>
#include <cmath>

namespace tlgnn {

void EdgeStats::add(WordId source, WordId target, std::uint64_t count) {
  counts_[pack_pair(source, target)] += count;
  total_ += count;
}

void EdgeStats::merge(const EdgeStats& other) {
  for (const auto& [key, c] : other.counts_) counts_[key] += c;
  total_ += other.total_;
}

std::uint64_t EdgeStats::count(WordId source, WordId target) const {
  auto it = counts_.find(pack_pair(source, target));
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::pair<EdgePair, std::uint64_t>> EdgeStats::sorted() const {
  std::vector<std::pair<EdgePair, std::uint64_t>> out;
  out.reserve(counts_.size());
  for (const auto& [key, c] : counts_) out.emplace_back(unpack_pair(key), c);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

EdgeStats count_edge_pairs(const std::vector<Document>& train_docs, int window) {
  if (window < 1) throw ConfigError("window p must be >= 1");
  EdgeStats stats;
  for (const auto& doc : train_docs) {
    const auto l = static_cast<std::ptrdiff_t>(doc.tokens.size());
    for (std::ptrdiff_t i = 0; i < l; ++i) {
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(l - 1, i + window);
      for (std::ptrdiff_t j = lo; j <= hi; ++j) stats.add(doc.tokens[j], doc.tokens[i]);
    }
  }
  return stats;
}

EdgeVocabulary EdgeVocabulary::from_pairs(const std::vector<EdgePair>& named,
                                          std::uint32_t min_count, int window) {
  EdgeVocabulary vocab;
  vocab.min_count_ = min_count;
  vocab.window_ = window;
  vocab.named_ = named;
  vocab.index_.reserve(named.size());
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto [it, inserted] = vocab.index_.emplace(pack_pair(named[i].source, named[i].target),
                                               static_cast<std::uint32_t>(i + 1));
    if (!inserted) throw DataError("duplicate edge pair in edge vocabulary");
  }
  return vocab;
}

std::uint32_t EdgeVocabulary::resolve(WordId source, WordId target) const {
  auto it = index_.find(pack_pair(source, target));
  return it == index_.end() ? kPublicIndex : it->second;
}

std::optional<std::uint32_t> EdgeVocabulary::find(WordId source, WordId target) const {
  auto it = index_.find(pack_pair(source, target));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EdgeVocabulary build_edge_vocabulary(const EdgeStats& stats, std::uint32_t min_count, int window) {
  if (min_count < 1) throw ConfigError("edge threshold k must be >= 1");
  std::vector<EdgePair> named;
  for (const auto& [pair, c] : stats.sorted()) {
    if (c >= min_count) named.push_back(pair);
  }
  return EdgeVocabulary::from_pairs(named, min_count, window);
}

namespace {

std::uint64_t unordered_key(WordId a, WordId b) {
  return a < b ? pack_pair(a, b) : pack_pair(b, a);
}

}  // namespace

double PmiTable::value(WordId a, WordId b) const {
  if (a == b) return 0.0;
  auto it = values_.find(unordered_key(a, b));
  return it == values_.end() ? 0.0 : it->second;
}

bool PmiTable::contains(WordId a, WordId b) const {
  return a != b && values_.count(unordered_key(a, b)) != 0;
}

void PmiTable::set(WordId a, WordId b, double pmi) {
  if (a == b) throw DataError("PMI table does not hold self pairs");
  values_[unordered_key(a, b)] = pmi;
}

std::vector<std::pair<EdgePair, double>> PmiTable::sorted() const {
  std::vector<std::pair<EdgePair, double>> out;
  out.reserve(values_.size());
  for (const auto& [key, v] : values_) out.emplace_back(unpack_pair(key), v);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

PmiTable compute_pmi_table(const std::vector<Document>& docs, int window) {
  if (window < 2) throw ConfigError("PMI window must be >= 2");
  std::unordered_map<WordId, std::uint64_t> word_windows;
  std::unordered_map<std::uint64_t, std::uint64_t> pair_windows;
  std::uint64_t num_windows = 0;

  std::vector<WordId> uniq;
  for (const auto& doc : docs) {
    const std::size_t l = doc.tokens.size();
    if (l == 0) continue;
    const std::size_t w = std::min<std::size_t>(l, static_cast<std::size_t>(window));
    for (std::size_t start = 0; start + w <= l; ++start) {
      uniq.assign(doc.tokens.begin() + static_cast<std::ptrdiff_t>(start),
                  doc.tokens.begin() + static_cast<std::ptrdiff_t>(start + w));
      std::sort(uniq.begin(), uniq.end());
      uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
      ++num_windows;
      for (std::size_t a = 0; a < uniq.size(); ++a) {
        ++word_windows[uniq[a]];
        for (std::size_t b = a + 1; b < uniq.size(); ++b) ++pair_windows[pack_pair(uniq[a], uniq[b])];
      }
    }
  }

  PmiTable table;
  table.num_windows_ = num_windows;
  table.window_ = window;
  for (const auto& [key, nij] : pair_windows) {
    const EdgePair p = unpack_pair(key);
    const double ni = static_cast<double>(word_windows[p.source]);
    const double nj = static_cast<double>(word_windows[p.target]);
    const double pmi = std::log(static_cast<double>(nij) * static_cast<double>(num_windows) / (ni * nj));
    if (!(pmi > 0.0)) continue;
    table.values_.emplace(key, pmi);
  }
  return table;
}

}  // namespace tlgnn
