#pragma once

// Reference evaluators that deliberately avoid the library's data structures
// (CSR neighbor lists, cached argmax, hash-map counting). Each works straight
// from token positions so it can check the optimized paths independently.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "tlgnn/corpus.hpp"
#include "tlgnn/edge_vocab.hpp"
#include "tlgnn/model.hpp"

namespace tlgnn::oracle {

// Every ordered (neighbor word, center word) pair over all (i, j) with |i - j| <= p.
inline std::map<std::pair<WordId, WordId>, std::uint64_t> edge_counts(
    const std::vector<Document>& docs, int p) {
  std::map<std::pair<WordId, WordId>, std::uint64_t> out;
  for (const auto& d : docs) {
    const int l = static_cast<int>(d.tokens.size());
    for (int i = 0; i < l; ++i) {
      for (int j = 0; j < l; ++j) {
        if (std::abs(i - j) <= p) ++out[{d.tokens[j], d.tokens[i]}];
      }
    }
  }
  return out;
}

// One or more message-passing rounds evaluated by scanning every position of
// the document for each (node, dimension). Edge weights come from `weight(a, n)`.
template <class WeightFn>
std::vector<std::vector<double>> message_pass(const Document& doc, int p, const ParamsF64& params,
                                              Reduction reduction, int steps, WeightFn weight) {
  const int l = static_cast<int>(doc.tokens.size());
  const int d = params.shape.dim;
  std::vector<std::vector<double>> reps(static_cast<std::size_t>(l));
  for (int i = 0; i < l; ++i) {
    auto row = params.embedding_row(doc.tokens[static_cast<std::size_t>(i)]);
    reps[static_cast<std::size_t>(i)].assign(row.begin(), row.end());
  }
  for (int step = 0; step < steps; ++step) {
    std::vector<std::vector<double>> next(static_cast<std::size_t>(l), std::vector<double>(static_cast<std::size_t>(d)));
    for (int n = 0; n < l; ++n) {
      const WordId wn = doc.tokens[static_cast<std::size_t>(n)];
      const double eta = params.gates[static_cast<std::size_t>(wn)];
      for (int t = 0; t < d; ++t) {
        std::vector<double> products;
        for (int a = 0; a < l; ++a) {
          if (std::abs(a - n) > p) continue;
          const WordId wa = doc.tokens[static_cast<std::size_t>(a)];
          products.push_back(weight(wa, wn) * reps[static_cast<std::size_t>(a)][static_cast<std::size_t>(t)]);
        }
        double m = 0.0;
        if (reduction == Reduction::kMax) {
          m = *std::max_element(products.begin(), products.end());
        } else {
          for (double x : products) m += x;
          m *= 1.0 / static_cast<double>(products.size());
        }
        next[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)] =
            (1.0 - eta) * m + eta * reps[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)];
      }
    }
    reps = std::move(next);
  }
  return reps;
}

struct PmiOracle {
  std::uint64_t windows = 0;
  std::map<std::pair<WordId, WordId>, double> positive;  // a < b
};

// Materializes every window as a std::set and counts by direct enumeration.
inline PmiOracle pmi(const std::vector<Document>& docs, int window) {
  std::vector<std::set<WordId>> windows;
  for (const auto& d : docs) {
    const std::size_t l = d.tokens.size();
    const std::size_t w = std::min<std::size_t>(l, static_cast<std::size_t>(window));
    for (std::size_t s = 0; s + w <= l; ++s) {
      windows.emplace_back(d.tokens.begin() + static_cast<std::ptrdiff_t>(s),
                           d.tokens.begin() + static_cast<std::ptrdiff_t>(s + w));
    }
  }
  std::set<WordId> vocab;
  for (const auto& w : windows) vocab.insert(w.begin(), w.end());

  PmiOracle out;
  out.windows = windows.size();
  const double n = static_cast<double>(windows.size());
  for (WordId a : vocab) {
    for (WordId b : vocab) {
      if (!(a < b)) continue;
      std::uint64_t na = 0, nb = 0, nab = 0;
      for (const auto& w : windows) {
        const bool ha = w.count(a) != 0;
        const bool hb = w.count(b) != 0;
        na += ha;
        nb += hb;
        nab += ha && hb;
      }
      if (nab == 0) continue;
      const double value = std::log(static_cast<double>(nab) * n /
                                    (static_cast<double>(na) * static_cast<double>(nb)));
      if (value > 0.0) out.positive[{a, b}] = value;
    }
  }
  return out;
}

}  // namespace tlgnn::oracle
