#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tlgnn/corpus.hpp"
#include "tlgnn/edge_vocab.hpp"

namespace tlgnn {

// One node per token position. Neighbors of node i are the positions
// j with |i - j| <= p inside the document, in ascending order, self included.
// Neighbor lists are stored CSR-style; a "slot" indexes into `neighbors`.
struct TextGraph {
  std::vector<WordId> node_words;
  std::vector<std::uint32_t> offsets;    // num_nodes() + 1
  std::vector<std::uint32_t> neighbors;  // node positions
  std::vector<std::uint32_t> edge_refs;  // per slot: edge parameter index
  std::vector<float> fixed_weights;      // per slot, only for fixed-PMI graphs
  int label_id = -1;

  std::size_t num_nodes() const { return node_words.size(); }
  std::size_t num_slots() const { return neighbors.size(); }
  bool has_fixed_weights() const { return !fixed_weights.empty(); }

  std::span<const std::uint32_t> neighbors_of(std::size_t node) const {
    return {neighbors.data() + offsets[node], neighbors.data() + offsets[node + 1]};
  }
};

// Edge (neighbor word -> center word) resolves through `edges`; when `pmi` is
// given, the slot's fixed weight is PMI(neighbor, center), 0 for absent pairs.
TextGraph build_text_graph(const Document& doc, int window, const EdgeVocabulary& edges,
                           const PmiTable* pmi = nullptr);

std::vector<TextGraph> build_text_graphs(const std::vector<Document>& docs, int window,
                                         const EdgeVocabulary& edges,
                                         const PmiTable* pmi = nullptr);

// Debug dump: `node\tword\tneighbor\tneighbor_word\tedge_ref`.
std::string graph_adjacency_tsv(const TextGraph& graph, const Vocabulary& vocab);

}  // namespace tlgnn
