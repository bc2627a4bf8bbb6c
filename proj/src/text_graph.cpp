#include "tlgnn/text_graph.hpp"

#include <algorithm>
#include <sstream>

namespace tlgnn {

TextGraph build_text_graph(const Document& doc, int window, const EdgeVocabulary& edges,
                           const PmiTable* pmi) {
  if (window < 1) throw ConfigError("window p must be >= 1");
  if (doc.tokens.empty()) throw DataError("cannot build a graph for an empty document");

  TextGraph g;
  g.node_words = doc.tokens;
  g.label_id = doc.label_id;
  const auto l = static_cast<std::ptrdiff_t>(doc.tokens.size());
  g.offsets.reserve(static_cast<std::size_t>(l) + 1);
  g.offsets.push_back(0);
  for (std::ptrdiff_t i = 0; i < l; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - window);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(l - 1, i + window);
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      g.neighbors.push_back(static_cast<std::uint32_t>(j));
      g.edge_refs.push_back(edges.resolve(doc.tokens[j], doc.tokens[i]));
      if (pmi) g.fixed_weights.push_back(static_cast<float>(pmi->value(doc.tokens[j], doc.tokens[i])));
    }
    g.offsets.push_back(static_cast<std::uint32_t>(g.neighbors.size()));
  }
  return g;
}

std::vector<TextGraph> build_text_graphs(const std::vector<Document>& docs, int window,
                                         const EdgeVocabulary& edges, const PmiTable* pmi) {
  std::vector<TextGraph> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(build_text_graph(d, window, edges, pmi));
  return out;
}

std::string graph_adjacency_tsv(const TextGraph& graph, const Vocabulary& vocab) {
  std::ostringstream out;
  for (std::size_t n = 0; n < graph.num_nodes(); ++n) {
    for (std::uint32_t s = graph.offsets[n]; s < graph.offsets[n + 1]; ++s) {
      const std::uint32_t a = graph.neighbors[s];
      out << n << '\t' << vocab.word(graph.node_words[n]) << '\t' << a << '\t'
          << vocab.word(graph.node_words[a]) << '\t' << graph.edge_refs[s] << '\n';
    }
  }
  return out.str();
}

}  // namespace tlgnn
