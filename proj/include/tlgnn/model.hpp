#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tlgnn/corpus.hpp"
#include "tlgnn/text_graph.hpp"

namespace tlgnn {

enum class Reduction { kMax, kMean };

// Where the ReLU sits around the classification map. kReluBeforeDense computes
// softmax(W·dropout(relu(sum)) + b); kReluAfterDense computes
// softmax(relu(W·dropout(sum) + b)).
enum class ReadoutOrder { kReluBeforeDense, kReluAfterDense };

std::string_view to_string(Reduction r);
std::string_view to_string(ReadoutOrder r);
Reduction parse_reduction(std::string_view name);
ReadoutOrder parse_readout_order(std::string_view name);

struct ModelConfig {
  Reduction reduction = Reduction::kMax;
  double dropout_keep = 0.5;
  // When false the graph's fixed (PMI) slot weights replace the edge parameters.
  bool edges_trainable = true;
  int mpm_steps = 1;
  ReadoutOrder readout = ReadoutOrder::kReluBeforeDense;

  void validate() const;
};

struct ParamShape {
  int vocab_size = 0;
  int dim = 0;
  int num_edges = 0;  // named edges + public
  int num_classes = 0;

  friend bool operator==(const ParamShape&, const ParamShape&) = default;
};

// Globally shared trainables. dense_w is dim x num_classes, row-major.
template <class T>
struct BasicParams {
  ParamShape shape;
  std::vector<T> embeddings;
  std::vector<T> edge_weights;
  std::vector<T> gates;
  std::vector<T> dense_w;
  std::vector<T> dense_b;

  std::span<T> embedding_row(WordId w) {
    return {embeddings.data() + static_cast<std::size_t>(w) * static_cast<std::size_t>(shape.dim),
            static_cast<std::size_t>(shape.dim)};
  }
  std::span<const T> embedding_row(WordId w) const {
    return {embeddings.data() + static_cast<std::size_t>(w) * static_cast<std::size_t>(shape.dim),
            static_cast<std::size_t>(shape.dim)};
  }

  template <class U>
  BasicParams<U> cast() const {
    BasicParams<U> out;
    out.shape = shape;
    out.embeddings.assign(embeddings.begin(), embeddings.end());
    out.edge_weights.assign(edge_weights.begin(), edge_weights.end());
    out.gates.assign(gates.begin(), gates.end());
    out.dense_w.assign(dense_w.begin(), dense_w.end());
    out.dense_b.assign(dense_b.begin(), dense_b.end());
    return out;
  }

  void check_consistent() const;
  bool all_finite() const;
};

using Params = BasicParams<float>;
using ParamsF64 = BasicParams<double>;

// Embeddings from `init` when given, else uniform [-0.01, 0.01]; edges 1.0;
// gates 0.5; dense_w Glorot uniform; dense_b zero.
Params initialize_params(const ParamShape& shape, const EmbeddingInit* init, std::uint64_t seed);

template <class T>
struct ForwardCache {
  std::size_t num_nodes = 0;
  std::size_t dim = 0;
  std::vector<T> slot_weights;                    // per slot
  std::vector<std::vector<T>> step_inputs;        // per step: num_nodes x dim
  std::vector<std::vector<T>> messages;           // per step: num_nodes x dim
  std::vector<std::vector<std::uint32_t>> argmax; // per step: winning slot, max reduction only
  std::vector<T> node_out;                        // num_nodes x dim
  std::vector<T> pooled;                          // sum over nodes
  std::vector<T> dropout_scale;                   // 0 or 1/keep per dim; 1 in eval mode
  std::vector<T> hidden;                          // input of the dense map
  std::vector<T> dense_out;                       // hidden·W + b
  std::vector<T> logits;
  std::vector<T> probs;
};

// Runs config.mpm_steps rounds of max (or mean) aggregation followed by the
// gated update r' = (1 - eta) M + eta r. Result in cache.node_out.
template <class T>
void message_pass(const TextGraph& graph, const BasicParams<T>& params, const ModelConfig& config,
                  ForwardCache<T>& cache);

// Sum readout and classification; `rng` is required in train mode when
// dropout_keep < 1. Consumes cache.node_out.
template <class T>
void readout(const BasicParams<T>& params, const ModelConfig& config, bool train_mode,
             std::mt19937_64* rng, ForwardCache<T>& cache);

template <class T>
void softmax(std::span<const T> logits, std::span<T> out);

// -log softmax(logits)[label] via log-sum-exp.
template <class T>
T cross_entropy(std::span<const T> logits, int label);

// message_pass + readout; returns the loss against graph.label_id (0 if unlabeled).
template <class T>
T forward(const TextGraph& graph, const BasicParams<T>& params, const ModelConfig& config,
          bool train_mode, std::mt19937_64* rng, ForwardCache<T>& cache);

// Index of the largest entry, lowest index on ties.
template <class T>
int argmax_class(std::span<const T> values);

struct Capacity {
  std::uint64_t edge_param_count = 0;
  std::uint64_t total_param_count = 0;
  std::uint64_t bytes_at_4b = 0;
};

Capacity count_capacity(const ParamShape& shape);

template <class T>
Capacity count_capacity(const BasicParams<T>& params) {
  return count_capacity(params.shape);
}

}  // namespace tlgnn
