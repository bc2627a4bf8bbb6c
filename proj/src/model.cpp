#include "tlgnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tlgnn {

std::string_view to_string(Reduction r) { return r == Reduction::kMax ? "max" : "mean"; }

std::string_view to_string(ReadoutOrder r) {
  return r == ReadoutOrder::kReluBeforeDense ? "relu-dense" : "dense-relu";
}

Reduction parse_reduction(std::string_view name) {
  if (name == "max") return Reduction::kMax;
  if (name == "mean") return Reduction::kMean;
  throw ConfigError("unknown reduction '" + std::string(name) + "' (expected max|mean)");
}

ReadoutOrder parse_readout_order(std::string_view name) {
  if (name == "relu-dense") return ReadoutOrder::kReluBeforeDense;
  if (name == "dense-relu") return ReadoutOrder::kReluAfterDense;
  throw ConfigError("unknown readout order '" + std::string(name) +
                    "' (expected relu-dense|dense-relu)");
}

void ModelConfig::validate() const {
  if (!(dropout_keep > 0.0 && dropout_keep <= 1.0)) {
    throw ConfigError("dropout keep probability must lie in (0, 1]");
  }
  if (mpm_steps < 1) throw ConfigError("mpm_steps must be >= 1");
}

template <class T>
void BasicParams<T>::check_consistent() const {
  const auto v = static_cast<std::size_t>(shape.vocab_size);
  const auto d = static_cast<std::size_t>(shape.dim);
  const auto c = static_cast<std::size_t>(shape.num_classes);
  if (embeddings.size() != v * d || edge_weights.size() != static_cast<std::size_t>(shape.num_edges) ||
      gates.size() != v || dense_w.size() != d * c || dense_b.size() != c) {
    throw DataError("parameter arrays do not match their declared shape");
  }
}

template <class T>
bool BasicParams<T>::all_finite() const {
  auto finite = [](const std::vector<T>& xs) {
    return std::all_of(xs.begin(), xs.end(), [](T x) { return std::isfinite(x); });
  };
  return finite(embeddings) && finite(edge_weights) && finite(gates) && finite(dense_w) &&
         finite(dense_b);
}

template struct BasicParams<float>;
template struct BasicParams<double>;

Params initialize_params(const ParamShape& shape, const EmbeddingInit* init, std::uint64_t seed) {
  if (shape.dim < 1) throw ConfigError("embedding dimension must be >= 1");
  if (shape.num_classes < 2) throw ConfigError("need at least 2 classes");
  if (shape.vocab_size < 1 || shape.num_edges < 1) throw ConfigError("empty vocabulary");

  const auto v = static_cast<std::size_t>(shape.vocab_size);
  const auto d = static_cast<std::size_t>(shape.dim);
  const auto c = static_cast<std::size_t>(shape.num_classes);

  Params p;
  p.shape = shape;
  std::mt19937_64 rng(seed);
  if (init) {
    if (init->dim != shape.dim || init->matrix.size() != v * d) {
      throw DataError("embedding init is " + std::to_string(init->matrix.size() / std::max(1, init->dim)) +
                      "x" + std::to_string(init->dim) + ", expected " + std::to_string(v) + "x" +
                      std::to_string(d));
    }
    p.embeddings = init->matrix;
  } else {
    std::uniform_real_distribution<float> uni(-0.01f, 0.01f);
    p.embeddings.resize(v * d);
    for (float& x : p.embeddings) x = uni(rng);
  }
  p.edge_weights.assign(static_cast<std::size_t>(shape.num_edges), 1.0f);
  p.gates.assign(v, 0.5f);
  const float bound = static_cast<float>(std::sqrt(6.0 / static_cast<double>(d + c)));
  std::uniform_real_distribution<float> glorot(-bound, bound);
  p.dense_w.resize(d * c);
  for (float& x : p.dense_w) x = glorot(rng);
  p.dense_b.assign(c, 0.0f);
  return p;
}

template <class T>
void message_pass(const TextGraph& graph, const BasicParams<T>& params, const ModelConfig& config,
                  ForwardCache<T>& cache) {
  const std::size_t l = graph.num_nodes();
  const auto d = static_cast<std::size_t>(params.shape.dim);
  const int steps = config.mpm_steps;
  cache.num_nodes = l;
  cache.dim = d;

  cache.slot_weights.resize(graph.num_slots());
  if (config.edges_trainable) {
    for (std::size_t s = 0; s < graph.num_slots(); ++s) {
      cache.slot_weights[s] = params.edge_weights[graph.edge_refs[s]];
    }
  } else {
    if (!graph.has_fixed_weights()) {
      throw ConfigError("fixed-edge mode needs graphs built with a PMI table");
    }
    for (std::size_t s = 0; s < graph.num_slots(); ++s) {
      cache.slot_weights[s] = static_cast<T>(graph.fixed_weights[s]);
    }
  }

  cache.step_inputs.resize(static_cast<std::size_t>(steps));
  cache.messages.resize(static_cast<std::size_t>(steps));
  cache.argmax.resize(config.reduction == Reduction::kMax ? static_cast<std::size_t>(steps) : 0);

  std::vector<T>& first = cache.step_inputs[0];
  first.resize(l * d);
  for (std::size_t n = 0; n < l; ++n) {
    auto row = params.embedding_row(graph.node_words[n]);
    std::copy(row.begin(), row.end(), first.begin() + static_cast<std::ptrdiff_t>(n * d));
  }

  for (int step = 0; step < steps; ++step) {
    const std::vector<T>& in = cache.step_inputs[static_cast<std::size_t>(step)];
    std::vector<T>& msg = cache.messages[static_cast<std::size_t>(step)];
    msg.assign(l * d, T(0));
    std::vector<T>& out =
        step + 1 < steps ? cache.step_inputs[static_cast<std::size_t>(step + 1)] : cache.node_out;
    out.resize(l * d);
    if (config.reduction == Reduction::kMax) cache.argmax[static_cast<std::size_t>(step)].resize(l * d);

    for (std::size_t n = 0; n < l; ++n) {
      T* m = msg.data() + n * d;
      const std::uint32_t begin = graph.offsets[n];
      const std::uint32_t end = graph.offsets[n + 1];
      if (config.reduction == Reduction::kMax) {
        std::uint32_t* arg = cache.argmax[static_cast<std::size_t>(step)].data() + n * d;
        {
          const T w = cache.slot_weights[begin];
          const T* r = in.data() + graph.neighbors[begin] * d;
          for (std::size_t t = 0; t < d; ++t) {
            m[t] = w * r[t];
            arg[t] = begin;
          }
        }
        for (std::uint32_t s = begin + 1; s < end; ++s) {
          const T w = cache.slot_weights[s];
          const T* r = in.data() + graph.neighbors[s] * d;
          for (std::size_t t = 0; t < d; ++t) {
            const T v = w * r[t];
            if (v > m[t]) {
              m[t] = v;
              arg[t] = s;
            }
          }
        }
      } else {
        for (std::uint32_t s = begin; s < end; ++s) {
          const T w = cache.slot_weights[s];
          const T* r = in.data() + graph.neighbors[s] * d;
          for (std::size_t t = 0; t < d; ++t) m[t] += w * r[t];
        }
        const T inv = T(1) / static_cast<T>(end - begin);
        for (std::size_t t = 0; t < d; ++t) m[t] *= inv;
      }

      const T eta = params.gates[static_cast<std::size_t>(graph.node_words[n])];
      const T* r = in.data() + n * d;
      T* o = out.data() + n * d;
      for (std::size_t t = 0; t < d; ++t) o[t] = (T(1) - eta) * m[t] + eta * r[t];
    }
  }
}

template <class T>
void softmax(std::span<const T> logits, std::span<T> out) {
  const T mx = *std::max_element(logits.begin(), logits.end());
  T z = 0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - mx);
    z += out[k];
  }
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] /= z;
}

template <class T>
T cross_entropy(std::span<const T> logits, int label) {
  const T mx = *std::max_element(logits.begin(), logits.end());
  T z = 0;
  for (T x : logits) z += std::exp(x - mx);
  return mx + std::log(z) - logits[static_cast<std::size_t>(label)];
}

template <class T>
void readout(const BasicParams<T>& params, const ModelConfig& config, bool train_mode,
             std::mt19937_64* rng, ForwardCache<T>& cache) {
  const std::size_t l = cache.num_nodes;
  const std::size_t d = cache.dim;
  const auto c = static_cast<std::size_t>(params.shape.num_classes);
  if (l == 0) throw DataError("readout over an empty graph");

  cache.pooled.assign(d, T(0));
  for (std::size_t n = 0; n < l; ++n) {
    const T* r = cache.node_out.data() + n * d;
    for (std::size_t t = 0; t < d; ++t) cache.pooled[t] += r[t];
  }

  cache.dropout_scale.assign(d, T(1));
  if (train_mode && config.dropout_keep < 1.0) {
    if (!rng) throw ConfigError("dropout in train mode needs a random generator");
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const T inv_keep = static_cast<T>(1.0 / config.dropout_keep);
    for (std::size_t t = 0; t < d; ++t) {
      cache.dropout_scale[t] = uni(*rng) < config.dropout_keep ? inv_keep : T(0);
    }
  }

  cache.hidden.resize(d);
  const bool relu_first = config.readout == ReadoutOrder::kReluBeforeDense;
  for (std::size_t t = 0; t < d; ++t) {
    const T v = relu_first ? std::max(cache.pooled[t], T(0)) : cache.pooled[t];
    cache.hidden[t] = v * cache.dropout_scale[t];
  }

  cache.dense_out.assign(params.dense_b.begin(), params.dense_b.end());
  for (std::size_t t = 0; t < d; ++t) {
    const T h = cache.hidden[t];
    if (h == T(0)) continue;
    const T* w = params.dense_w.data() + t * c;
    for (std::size_t k = 0; k < c; ++k) cache.dense_out[k] += h * w[k];
  }

  cache.logits.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    cache.logits[k] = relu_first ? cache.dense_out[k] : std::max(cache.dense_out[k], T(0));
  }
  cache.probs.resize(c);
  softmax<T>(cache.logits, cache.probs);
}

template <class T>
T forward(const TextGraph& graph, const BasicParams<T>& params, const ModelConfig& config,
          bool train_mode, std::mt19937_64* rng, ForwardCache<T>& cache) {
  message_pass(graph, params, config, cache);
  readout(params, config, train_mode, rng, cache);
  if (graph.label_id < 0) return T(0);
  if (graph.label_id >= params.shape.num_classes) throw DataError("label id out of range");
  return cross_entropy<T>(cache.logits, graph.label_id);
}

template <class T>
int argmax_class(std::span<const T> values) {
  int best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

Capacity count_capacity(const ParamShape& s) {
  Capacity cap;
  const auto v = static_cast<std::uint64_t>(s.vocab_size);
  const auto d = static_cast<std::uint64_t>(s.dim);
  const auto c = static_cast<std::uint64_t>(s.num_classes);
  cap.edge_param_count = static_cast<std::uint64_t>(s.num_edges);
  cap.total_param_count = v * d + cap.edge_param_count + v + d * c + c;
  cap.bytes_at_4b = 4 * cap.total_param_count;
  return cap;
}

#define TLGNN_INSTANTIATE(T)                                                                     \
  template void message_pass<T>(const TextGraph&, const BasicParams<T>&, const ModelConfig&,     \
                                ForwardCache<T>&);                                               \
  template void readout<T>(const BasicParams<T>&, const ModelConfig&, bool, std::mt19937_64*,    \
                           ForwardCache<T>&);                                                    \
  template void softmax<T>(std::span<const T>, std::span<T>);                                    \
  template T cross_entropy<T>(std::span<const T>, int);                                          \
  template T forward<T>(const TextGraph&, const BasicParams<T>&, const ModelConfig&, bool,       \
                        std::mt19937_64*, ForwardCache<T>&);                                     \
  template int argmax_class<T>(std::span<const T>);

TLGNN_INSTANTIATE(float)
TLGNN_INSTANTIATE(double)

#undef TLGNN_INSTANTIATE

}  // namespace tlgnn
