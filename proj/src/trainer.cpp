#include "tlgnn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

namespace tlgnn {

// ---- Gradients -------------------------------------------------------------

template <class T>
Gradients<T>::Gradients(const ParamShape& shape) : shape_(shape) {
  const auto v = static_cast<std::size_t>(shape.vocab_size);
  const auto d = static_cast<std::size_t>(shape.dim);
  const auto c = static_cast<std::size_t>(shape.num_classes);
  embeddings_.assign(v * d, T(0));
  edges_.assign(static_cast<std::size_t>(shape.num_edges), T(0));
  gates_.assign(v, T(0));
  dense_w_.assign(d * c, T(0));
  dense_b_.assign(c, T(0));
  row_mark_.assign(v, 0);
  edge_mark_.assign(edges_.size(), 0);
  gate_mark_.assign(v, 0);
}

template <class T>
std::span<T> Gradients<T>::embedding_row(WordId w) {
  const auto i = static_cast<std::size_t>(w);
  if (!row_mark_[i]) {
    row_mark_[i] = 1;
    rows_.push_back(w);
  }
  const auto d = static_cast<std::size_t>(shape_.dim);
  return {embeddings_.data() + i * d, d};
}

template <class T>
std::span<const T> Gradients<T>::embedding_row(WordId w) const {
  const auto d = static_cast<std::size_t>(shape_.dim);
  return {embeddings_.data() + static_cast<std::size_t>(w) * d, d};
}

template <class T>
T& Gradients<T>::edge(std::uint32_t index) {
  if (!edge_mark_[index]) {
    edge_mark_[index] = 1;
    edge_ids_.push_back(index);
  }
  return edges_[index];
}

template <class T>
T& Gradients<T>::gate(WordId w) {
  const auto i = static_cast<std::size_t>(w);
  if (!gate_mark_[i]) {
    gate_mark_[i] = 1;
    gate_ids_.push_back(w);
  }
  return gates_[i];
}

template <class T>
void Gradients<T>::merge(const Gradients& other) {
  if (!(other.shape_ == shape_)) throw DataError("cannot merge gradients of different shapes");
  for (WordId w : other.rows_) {
    auto dst = embedding_row(w);
    auto src = other.embedding_row(w);
    for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += src[t];
  }
  for (std::uint32_t e : other.edge_ids_) edge(e) += other.edges_[e];
  for (WordId w : other.gate_ids_) gate(w) += other.gates_[static_cast<std::size_t>(w)];
  for (std::size_t i = 0; i < dense_w_.size(); ++i) dense_w_[i] += other.dense_w_[i];
  for (std::size_t i = 0; i < dense_b_.size(); ++i) dense_b_[i] += other.dense_b_[i];
}

template <class T>
void Gradients<T>::scale(T factor) {
  for (WordId w : rows_) {
    for (T& x : embedding_row(w)) x *= factor;
  }
  for (std::uint32_t e : edge_ids_) edges_[e] *= factor;
  for (WordId w : gate_ids_) gates_[static_cast<std::size_t>(w)] *= factor;
  for (T& x : dense_w_) x *= factor;
  for (T& x : dense_b_) x *= factor;
}

template <class T>
void Gradients<T>::clear() {
  const auto d = static_cast<std::size_t>(shape_.dim);
  for (WordId w : rows_) {
    const auto i = static_cast<std::size_t>(w);
    std::fill_n(embeddings_.begin() + static_cast<std::ptrdiff_t>(i * d), d, T(0));
    row_mark_[i] = 0;
  }
  for (std::uint32_t e : edge_ids_) {
    edges_[e] = T(0);
    edge_mark_[e] = 0;
  }
  for (WordId w : gate_ids_) {
    gates_[static_cast<std::size_t>(w)] = T(0);
    gate_mark_[static_cast<std::size_t>(w)] = 0;
  }
  rows_.clear();
  edge_ids_.clear();
  gate_ids_.clear();
  std::fill(dense_w_.begin(), dense_w_.end(), T(0));
  std::fill(dense_b_.begin(), dense_b_.end(), T(0));
}

template <class T>
bool Gradients<T>::all_finite() const {
  auto ok = [](T x) { return std::isfinite(x); };
  for (WordId w : rows_) {
    auto row = embedding_row(w);
    if (!std::all_of(row.begin(), row.end(), ok)) return false;
  }
  for (std::uint32_t e : edge_ids_) {
    if (!ok(edges_[e])) return false;
  }
  for (WordId w : gate_ids_) {
    if (!ok(gates_[static_cast<std::size_t>(w)])) return false;
  }
  return std::all_of(dense_w_.begin(), dense_w_.end(), ok) &&
         std::all_of(dense_b_.begin(), dense_b_.end(), ok);
}

template class Gradients<float>;
template class Gradients<double>;

// ---- backward --------------------------------------------------------------

template <class T>
void backward(const TextGraph& graph, const BasicParams<T>& params, const ModelConfig& config,
              const ForwardCache<T>& cache, int label, Gradients<T>& grads, T scale) {
  const std::size_t l = graph.num_nodes();
  const auto d = static_cast<std::size_t>(params.shape.dim);
  const auto c = static_cast<std::size_t>(params.shape.num_classes);
  const auto steps = static_cast<std::size_t>(config.mpm_steps);
  const bool use_max = config.reduction == Reduction::kMax;
  if (cache.num_nodes != l || cache.dim != d || cache.probs.size() != c ||
      cache.slot_weights.size() != graph.num_slots() || cache.step_inputs.size() != steps ||
      cache.messages.size() != steps || (use_max && cache.argmax.size() != steps) ||
      cache.node_out.size() != l * d) {
    throw DataError("forward cache does not match the graph or configuration");
  }
  if (label < 0 || static_cast<std::size_t>(label) >= c) throw DataError("label id out of range");

  const bool relu_first = config.readout == ReadoutOrder::kReluBeforeDense;

  std::vector<T> dz(c);
  for (std::size_t k = 0; k < c; ++k) {
    T g = cache.probs[k] - (k == static_cast<std::size_t>(label) ? T(1) : T(0));
    if (!relu_first && !(cache.dense_out[k] > T(0))) g = T(0);
    dz[k] = g * scale;
  }

  auto db = grads.dense_b();
  for (std::size_t k = 0; k < c; ++k) db[k] += dz[k];
  auto dw = grads.dense_w();
  std::vector<T> dpooled(d);
  for (std::size_t t = 0; t < d; ++t) {
    const T h = cache.hidden[t];
    const T* w = params.dense_w.data() + t * c;
    T* gw = dw.data() + t * c;
    T acc = 0;
    for (std::size_t k = 0; k < c; ++k) {
      gw[k] += h * dz[k];
      acc += w[k] * dz[k];
    }
    acc *= cache.dropout_scale[t];
    if (relu_first && !(cache.pooled[t] > T(0))) acc = T(0);
    dpooled[t] = acc;
  }

  // Gradient w.r.t. the output of the current step, one row per node.
  std::vector<T> dout(l * d);
  for (std::size_t n = 0; n < l; ++n) std::copy(dpooled.begin(), dpooled.end(), dout.begin() + static_cast<std::ptrdiff_t>(n * d));
  std::vector<T> din(l * d);
  std::vector<T> dslot(graph.num_slots());

  for (std::size_t step = steps; step-- > 0;) {
    const std::vector<T>& in = cache.step_inputs[step];
    const std::vector<T>& msg = cache.messages[step];
    std::fill(din.begin(), din.end(), T(0));
    std::fill(dslot.begin(), dslot.end(), T(0));

    for (std::size_t n = 0; n < l; ++n) {
      const WordId word = graph.node_words[n];
      const T eta = params.gates[static_cast<std::size_t>(word)];
      const T* go = dout.data() + n * d;
      const T* r = in.data() + n * d;
      const T* m = msg.data() + n * d;
      T* gi = din.data() + n * d;

      T dgate = 0;
      for (std::size_t t = 0; t < d; ++t) {
        dgate += go[t] * (r[t] - m[t]);
        gi[t] += eta * go[t];
      }
      grads.gate(word) += dgate;

      const T keep_msg = T(1) - eta;
      const std::uint32_t begin = graph.offsets[n];
      const std::uint32_t end = graph.offsets[n + 1];
      if (use_max) {
        const std::uint32_t* arg = cache.argmax[step].data() + n * d;
        for (std::size_t t = 0; t < d; ++t) {
          const T dm = keep_msg * go[t];
          const std::uint32_t s = arg[t];
          const std::size_t j = graph.neighbors[s];
          din[j * d + t] += cache.slot_weights[s] * dm;
          dslot[s] += in[j * d + t] * dm;
        }
      } else {
        const T inv = T(1) / static_cast<T>(end - begin);
        for (std::uint32_t s = begin; s < end; ++s) {
          const std::size_t j = graph.neighbors[s];
          const T w = cache.slot_weights[s] * inv;
          const T* rj = in.data() + j * d;
          T* gj = din.data() + j * d;
          T acc = 0;
          for (std::size_t t = 0; t < d; ++t) {
            const T dm = keep_msg * go[t];
            gj[t] += w * dm;
            acc += rj[t] * dm;
          }
          dslot[s] += acc * inv;
        }
      }
    }

    if (config.edges_trainable) {
      for (std::size_t s = 0; s < graph.num_slots(); ++s) {
        grads.edge(graph.edge_refs[s]) += dslot[s];
      }
    }
    dout.swap(din);
  }

  for (std::size_t n = 0; n < l; ++n) {
    auto row = grads.embedding_row(graph.node_words[n]);
    const T* g = dout.data() + n * d;
    for (std::size_t t = 0; t < d; ++t) row[t] += g[t];
  }
}

template void backward<float>(const TextGraph&, const BasicParams<float>&, const ModelConfig&,
                              const ForwardCache<float>&, int, Gradients<float>&, float);
template void backward<double>(const TextGraph&, const BasicParams<double>&, const ModelConfig&,
                               const ForwardCache<double>&, int, Gradients<double>&, double);

// ---- Adam ------------------------------------------------------------------

template <class T>
AdamState<T>::AdamState(const ParamShape& shape) {
  const auto v = static_cast<std::size_t>(shape.vocab_size);
  const auto d = static_cast<std::size_t>(shape.dim);
  const auto c = static_cast<std::size_t>(shape.num_classes);
  m_embeddings.assign(v * d, T(0));
  v_embeddings.assign(v * d, T(0));
  m_edges.assign(static_cast<std::size_t>(shape.num_edges), T(0));
  v_edges.assign(static_cast<std::size_t>(shape.num_edges), T(0));
  m_gates.assign(v, T(0));
  v_gates.assign(v, T(0));
  m_dense_w.assign(d * c, T(0));
  v_dense_w.assign(d * c, T(0));
  m_dense_b.assign(c, T(0));
  v_dense_b.assign(c, T(0));
}

template struct AdamState<float>;
template struct AdamState<double>;

template <class T>
void adam_step(BasicParams<T>& params, const Gradients<T>& grads, AdamState<T>& state,
               const OptimizerConfig& config, bool update_edges) {
  if (!grads.all_finite()) throw NumericError("non-finite gradient before optimizer step");
  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(config.beta1);
  const T b2 = static_cast<T>(config.beta2);
  const T wd = static_cast<T>(config.weight_decay);
  const T lr = static_cast<T>(config.lr);
  const T eps = static_cast<T>(config.eps);
  const T inv_bc1 = static_cast<T>(1.0 / bc1);
  const T inv_bc2 = static_cast<T>(1.0 / bc2);

  const char* group = "";
  std::size_t index = 0;
  auto update = [&](T& theta, T& m, T& v, T g, bool decay) {
    if (decay) g += wd * theta;
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g * g;
    const T mhat = m * inv_bc1;
    const T vhat = v * inv_bc2;
    theta -= lr * mhat / (std::sqrt(vhat) + eps);
    if (!std::isfinite(theta)) {
      throw NumericError(std::string("non-finite ") + group + " parameter at index " +
                         std::to_string(index) + " after optimizer step " +
                         std::to_string(state.step));
    }
  };

  const auto d = static_cast<std::size_t>(params.shape.dim);
  group = "embedding";
  for (WordId w : grads.touched_rows()) {
    const auto base = static_cast<std::size_t>(w) * d;
    auto g = grads.embedding_row(w);
    index = base;
    for (std::size_t t = 0; t < d; ++t) {
      update(params.embeddings[base + t], state.m_embeddings[base + t],
             state.v_embeddings[base + t], g[t], true);
    }
  }
  if (update_edges) {
    group = "edge";
    for (std::uint32_t e : grads.touched_edges()) {
      index = e;
      update(params.edge_weights[e], state.m_edges[e], state.v_edges[e], grads.edge_value(e), true);
    }
  }
  group = "gate";
  for (WordId w : grads.touched_gates()) {
    const auto i = static_cast<std::size_t>(w);
    index = i;
    update(params.gates[i], state.m_gates[i], state.v_gates[i], grads.gate_value(w), true);
  }
  group = "dense_w";
  auto gw = grads.dense_w();
  for (std::size_t i = 0; i < gw.size(); ++i) {
    index = i;
    update(params.dense_w[i], state.m_dense_w[i], state.v_dense_w[i], gw[i], true);
  }
  group = "dense_b";
  auto gb = grads.dense_b();
  for (std::size_t i = 0; i < gb.size(); ++i) {
    index = i;
    update(params.dense_b[i], state.m_dense_b[i], state.v_dense_b[i], gb[i], config.decay_biases);
  }
}

template void adam_step<float>(BasicParams<float>&, const Gradients<float>&, AdamState<float>&,
                               const OptimizerConfig&, bool);
template void adam_step<double>(BasicParams<double>&, const Gradients<double>&,
                                AdamState<double>&, const OptimizerConfig&, bool);

// ---- gradient check ----------------------------------------------------------

namespace {

struct Signature {
  std::vector<std::vector<std::uint32_t>> argmax;
  std::vector<char> relu;
};

Signature signature_of(const ForwardCache<double>& cache, const ModelConfig& config) {
  Signature sig;
  sig.argmax = cache.argmax;
  const auto& pre = config.readout == ReadoutOrder::kReluBeforeDense ? cache.pooled : cache.dense_out;
  sig.relu.reserve(pre.size());
  for (double x : pre) sig.relu.push_back(x > 0.0 ? 1 : 0);
  return sig;
}

}  // namespace

GradientCheckReport gradient_check(const TextGraph& graph, const ParamsF64& params,
                                   const ModelConfig& config, double eps, double floor) {
  if (graph.label_id < 0) throw DataError("gradient check needs a labeled graph");
  ModelConfig cfg = config;
  cfg.validate();

  ForwardCache<double> cache;
  forward(graph, params, cfg, false, nullptr, cache);
  const Signature base = signature_of(cache, cfg);
  Gradients<double> grads(params.shape);
  backward(graph, params, cfg, cache, graph.label_id, grads);

  ParamsF64 probe = params;
  GradientCheckReport report;
  ForwardCache<double> scratch;

  auto check = [&](double& slot, double analytic, const std::string& what) {
    const double saved = slot;
    slot = saved + eps;
    const double lp = forward(graph, probe, cfg, false, nullptr, scratch);
    const Signature sp = signature_of(scratch, cfg);
    slot = saved - eps;
    const double lm = forward(graph, probe, cfg, false, nullptr, scratch);
    const Signature sm = signature_of(scratch, cfg);
    slot = saved;
    if (sp.argmax != base.argmax || sm.argmax != base.argmax) {
      ++report.excluded_ties;
      return;
    }
    if (sp.relu != base.relu || sm.relu != base.relu) {
      ++report.excluded_kinks;
      return;
    }
    const double numeric = (lp - lm) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    const double err = std::abs(analytic - numeric) / denom;
    ++report.checked;
    if (err > report.max_relative_error || report.worst.empty()) {
      report.max_relative_error = err;
      std::ostringstream os;
      os << what << " analytic=" << analytic << " numeric=" << numeric;
      report.worst = os.str();
    }
  };

  const auto d = static_cast<std::size_t>(params.shape.dim);
  std::vector<WordId> words = graph.node_words;
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  for (WordId w : words) {
    auto g = grads.embedding_row(w);
    for (std::size_t t = 0; t < d; ++t) {
      check(probe.embeddings[static_cast<std::size_t>(w) * d + t], g[t],
            "embedding[" + std::to_string(w) + "][" + std::to_string(t) + "]");
    }
    check(probe.gates[static_cast<std::size_t>(w)], grads.gate_value(w),
          "gate[" + std::to_string(w) + "]");
  }
  if (cfg.edges_trainable) {
    std::vector<std::uint32_t> refs = graph.edge_refs;
    std::sort(refs.begin(), refs.end());
    refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
    for (std::uint32_t e : refs) {
      check(probe.edge_weights[e], grads.edge_value(e), "edge[" + std::to_string(e) + "]");
    }
  }
  auto gw = grads.dense_w();
  for (std::size_t i = 0; i < gw.size(); ++i) {
    check(probe.dense_w[i], gw[i], "dense_w[" + std::to_string(i) + "]");
  }
  auto gb = grads.dense_b();
  for (std::size_t i = 0; i < gb.size(); ++i) {
    check(probe.dense_b[i], gb[i], "dense_b[" + std::to_string(i) + "]");
  }
  return report;
}

// ---- training ----------------------------------------------------------------

bool EarlyStopping::observe(int epoch, double val_loss) {
  if (!seen_ || val_loss < best_loss_) {
    seen_ = true;
    best_loss_ = val_loss;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

EvalResult evaluate(const Params& params, const std::vector<TextGraph>& graphs,
                    const ModelConfig& config) {
  if (graphs.empty()) throw DataError("cannot evaluate on an empty document list");
  EvalResult out;
  out.predictions.reserve(graphs.size());
  ForwardCache<float> cache;
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& g : graphs) {
    loss += forward(g, params, config, false, nullptr, cache);
    const int pred = argmax_class<float>(cache.probs);
    out.predictions.push_back(pred);
    if (pred == g.label_id) ++correct;
  }
  out.loss = loss / static_cast<double>(graphs.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(graphs.size());
  return out;
}

double evaluate_accuracy(const Params& params, const std::vector<TextGraph>& graphs,
                         const ModelConfig& config) {
  return evaluate(params, graphs, config).accuracy;
}

namespace {

std::mt19937_64 dropout_rng(std::uint64_t seed, int epoch, std::size_t doc) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(doc)};
  return std::mt19937_64(seq);
}

struct Worker {
  Gradients<float> grads;
  ForwardCache<float> cache;
  double loss = 0.0;
};

}  // namespace

FitResult fit(Params init, const std::vector<TextGraph>& train, const std::vector<TextGraph>& val,
              const std::vector<TextGraph>& test, const ModelConfig& model,
              const TrainConfig& config, const EpochCallback& on_epoch) {
  model.validate();
  if (config.batch_size < 1 || config.patience < 1 || config.max_epochs < 1 || config.threads < 1) {
    throw ConfigError("batch size, patience, max epochs and threads must be positive");
  }
  if (!(config.optimizer.lr > 0.0) || config.optimizer.weight_decay < 0.0) {
    throw ConfigError("learning rate must be positive and weight decay non-negative");
  }
  if (train.empty()) throw DataError("empty training set");
  if (val.empty()) throw DataError("empty validation set");
  init.check_consistent();

  const auto start = std::chrono::steady_clock::now();
  FitResult result;
  Params params = std::move(init);
  AdamState<float> state(params.shape);
  Gradients<float> grads(params.shape);
  const auto n_threads = static_cast<std::size_t>(config.threads);
  std::vector<Worker> workers(n_threads > 1 ? n_threads : 0);
  for (auto& w : workers) w.grads = Gradients<float>(params.shape);
  ForwardCache<float> cache;

  std::mt19937_64 shuffle_rng(config.seed);
  std::vector<std::size_t> order(train.size());
  EarlyStopping stopper(config.patience);
  Params best = params;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    const auto bs = static_cast<std::size_t>(config.batch_size);
    for (std::size_t b0 = 0, batch = 1; b0 < order.size(); b0 += bs, ++batch) {
      const std::size_t b1 = std::min(order.size(), b0 + bs);
      const float scale = 1.0f / static_cast<float>(b1 - b0);
      grads.clear();

      auto run_doc = [&](std::size_t pos, Gradients<float>& g, ForwardCache<float>& c) {
        const std::size_t idx = order[pos];
        auto rng = dropout_rng(config.seed, epoch, idx);
        const float loss = forward(train[idx], params, model, true, &rng, c);
        if (!std::isfinite(loss)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch) + ", document " + std::to_string(idx));
        }
        backward(train[idx], params, model, c, train[idx].label_id, g, scale);
        return static_cast<double>(loss);
      };

      if (workers.empty()) {
        for (std::size_t pos = b0; pos < b1; ++pos) epoch_loss += run_doc(pos, grads, cache);
      } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers.size());
        for (std::size_t w = 0; w < workers.size(); ++w) {
          pool.emplace_back([&, w] {
            try {
              workers[w].loss = 0.0;
              for (std::size_t pos = b0 + w; pos < b1; pos += workers.size()) {
                workers[w].loss += run_doc(pos, workers[w].grads, workers[w].cache);
              }
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
          if (e) std::rethrow_exception(e);
        }
        for (auto& w : workers) {
          grads.merge(w.grads);
          w.grads.clear();
          epoch_loss += w.loss;
        }
      }
      adam_step(params, grads, state, config.optimizer, model.edges_trainable);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(train.size());
    const EvalResult ev = evaluate(params, val, model);
    if (!std::isfinite(ev.loss)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    rec.val_loss = ev.loss;
    rec.val_acc = ev.accuracy;
    result.report.epochs.push_back(rec);
    if (stopper.observe(epoch, ev.loss)) best = params;
    if (config.verbose) {
      std::fprintf(stderr, "epoch %d train_loss %.5f val_loss %.5f val_acc %.4f\n", epoch,
                   rec.train_loss, rec.val_loss, rec.val_acc);
    }
    if (on_epoch && on_epoch(rec, params)) break;
    if (stopper.should_stop()) {
      result.report.stopped_early = true;
      break;
    }
  }

  result.report.best_epoch = stopper.best_epoch();
  result.report.best_val_loss = stopper.best_loss();
  result.params = std::move(best);
  if (!test.empty()) result.report.test_accuracy = evaluate_accuracy(result.params, test, model);
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TrainedModel train(const Corpus& corpus, const GraphSettings& graph, const ModelConfig& model,
                   const TrainConfig& config, const EmbeddingInit* embedding_init) {
  model.validate();
  TrainedModel out;
  out.model = model;
  out.edges = build_edge_vocabulary(count_edge_pairs(corpus.train, graph.window),
                                    graph.edge_min_count, graph.window);
  if (!model.edges_trainable) out.pmi = compute_pmi_table(corpus.train, graph.pmi_window);
  const PmiTable* pmi = out.pmi ? &*out.pmi : nullptr;

  const auto train_graphs = build_text_graphs(corpus.train, graph.window, out.edges, pmi);
  const auto val_graphs = build_text_graphs(corpus.val, graph.window, out.edges, pmi);
  const auto test_graphs = build_text_graphs(corpus.test, graph.window, out.edges, pmi);

  ParamShape shape;
  shape.vocab_size = corpus.vocab.size();
  shape.dim = graph.dim;
  shape.num_edges = static_cast<int>(out.edges.parameter_count());
  shape.num_classes = corpus.num_classes();
  Params init = initialize_params(shape, embedding_init, config.seed);

  FitResult fitted = fit(std::move(init), train_graphs, val_graphs, test_graphs, model, config);
  out.params = std::move(fitted.params);
  out.report = std::move(fitted.report);
  return out;
}

std::string metrics_tsv(const TrainReport& report) {
  std::string out = "epoch\ttrain_loss\tval_loss\tval_acc\n";
  char buf[128];
  for (const auto& e : report.epochs) {
    std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.6f\t%.6f\n", e.epoch, e.train_loss, e.val_loss,
                  e.val_acc);
    out += buf;
  }
  if (report.test_accuracy) {
    std::snprintf(buf, sizeof buf, "test_accuracy\t%.6f\n", *report.test_accuracy);
  } else {
    std::snprintf(buf, sizeof buf, "test_accuracy\tnan\n");
  }
  out += buf;
  return out;
}

}  // namespace tlgnn
