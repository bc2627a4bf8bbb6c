#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tlgnn/corpus.hpp"
#include "tlgnn/edge_vocab.hpp"
#include "tlgnn/model.hpp"
#include "tlgnn/text_graph.hpp"

namespace tlgnn {

// Sparse accumulator mirroring BasicParams. Embedding rows, edge weights and
// gates are stored densely but only touched entries are nonzero; the touched
// lists drive the lazy optimizer update and cheap clearing.
template <class T>
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParamShape& shape);

  const ParamShape& shape() const { return shape_; }

  std::span<T> embedding_row(WordId w);
  std::span<const T> embedding_row(WordId w) const;
  T& edge(std::uint32_t index);
  T& gate(WordId w);
  std::span<T> dense_w() { return dense_w_; }
  std::span<T> dense_b() { return dense_b_; }
  std::span<const T> dense_w() const { return dense_w_; }
  std::span<const T> dense_b() const { return dense_b_; }

  T edge_value(std::uint32_t index) const { return edges_[index]; }
  T gate_value(WordId w) const { return gates_[static_cast<std::size_t>(w)]; }

  // In first-touch order.
  const std::vector<WordId>& touched_rows() const { return rows_; }
  const std::vector<std::uint32_t>& touched_edges() const { return edge_ids_; }
  const std::vector<WordId>& touched_gates() const { return gate_ids_; }

  void merge(const Gradients& other);
  void scale(T factor);
  void clear();
  bool all_finite() const;

 private:
  ParamShape shape_;
  std::vector<T> embeddings_, edges_, gates_, dense_w_, dense_b_;
  std::vector<char> row_mark_, edge_mark_, gate_mark_;
  std::vector<WordId> rows_;
  std::vector<std::uint32_t> edge_ids_;
  std::vector<WordId> gate_ids_;
};

// Accumulates scale * dLoss/dParams for one document whose forward pass filled
// `cache`. Max reduction routes each dimension through its cached winning slot.
template <class T>
void backward(const TextGraph& graph, const BasicParams<T>& params, const ModelConfig& config,
              const ForwardCache<T>& cache, int label, Gradients<T>& grads, T scale = T(1));

struct OptimizerConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool decay_biases = true;
};

template <class T>
struct AdamState {
  std::vector<T> m_embeddings, v_embeddings;
  std::vector<T> m_edges, v_edges;
  std::vector<T> m_gates, v_gates;
  std::vector<T> m_dense_w, v_dense_w;
  std::vector<T> m_dense_b, v_dense_b;
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(const ParamShape& shape);
};

// Lazy Adam with coupled L2: g <- g + wd * theta, applied only to touched
// entries (dense_w / dense_b are always touched). Edge weights are skipped
// when `update_edges` is false.
template <class T>
void adam_step(BasicParams<T>& params, const Gradients<T>& grads, AdamState<T>& state,
               const OptimizerConfig& config, bool update_edges = true);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t excluded_ties = 0;   // argmax changed under perturbation
  std::size_t excluded_kinks = 0;  // a ReLU switched under perturbation
  std::string worst;               // description of the worst coordinate
};

// Central differences over every parameter the document touches, in eval mode.
// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradientCheckReport gradient_check(const TextGraph& graph, const ParamsF64& params,
                                   const ModelConfig& config, double eps = 1e-4,
                                   double floor = 1e-6);

struct TrainConfig {
  OptimizerConfig optimizer;
  int batch_size = 32;
  int patience = 10;
  int max_epochs = 200;
  std::uint64_t seed = 1;
  int threads = 1;
  bool verbose = false;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  std::optional<double> test_accuracy;
  bool stopped_early = false;
  double wall_seconds = 0.0;
};

// Tracks the best validation loss; signals a stop after `patience` epochs
// without a strict decrease.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  // Returns true when this epoch is the new best.
  bool observe(int epoch, double val_loss);
  bool should_stop() const { return since_best_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_loss_ = 0.0;
  int since_best_ = 0;
  bool seen_ = false;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<int> predictions;
};

EvalResult evaluate(const Params& params, const std::vector<TextGraph>& graphs,
                    const ModelConfig& config);

double evaluate_accuracy(const Params& params, const std::vector<TextGraph>& graphs,
                         const ModelConfig& config);

struct FitResult {
  Params params;  // best validation-loss snapshot
  TrainReport report;
};

// Called after every epoch with the current (not best) parameters; return
// true to stop.
using EpochCallback = std::function<bool(const EpochRecord&, const Params&)>;

// Mini-batch training with early stopping on validation loss. The test set is
// evaluated once, on the restored best parameters, when nonempty.
FitResult fit(Params init, const std::vector<TextGraph>& train, const std::vector<TextGraph>& val,
              const std::vector<TextGraph>& test, const ModelConfig& model,
              const TrainConfig& config, const EpochCallback& on_epoch = {});

struct GraphSettings {
  int window = 3;
  std::uint32_t edge_min_count = 2;
  int dim = 300;
  // Fixed-edge mode builds graphs against a PMI table of this window.
  int pmi_window = 20;
};

struct TrainedModel {
  Params params;
  EdgeVocabulary edges;
  std::optional<PmiTable> pmi;
  ModelConfig model;
  TrainReport report;
};

// Full pipeline over a prepared corpus: edge vocabulary from the training
// partition, per-document graphs, parameter init, fit.
TrainedModel train(const Corpus& corpus, const GraphSettings& graph, const ModelConfig& model,
                   const TrainConfig& config, const EmbeddingInit* embedding_init = nullptr);

// `epoch\ttrain_loss\tval_loss\tval_acc` rows then `test_accuracy\t<value>`.
std::string metrics_tsv(const TrainReport& report);

}  // namespace tlgnn
