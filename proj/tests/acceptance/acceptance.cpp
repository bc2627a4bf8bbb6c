// Acceptance checks, one per criterion. Usage: tlgnn_acceptance [N ...]
// Exit status: 0 all selected passed, 1 any failed, 77 all selected were skipped
// because an input dataset was not available.
//
// Dataset inputs (directories hold train.txt and test.txt in label<TAB>text form):
//   TLGNN_R8_DIR, TLGNN_R52_DIR, TLGNN_OHSUMED_DIR
//   TLGNN_GLOVE  path to a 300-d GloVe text file

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "tlgnn/checkpoint.hpp"
#include "tlgnn/experiments.hpp"

namespace fs = std::filesystem;
using namespace tlgnn;

namespace {

// Pinned tolerances.
constexpr double kGradRelTol = 1e-3;
constexpr double kGradEps = 1e-4;
constexpr int kGradDocs = 120;
constexpr double kGradSeconds = 120.0;
constexpr int kOracleGraphs = 1000;
constexpr int kOverfitDocs = 32;
constexpr int kOverfitEpochs = 200;
constexpr double kOverfitSeconds = 60.0;
constexpr double kR8GloveMin = 0.968;
constexpr double kR8RandomMin = 0.960;
constexpr std::uint64_t kEdgeParamsLo = 150000;
constexpr std::uint64_t kEdgeParamsHi = 400000;
constexpr double kEdgeRatioMax = 0.15;
const std::vector<std::uint64_t> kSeeds{1, 2, 3};

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::kFail, std::move(d)}; }
Outcome skip(std::string d) { return {Status::kSkip, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return ok ? pass(std::move(d)) : fail(std::move(d)); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::optional<fs::path> dataset_dir(const char* var) {
  const char* v = std::getenv(var);
  if (!v || !*v) return std::nullopt;
  fs::path dir(v);
  if (!fs::exists(dir / "train.txt") || !fs::exists(dir / "test.txt")) return std::nullopt;
  return dir;
}

std::optional<fs::path> glove_path() {
  const char* v = std::getenv("TLGNN_GLOVE");
  if (!v || !*v || !fs::exists(v)) return std::nullopt;
  return fs::path(v);
}

ExperimentSpec default_spec(const fs::path& dir, const std::optional<fs::path>& glove) {
  ExperimentSpec s;
  s.train_path = dir / "train.txt";
  s.test_path = dir / "test.txt";
  if (glove) s.embeddings_path = *glove;
  s.seeds = kSeeds;
  return s;
}

ParamsF64 random_params(std::mt19937_64& gen, const ParamShape& shape) {
  ParamsF64 p;
  p.shape = shape;
  auto fill = [&](std::vector<double>& xs, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> r(lo, hi);
    xs.resize(n);
    for (double& x : xs) x = r(gen);
  };
  const auto v = static_cast<std::size_t>(shape.vocab_size);
  const auto d = static_cast<std::size_t>(shape.dim);
  const auto c = static_cast<std::size_t>(shape.num_classes);
  fill(p.embeddings, v * d, -1.0, 1.0);
  fill(p.edge_weights, static_cast<std::size_t>(shape.num_edges), 0.2, 2.0);
  fill(p.gates, v, 0.05, 0.95);
  fill(p.dense_w, d * c, -1.0, 1.0);
  fill(p.dense_b, c, -0.5, 0.5);
  return p;
}

Document random_doc(std::mt19937_64& gen, int vocab, int max_len) {
  Document d;
  const int l = 1 + static_cast<int>(gen() % static_cast<unsigned>(max_len));
  for (int i = 0; i < l; ++i) d.tokens.push_back(static_cast<WordId>(gen() % static_cast<unsigned>(vocab)));
  d.label_id = static_cast<int>(gen() % 4u);
  return d;
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(2024);
  constexpr int vocab = 30;
  std::vector<Document> background;
  for (int i = 0; i < 40; ++i) background.push_back(random_doc(gen, vocab, 40));
  const PmiTable pmi = compute_pmi_table(background, 20);

  double worst = 0.0;
  std::string worst_where;
  std::size_t checked = 0, ties = 0;
  for (int i = 0; i < kGradDocs; ++i) {
    const int p = std::array{1, 3, 5}[static_cast<std::size_t>(i % 3)];
    ModelConfig cfg;
    cfg.reduction = (i / 3) % 2 ? Reduction::kMean : Reduction::kMax;
    cfg.edges_trainable = (i / 6) % 2 == 0;
    Document doc = random_doc(gen, vocab, 40);
    std::vector<Document> edge_docs = background;
    edge_docs.push_back(doc);
    EdgeVocabulary edges = build_edge_vocabulary(count_edge_pairs(edge_docs, p), 2, p);
    TextGraph g = build_text_graph(doc, p, edges, &pmi);
    ParamsF64 params = random_params(gen, {vocab, 8, static_cast<int>(edges.parameter_count()), 4});
    GradientCheckReport r = gradient_check(g, params, cfg, kGradEps);
    checked += r.checked;
    ties += r.excluded_ties;
    if (r.max_relative_error > worst) {
      worst = r.max_relative_error;
      worst_where = fmt("doc %d (p=%d %s %s) %s", i, p, std::string(to_string(cfg.reduction)).c_str(),
                        cfg.edges_trainable ? "trainable" : "fixed_pmi", r.worst.c_str());
    }
  }
  const double secs = seconds_since(t0);
  return verdict(worst < kGradRelTol && secs < kGradSeconds,
                 fmt("max_rel_err=%.3g (< %.0e) over %zu coords, %zu tie coords excluded, %d docs, %.1fs (< %.0fs); worst: %s",
                     worst, kGradRelTol, checked, ties, kGradDocs, secs, kGradSeconds, worst_where.c_str()));
}

Outcome oracle_equivalence() {
  std::mt19937_64 gen(77);
  std::size_t compared = 0, mismatches = 0;
  for (int trial = 0; trial < kOracleGraphs; ++trial) {
    Document doc = random_doc(gen, 12, 40);
    const int p = 1 + static_cast<int>(gen() % 5);
    EdgeVocabulary edges = build_edge_vocabulary(count_edge_pairs({doc}, p), 1 + static_cast<std::uint32_t>(gen() % 3), p);
    ParamsF64 params = random_params(gen, {12, 4, static_cast<int>(edges.parameter_count()), 4});
    TextGraph g = build_text_graph(doc, p, edges);
    for (Reduction r : {Reduction::kMax, Reduction::kMean}) {
      ModelConfig cfg;
      cfg.reduction = r;
      ForwardCache<double> cache;
      message_pass(g, params, cfg, cache);
      auto expected = oracle::message_pass(doc, p, params, r, 1, [&](WordId a, WordId n) {
        return params.edge_weights[edges.resolve(a, n)];
      });
      for (std::size_t n = 0; n < g.num_nodes(); ++n) {
        for (std::size_t t = 0; t < 4; ++t) {
          ++compared;
          mismatches += cache.node_out[n * 4 + t] != expected[n][t];
        }
      }
    }
  }

  const std::vector<Document> toy = {
      {0, {1, 2, 3, 4, 1, 2, 5}}, {0, {2, 3, 6}}, {0, {7, 8, 7, 8, 9, 1}},
      {0, {4, 4, 5, 6, 1, 2, 3, 9, 9, 8}}, {0, {3}},
  };
  std::size_t pmi_mismatches = 0, pmi_pairs = 0;
  for (int window : {2, 3, 4, 20}) {
    PmiTable t = compute_pmi_table(toy, window);
    oracle::PmiOracle o = oracle::pmi(toy, window);
    pmi_mismatches += t.size() != o.positive.size() || t.num_windows() != o.windows;
    for (const auto& [pair, v] : o.positive) {
      ++pmi_pairs;
      pmi_mismatches += t.value(pair.first, pair.second) != v;
    }
  }
  return verdict(mismatches == 0 && pmi_mismatches == 0,
                 fmt("%d graphs, %zu values, %zu mismatches; PMI %zu pairs over 4 windows, %zu mismatches",
                     kOracleGraphs, compared, mismatches, pmi_pairs, pmi_mismatches));
}

Outcome overfit_r8() {
  auto dir = dataset_dir("TLGNN_R8_DIR");
  if (!dir) return skip("R8 not available (set TLGNN_R8_DIR)");
  const auto glove = glove_path();
  ExperimentSpec spec = default_spec(*dir, glove);
  ExperimentData data = load_experiment_data(spec);
  std::vector<Document> subset(data.corpus.train.begin(),
                               data.corpus.train.begin() + std::min<std::ptrdiff_t>(kOverfitDocs, static_cast<std::ptrdiff_t>(data.corpus.train.size())));
  const auto t0 = std::chrono::steady_clock::now();
  EdgeVocabulary edges = build_edge_vocabulary(count_edge_pairs(subset, spec.graph.window),
                                               spec.graph.edge_min_count, spec.graph.window);
  auto graphs = build_text_graphs(subset, spec.graph.window, edges);
  ParamShape shape{data.corpus.vocab.size(), spec.graph.dim, static_cast<int>(edges.parameter_count()),
                   data.corpus.num_classes()};
  TrainConfig cfg = spec.train;
  cfg.max_epochs = kOverfitEpochs;
  cfg.patience = kOverfitEpochs;
  int reached = 0;
  fit(initialize_params(shape, data.pretrained ? &*data.pretrained : nullptr, 1), graphs, graphs, {},
      spec.model, cfg, [&](const EpochRecord& rec, const Params& p) {
        if (evaluate_accuracy(p, graphs, spec.model) == 1.0) reached = rec.epoch;
        return reached != 0;
      });
  const double secs = seconds_since(t0);
  return verdict(reached != 0 && secs < kOverfitSeconds,
                 fmt("%zu docs, 100%% train accuracy at epoch %d (limit %d), %.1fs (< %.0fs), %s init",
                     subset.size(), reached, kOverfitEpochs, secs, kOverfitSeconds, glove ? "GloVe" : "random"));
}

Summary mean_accuracy(const ExperimentData& data, const ExperimentSpec& spec) {
  std::vector<double> acc;
  for (std::uint64_t seed : spec.seeds) acc.push_back(run_once(data, spec, seed).test_accuracy);
  return summarize(acc);
}

Outcome r8_accuracy() {
  auto dir = dataset_dir("TLGNN_R8_DIR");
  if (!dir) return skip("R8 not available (set TLGNN_R8_DIR)");
  const auto glove = glove_path();
  if (!glove) return skip("GloVe vectors not available (set TLGNN_GLOVE)");
  ExperimentSpec spec = default_spec(*dir, glove);
  ExperimentData data = load_experiment_data(spec);
  const Summary with_glove = mean_accuracy(data, spec);
  spec.ablation = Ablation::kRandomEmbeddings;
  const Summary random = mean_accuracy(data, spec);
  return verdict(with_glove.mean >= kR8GloveMin && random.mean >= kR8RandomMin,
                 fmt("GloVe %.4f±%.4f (>= %.3f), random %.4f±%.4f (>= %.3f), %zu seeds",
                     with_glove.mean, with_glove.std, kR8GloveMin, random.mean, random.std,
                     kR8RandomMin, with_glove.n));
}

Outcome window_trend() {
  auto dir = dataset_dir("TLGNN_R8_DIR");
  if (!dir) return skip("R8 not available (set TLGNN_R8_DIR)");
  const auto glove = glove_path();
  ExperimentSpec spec = default_spec(*dir, glove);
  ExperimentData data = load_experiment_data(spec);
  auto rows = run_window_sweep(data, spec, {1, 3, 19});
  const double a1 = rows[0].accuracy.mean, a3 = rows[1].accuracy.mean, a19 = rows[2].accuracy.mean;
  return verdict(a3 > a1 && a3 > a19, fmt("p=1 %.4f, p=3 %.4f, p=19 %.4f, %s init", a1, a3, a19,
                                          glove ? "GloVe" : "random"));
}

Outcome ablation_ordering() {
  auto dir = dataset_dir("TLGNN_OHSUMED_DIR");
  std::string name = "Ohsumed";
  if (!dir) {
    dir = dataset_dir("TLGNN_R52_DIR");
    name = "R52";
  }
  if (!dir) return skip("neither Ohsumed nor R52 available (set TLGNN_OHSUMED_DIR or TLGNN_R52_DIR)");
  const auto glove = glove_path();
  if (!glove) return skip("GloVe vectors not available (set TLGNN_GLOVE)");
  ExperimentSpec spec = default_spec(*dir, glove);
  ExperimentData data = load_experiment_data(spec);
  auto rows = run_ablation(data, spec, {Ablation::kNone, Ablation::kMeanReduction, Ablation::kFixedPmi,
                                        Ablation::kRandomEmbeddings});
  const double base = rows[0].accuracy.mean, mean = rows[1].accuracy.mean,
               pmi = rows[2].accuracy.mean, rnd = rows[3].accuracy.mean;
  return verdict(base > mean && base > pmi && base > rnd,
                 fmt("%s: full %.4f, mean_reduction %.4f, fixed_pmi %.4f, random_embeddings %.4f",
                     name.c_str(), base, mean, pmi, rnd));
}

Outcome memory_claim() {
  auto dir = dataset_dir("TLGNN_R8_DIR");
  if (!dir) return skip("R8 not available (set TLGNN_R8_DIR)");
  ExperimentSpec spec = default_spec(*dir, std::nullopt);
  Corpus corpus = prepare_corpus(spec.train_path, spec.test_path, spec.prepare);
  MemoryReport m = run_memory_report(corpus, spec);
  const std::uint64_t e = m.ours.edge_param_count;
  return verdict(e >= kEdgeParamsLo && e <= kEdgeParamsHi && m.ratio < kEdgeRatioMax,
                 fmt("edge params %llu in [%llu, %llu], corpus-graph edges %llu, ratio %.4f (< %.2f)",
                     static_cast<unsigned long long>(e), static_cast<unsigned long long>(kEdgeParamsLo),
                     static_cast<unsigned long long>(kEdgeParamsHi),
                     static_cast<unsigned long long>(m.corpus_graph_edges), m.ratio, kEdgeRatioMax));
}

Outcome determinism() {
  synthetic::TempDir dir("accept");
  synthetic::Options o;
  o.docs_per_class = 25;
  auto [train_path, test_path] = synthetic::write_dataset(dir.path() / "data", o, 8);
  ExperimentSpec spec;
  spec.train_path = train_path;
  spec.test_path = test_path;
  spec.prepare.min_freq = 2;
  spec.graph.dim = 16;
  spec.train.max_epochs = 15;
  spec.train.threads = 1;
  ExperimentData data = load_experiment_data(spec);

  auto run = [&](const fs::path& out) {
    TrainedModel m;
    run_once(data, spec, 7, &m);
    write_text_file(out / "metrics.tsv", metrics_tsv(m.report));
    save_checkpoint(out / "model.tgnn",
                    ModelBundle{m.params, data.corpus.vocab, m.edges, data.corpus.labels, m.model, m.pmi});
  };
  run(dir.path() / "a");
  run(dir.path() / "b");
  const bool metrics_same =
      read_text_file(dir.path() / "a/metrics.tsv") == read_text_file(dir.path() / "b/metrics.tsv");
  const std::string ckpt = read_text_file(dir.path() / "a/model.tgnn");
  const bool ckpt_same = ckpt == read_text_file(dir.path() / "b/model.tgnn");

  ModelBundle loaded = load_checkpoint(dir.path() / "a/model.tgnn");
  TrainedModel ref;
  run_once(data, spec, 7, &ref);
  const auto g_ref = build_text_graphs(data.corpus.test, spec.graph.window, ref.edges);
  const auto g_loaded = build_text_graphs(data.corpus.test, loaded.edges.window(), loaded.edges);
  const EvalResult a = evaluate(ref.params, g_ref, ref.model);
  const EvalResult b = evaluate(loaded.params, g_loaded, loaded.config);
  const bool round_trip = a.predictions == b.predictions && a.loss == b.loss &&
                          encode_checkpoint(loaded) == ckpt;
  return verdict(metrics_same && ckpt_same && round_trip,
                 fmt("metrics.tsv identical: %s, checkpoint bytes identical: %s (%zu bytes), "
                     "round trip identical evaluation: %s",
                     metrics_same ? "yes" : "no", ckpt_same ? "yes" : "no", ckpt.size(),
                     round_trip ? "yes" : "no"));
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", gradient_correctness},
      {2, "oracle equivalence", oracle_equivalence},
      {3, "overfit sanity (R8)", overfit_r8},
      {4, "R8 accuracy", r8_accuracy},
      {5, "window-sweep trend (R8)", window_trend},
      {6, "ablation ordering", ablation_ordering},
      {7, "memory claim (R8)", memory_claim},
      {8, "determinism and checkpoint format", determinism},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (const auto& c : criteria) selected.push_back(c.id);
  }

  int passed = 0, failed = 0, skipped = 0;
  for (int id : selected) {
    auto it = std::find_if(criteria.begin(), criteria.end(), [&](const Criterion& c) { return c.id == id; });
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    Outcome out;
    try {
      out = it->run();
    } catch (const std::exception& e) {
      out = fail(std::string("exception: ") + e.what());
    }
    const char* tag = out.status == Status::kPass ? "PASS" : out.status == Status::kFail ? "FAIL" : "SKIP";
    std::printf("[%s] %d %s: %s\n", tag, it->id, it->name, out.detail.c_str());
    std::fflush(stdout);
    passed += out.status == Status::kPass;
    failed += out.status == Status::kFail;
    skipped += out.status == Status::kSkip;
  }
  if (failed) return 1;
  if (skipped && !passed) return 77;
  return 0;
}
