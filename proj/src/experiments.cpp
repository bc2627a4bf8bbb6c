#include "tlgnn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "tlgnn/edge_vocab.hpp"

namespace tlgnn {

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::kNone: return "none";
    case Ablation::kFixedPmi: return "fixed_pmi";
    case Ablation::kMeanReduction: return "mean_reduction";
    case Ablation::kRandomEmbeddings: return "random_embeddings";
  }
  return "none";
}

Ablation parse_ablation(std::string_view name) {
  for (Ablation a : {Ablation::kNone, Ablation::kFixedPmi, Ablation::kMeanReduction,
                     Ablation::kRandomEmbeddings}) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError("unknown ablation '" + std::string(name) +
                    "' (expected none|fixed_pmi|mean_reduction|random_embeddings)");
}

void ExperimentSpec::validate() const {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (graph.window < 1) throw ConfigError("window p must be >= 1");
  if (graph.edge_min_count < 1) throw ConfigError("edge threshold k must be >= 1");
  if (graph.dim < 1) throw ConfigError("dimension must be >= 1");
  if (graph.pmi_window < 2) throw ConfigError("PMI window must be >= 2");
  model.validate();
}

ExperimentSpec apply_ablation(ExperimentSpec spec) {
  switch (spec.ablation) {
    case Ablation::kNone: break;
    case Ablation::kFixedPmi: spec.model.edges_trainable = false; break;
    case Ablation::kMeanReduction: spec.model.reduction = Reduction::kMean; break;
    case Ablation::kRandomEmbeddings: spec.embeddings_path.clear(); break;
  }
  return spec;
}

std::vector<std::pair<std::string, std::string>> effective_config(const ExperimentSpec& input) {
  const ExperimentSpec spec = apply_ablation(input);
  auto num = [](double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
  };
  return {
      {"train", spec.train_path.string()},
      {"test", spec.test_path.string()},
      {"embeddings", spec.embeddings_path.empty() ? "random" : spec.embeddings_path.string()},
      {"min_freq", std::to_string(spec.prepare.min_freq)},
      {"val_ratio", num(spec.prepare.val_ratio)},
      {"split_seed", std::to_string(spec.prepare.split_seed)},
      {"p", std::to_string(spec.graph.window)},
      {"k", std::to_string(spec.graph.edge_min_count)},
      {"dim", std::to_string(spec.graph.dim)},
      {"pmi_window", std::to_string(spec.graph.pmi_window)},
      {"reduction", std::string(to_string(spec.model.reduction))},
      {"edges", spec.model.edges_trainable ? "trainable" : "fixed_pmi"},
      {"dropout_keep", num(spec.model.dropout_keep)},
      {"mpm_steps", std::to_string(spec.model.mpm_steps)},
      {"readout", std::string(to_string(spec.model.readout))},
      {"lr", num(spec.train.optimizer.lr)},
      {"weight_decay", num(spec.train.optimizer.weight_decay)},
      {"decay_biases", spec.train.optimizer.decay_biases ? "true" : "false"},
      {"batch_size", std::to_string(spec.train.batch_size)},
      {"patience", std::to_string(spec.train.patience)},
      {"max_epochs", std::to_string(spec.train.max_epochs)},
  };
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

ExperimentData load_experiment_data(const ExperimentSpec& spec) {
  ExperimentData data;
  data.corpus = prepare_corpus(spec.train_path, spec.test_path, spec.prepare);
  if (!spec.embeddings_path.empty()) {
    data.pretrained = load_pretrained_embeddings(spec.embeddings_path, data.corpus.vocab,
                                                 spec.graph.dim, spec.seeds.front());
  }
  return data;
}

RunRecord run_once(const ExperimentData& data, const ExperimentSpec& input, std::uint64_t seed,
                   TrainedModel* model_out) {
  const ExperimentSpec spec = apply_ablation(input);
  spec.validate();
  TrainConfig config = spec.train;
  config.seed = seed;
  const EmbeddingInit* init = nullptr;
  if (!spec.embeddings_path.empty()) {
    if (!data.pretrained) throw ConfigError("embeddings requested but not loaded");
    init = &*data.pretrained;
  }
  TrainedModel model = train(data.corpus, spec.graph, spec.model, config, init);

  RunRecord rec;
  rec.seed = seed;
  rec.window = spec.graph.window;
  rec.variant = input.ablation;
  rec.test_accuracy = model.report.test_accuracy.value_or(std::numeric_limits<double>::quiet_NaN());
  rec.best_epoch = model.report.best_epoch;
  rec.epochs = static_cast<int>(model.report.epochs.size());
  rec.wall_seconds = model.report.wall_seconds;
  if (model_out) *model_out = std::move(model);
  return rec;
}

namespace {

Summary summarize_runs(const std::vector<RunRecord>& runs) {
  std::vector<double> acc;
  acc.reserve(runs.size());
  for (const auto& r : runs) acc.push_back(r.test_accuracy);
  return summarize(acc);
}

std::string describe_run(const ExperimentSpec& spec, std::uint64_t seed) {
  return "p=" + std::to_string(spec.graph.window) + " seed=" + std::to_string(seed) +
         " variant=" + std::string(to_string(spec.ablation));
}

RunRecord run_with_context(const ExperimentData& data, const ExperimentSpec& spec,
                           std::uint64_t seed) {
  try {
    return run_once(data, spec, seed);
  } catch (const Error& e) {
    throw Error(e.category(), "run " + describe_run(spec, seed) + ": " + e.what());
  }
}

}  // namespace

std::vector<SweepRow> run_window_sweep(const ExperimentData& data, const ExperimentSpec& spec,
                                       const std::vector<int>& windows) {
  if (windows.empty()) throw ConfigError("window sweep needs at least one p value");
  spec.validate();
  std::vector<SweepRow> rows;
  for (int p : windows) {
    ExperimentSpec s = spec;
    s.graph.window = p;
    SweepRow row;
    row.window = p;
    for (std::uint64_t seed : spec.seeds) row.runs.push_back(run_with_context(data, s, seed));
    row.accuracy = summarize_runs(row.runs);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AblationRow> run_ablation(const ExperimentData& data, const ExperimentSpec& spec,
                                      const std::vector<Ablation>& variants) {
  if (variants.empty()) throw ConfigError("no ablation variants selected");
  spec.validate();
  std::vector<AblationRow> rows;
  for (Ablation v : variants) {
    if (v == Ablation::kRandomEmbeddings && !data.pretrained) {
      throw ConfigError("random_embeddings ablation needs a pretrained baseline (--embeddings)");
    }
    ExperimentSpec s = spec;
    s.ablation = v;
    AblationRow row;
    row.variant = v;
    for (std::uint64_t seed : spec.seeds) row.runs.push_back(run_with_context(data, s, seed));
    row.accuracy = summarize_runs(row.runs);
    rows.push_back(std::move(row));
  }
  return rows;
}

MemoryReport run_memory_report(const Corpus& corpus, const ExperimentSpec& spec) {
  MemoryReport report;
  const EdgeVocabulary edges = build_edge_vocabulary(
      count_edge_pairs(corpus.train, spec.graph.window), spec.graph.edge_min_count, spec.graph.window);
  ParamShape shape;
  shape.vocab_size = corpus.vocab.size();
  shape.dim = spec.graph.dim;
  shape.num_edges = static_cast<int>(edges.parameter_count());
  shape.num_classes = corpus.num_classes();
  report.vocab_size = shape.vocab_size;
  report.ours = count_capacity(shape);

  std::vector<Document> all;
  all.reserve(corpus.train.size() + corpus.val.size() + corpus.test.size());
  for (const auto* part : {&corpus.train, &corpus.val, &corpus.test}) {
    all.insert(all.end(), part->begin(), part->end());
  }
  report.pmi_pairs = compute_pmi_table(all, spec.graph.pmi_window).size();
  std::vector<WordId> uniq;
  for (const auto& d : all) {
    uniq = d.tokens;
    std::sort(uniq.begin(), uniq.end());
    report.word_doc_pairs +=
        static_cast<std::uint64_t>(std::unique(uniq.begin(), uniq.end()) - uniq.begin());
  }
  report.corpus_graph_edges = 2 * report.pmi_pairs + report.word_doc_pairs;
  report.ratio = report.corpus_graph_edges
                     ? static_cast<double>(report.ours.edge_param_count) /
                           static_cast<double>(report.corpus_graph_edges)
                     : 0.0;
  return report;
}

namespace {

std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace

std::string sweep_tsv(const std::vector<SweepRow>& rows) {
  std::string out = "p\tmean_acc\tstd_acc\truns\n";
  for (const auto& r : rows) {
    out += std::to_string(r.window) + "\t" + fmt6(r.accuracy.mean) + "\t" + fmt6(r.accuracy.std) +
           "\t" + std::to_string(r.accuracy.n) + "\n";
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "p,mean_acc,std_acc\n";
  for (const auto& r : rows) {
    out += std::to_string(r.window) + "," + fmt6(r.accuracy.mean) + "," + fmt6(r.accuracy.std) + "\n";
  }
  return out;
}

std::string runs_tsv(const std::vector<RunRecord>& runs) {
  std::string out = "variant\tp\tseed\ttest_acc\tbest_epoch\tepochs\n";
  for (const auto& r : runs) {
    out += std::string(to_string(r.variant)) + "\t" + std::to_string(r.window) + "\t" +
           std::to_string(r.seed) + "\t" + fmt6(r.test_accuracy) + "\t" +
           std::to_string(r.best_epoch) + "\t" + std::to_string(r.epochs) + "\n";
  }
  return out;
}

std::string ablation_tsv(const std::vector<AblationRow>& rows) {
  std::string out = "variant\tmean_acc\tstd_acc\truns\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.variant)) + "\t" + fmt6(r.accuracy.mean) + "\t" +
           fmt6(r.accuracy.std) + "\t" + std::to_string(r.accuracy.n) + "\n";
  }
  return out;
}

std::string memory_tsv(const MemoryReport& m) {
  std::string out =
      "vocab_size\tedge_params\ttotal_params\tbytes_f32\tpmi_pairs\tword_doc_pairs\t"
      "corpus_graph_edges\tedge_ratio\n";
  out += std::to_string(m.vocab_size) + "\t" + std::to_string(m.ours.edge_param_count) + "\t" +
         std::to_string(m.ours.total_param_count) + "\t" + std::to_string(m.ours.bytes_at_4b) +
         "\t" + std::to_string(m.pmi_pairs) + "\t" + std::to_string(m.word_doc_pairs) + "\t" +
         std::to_string(m.corpus_graph_edges) + "\t" + fmt6(m.ratio) + "\n";
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << contents;
  if (!out) throw IoError("short write to " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace tlgnn
