#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "tlgnn/checkpoint.hpp"
#include "tlgnn/corpus.hpp"
#include "tlgnn/error.hpp"
#include "tlgnn/experiments.hpp"

namespace fs = std::filesystem;
using namespace tlgnn;

namespace {

struct Options {
  std::string train, test, embeddings, format = "tsv";
  std::string out_dir = "out";
  std::string model_path;
  int p = 3;
  std::uint32_t k = 2;
  int min_freq = 5;
  double val_ratio = 0.1;
  std::uint64_t split_seed = 1;
  int dim = 300;
  int pmi_window = 20;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int batch_size = 32;
  int patience = 10;
  int max_epochs = 200;
  double keep_prob = 0.5;
  int threads = 1;
  int mpm_steps = 1;
  std::string reduction = "max";
  std::string readout = "relu-dense";
  bool fixed_pmi = false;
  bool verbose = false;
  std::vector<std::uint64_t> seeds{1};
  std::vector<int> p_values{1, 2, 3, 4, 5, 6, 7, 19};
  std::vector<std::string> variants{"none", "fixed_pmi", "mean_reduction", "random_embeddings"};
};

void add_data_flags(CLI::App* cmd, Options& o, bool need_test = true) {
  cmd->add_option("--train", o.train, "training file, <label>\\t<text> per line")->required();
  auto* test = cmd->add_option("--test", o.test, "test file, same format");
  if (need_test) test->required();
  cmd->add_option("--format", o.format, "dataset format")->capture_default_str();
  cmd->add_option("--min-freq", o.min_freq, "minimum word frequency")->capture_default_str();
  cmd->add_option("--val-ratio", o.val_ratio, "validation fraction of train")->capture_default_str();
  cmd->add_option("--split-seed", o.split_seed, "seed of the train/val split")->capture_default_str();
  cmd->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
}

void add_model_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--embeddings", o.embeddings, "GloVe text file (random init when omitted)");
  cmd->add_option("--p", o.p, "window size")->capture_default_str();
  cmd->add_option("--k", o.k, "edge occurrence threshold")->capture_default_str();
  cmd->add_option("--dim", o.dim, "embedding dimension")->capture_default_str();
  cmd->add_option("--pmi-window", o.pmi_window, "PMI sliding window for fixed edges")->capture_default_str();
  cmd->add_option("--lr", o.lr, "learning rate")->capture_default_str();
  cmd->add_option("--weight-decay", o.weight_decay, "L2 coefficient")->capture_default_str();
  cmd->add_option("--batch-size", o.batch_size, "mini-batch size")->capture_default_str();
  cmd->add_option("--patience", o.patience, "early stopping patience")->capture_default_str();
  cmd->add_option("--max-epochs", o.max_epochs, "epoch limit")->capture_default_str();
  cmd->add_option("--keep-prob", o.keep_prob, "dropout keep probability")->capture_default_str();
  cmd->add_option("--threads", o.threads, "worker threads per batch")->capture_default_str();
  cmd->add_option("--mpm-steps", o.mpm_steps, "message passing rounds")->capture_default_str();
  cmd->add_option("--reduction", o.reduction, "max|mean")->capture_default_str();
  cmd->add_option("--readout", o.readout, "relu-dense|dense-relu")->capture_default_str();
  cmd->add_flag("--fixed-pmi", o.fixed_pmi, "use fixed PMI edge weights");
  cmd->add_flag("--verbose", o.verbose, "print per-epoch progress");
}

ExperimentSpec make_spec(const Options& o) {
  parse_dataset_format(o.format);
  ExperimentSpec s;
  s.train_path = o.train;
  s.test_path = o.test;
  s.embeddings_path = o.embeddings;
  s.prepare.min_freq = o.min_freq;
  s.prepare.val_ratio = o.val_ratio;
  s.prepare.split_seed = o.split_seed;
  s.graph.window = o.p;
  s.graph.edge_min_count = o.k;
  s.graph.dim = o.dim;
  s.graph.pmi_window = o.pmi_window;
  s.model.reduction = parse_reduction(o.reduction);
  s.model.readout = parse_readout_order(o.readout);
  s.model.dropout_keep = o.keep_prob;
  s.model.edges_trainable = !o.fixed_pmi;
  s.model.mpm_steps = o.mpm_steps;
  s.train.optimizer.lr = o.lr;
  s.train.optimizer.weight_decay = o.weight_decay;
  s.train.batch_size = o.batch_size;
  s.train.patience = o.patience;
  s.train.max_epochs = o.max_epochs;
  s.train.threads = o.threads;
  s.train.verbose = o.verbose;
  s.seeds = o.seeds;
  s.validate();
  return s;
}

std::string config_tsv(const ExperimentSpec& spec) {
  std::string out;
  for (const auto& [k, v] : effective_config(spec)) out += k + "\t" + v + "\n";
  return out;
}

void cmd_prepare(const Options& o) {
  ExperimentSpec spec = make_spec(o);
  Corpus corpus = prepare_corpus(spec.train_path, spec.test_path, spec.prepare);
  const fs::path out(o.out_dir);
  write_text_file(out / "corpus.tsv", serialize_corpus(corpus));
  const CorpusStats s = corpus_stats(corpus);
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "train\t%zu\nval\t%zu\ntest\t%zu\nclasses\t%d\nvocab_size\t%d\navg_length\t%.4f\n"
                "unk_rate\t%.6f\ndropped_empty\t%zu\n",
                s.train, s.val, s.test, s.classes, s.vocab_size, s.avg_length, s.unk_rate,
                corpus.dropped_empty);
  write_text_file(out / "stats.tsv", buf);
  std::fputs(buf, stdout);
}

void cmd_train(const Options& o) {
  ExperimentSpec spec = make_spec(o);
  ExperimentData data = load_experiment_data(spec);
  if (data.pretrained) {
    std::fprintf(stderr, "embedding coverage %.4f\n", data.pretrained->coverage);
  }
  TrainedModel model;
  RunRecord rec = run_once(data, spec, spec.seeds.front(), &model);
  const fs::path out(o.out_dir);
  write_text_file(out / "metrics.tsv", metrics_tsv(model.report));
  write_text_file(out / "config.tsv", config_tsv(spec));
  save_checkpoint(out / "model.tgnn", ModelBundle{model.params, data.corpus.vocab, model.edges,
                                                 data.corpus.labels, model.model, model.pmi});
  const Capacity cap = count_capacity(model.params);
  std::printf("test_accuracy\t%.6f\nbest_epoch\t%d\nepochs\t%d\nedge_params\t%llu\ntotal_params\t%llu\n",
              rec.test_accuracy, rec.best_epoch, rec.epochs,
              static_cast<unsigned long long>(cap.edge_param_count),
              static_cast<unsigned long long>(cap.total_param_count));
}

void cmd_eval(const Options& o) {
  ModelBundle bundle = load_checkpoint(o.model_path);
  LabelSet labels = bundle.labels;
  std::vector<RawDocument> raw = load_documents(o.test, labels, false);
  if (raw.empty()) throw DataError(o.test + " contains no documents");
  const std::vector<Document> docs = encode_documents(raw, bundle.vocab);
  const PmiTable* pmi = bundle.pmi ? &*bundle.pmi : nullptr;
  const auto graphs = build_text_graphs(docs, bundle.edges.window(), bundle.edges, pmi);
  const EvalResult ev = evaluate(bundle.params, graphs, bundle.config);

  char buf[256];
  std::snprintf(buf, sizeof buf, "documents\t%zu\naccuracy\t%.6f\nloss\t%.6f\n", graphs.size(),
                ev.accuracy, ev.loss);
  write_text_file(fs::path(o.out_dir) / "eval.tsv", buf);
  std::string preds = "index\tlabel\tpredicted\n";
  for (std::size_t i = 0; i < ev.predictions.size(); ++i) {
    preds += std::to_string(i) + "\t" + labels.names[static_cast<std::size_t>(docs[i].label_id)] +
             "\t" + labels.names[static_cast<std::size_t>(ev.predictions[i])] + "\n";
  }
  write_text_file(fs::path(o.out_dir) / "predictions.tsv", preds);
  std::fputs(buf, stdout);
}

void cmd_sweep(const Options& o) {
  ExperimentSpec spec = make_spec(o);
  ExperimentData data = load_experiment_data(spec);
  auto rows = run_window_sweep(data, spec, o.p_values);
  std::vector<RunRecord> runs;
  for (const auto& r : rows) runs.insert(runs.end(), r.runs.begin(), r.runs.end());
  const fs::path out(o.out_dir);
  write_text_file(out / "sweep.tsv", sweep_tsv(rows));
  write_text_file(out / "sweep.csv", sweep_csv(rows));
  write_text_file(out / "runs.tsv", runs_tsv(runs));
  write_text_file(out / "config.tsv", config_tsv(spec));
  std::fputs(sweep_tsv(rows).c_str(), stdout);
}

void cmd_ablate(const Options& o) {
  ExperimentSpec spec = make_spec(o);
  std::vector<Ablation> variants;
  for (const auto& v : o.variants) variants.push_back(parse_ablation(v));
  ExperimentData data = load_experiment_data(spec);
  auto rows = run_ablation(data, spec, variants);
  std::vector<RunRecord> runs;
  std::string configs;
  for (const auto& r : rows) {
    runs.insert(runs.end(), r.runs.begin(), r.runs.end());
    ExperimentSpec s = spec;
    s.ablation = r.variant;
    configs += "# " + std::string(to_string(r.variant)) + "\n" + config_tsv(s);
  }
  const fs::path out(o.out_dir);
  write_text_file(out / "ablation.tsv", ablation_tsv(rows));
  write_text_file(out / "runs.tsv", runs_tsv(runs));
  write_text_file(out / "config.tsv", configs);
  std::fputs(ablation_tsv(rows).c_str(), stdout);
}

void cmd_memory(const Options& o) {
  ExperimentSpec spec = make_spec(o);
  Corpus corpus = prepare_corpus(spec.train_path, spec.test_path, spec.prepare);
  const std::string tsv = memory_tsv(run_memory_report(corpus, spec));
  write_text_file(fs::path(o.out_dir) / "memory.tsv", tsv);
  std::fputs(tsv.c_str(), stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-level graph neural network for text classification"};
  app.require_subcommand(1);
  Options o;

  auto* prepare = app.add_subcommand("prepare", "load, split and encode a dataset");
  add_data_flags(prepare, o);

  auto* train = app.add_subcommand("train", "train one model and save a checkpoint");
  add_data_flags(train, o);
  add_model_flags(train, o);
  train->add_option("--seed", o.seeds, "training seed")->expected(1);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a labeled file");
  eval->add_option("--model", o.model_path, "checkpoint from train")->required();
  eval->add_option("--test", o.test, "labeled file")->required();
  eval->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep-p", "test accuracy across window sizes");
  add_data_flags(sweep, o);
  add_model_flags(sweep, o);
  sweep->add_option("--seeds", o.seeds, "training seeds")->delimiter(',');
  sweep->add_option("--p-values", o.p_values, "window sizes")->delimiter(',');

  auto* ablate = app.add_subcommand("ablate", "component ablations");
  add_data_flags(ablate, o);
  add_model_flags(ablate, o);
  ablate->add_option("--seeds", o.seeds, "training seeds")->delimiter(',');
  ablate->add_option("--variants", o.variants, "none,fixed_pmi,mean_reduction,random_embeddings")
      ->delimiter(',');

  auto* memory = app.add_subcommand("memory", "parameter counts against a corpus-level graph");
  add_data_flags(memory, o);
  add_model_flags(memory, o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) cmd_prepare(o);
    else if (train->parsed()) cmd_train(o);
    else if (eval->parsed()) cmd_eval(o);
    else if (sweep->parsed()) cmd_sweep(o);
    else if (ablate->parsed()) cmd_ablate(o);
    else if (memory->parsed()) cmd_memory(o);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.category().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
