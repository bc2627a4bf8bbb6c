#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tlgnn/corpus.hpp"
#include "tlgnn/model.hpp"
#include "tlgnn/trainer.hpp"

namespace tlgnn {

enum class Ablation { kNone, kFixedPmi, kMeanReduction, kRandomEmbeddings };

std::string_view to_string(Ablation a);
Ablation parse_ablation(std::string_view name);

struct ExperimentSpec {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::filesystem::path embeddings_path;  // empty: random init
  PrepareOptions prepare;
  GraphSettings graph;
  ModelConfig model;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{1};
  Ablation ablation = Ablation::kNone;

  void validate() const;
};

// Returns the spec with its ablation folded into the model/embedding settings.
ExperimentSpec apply_ablation(ExperimentSpec spec);

// The settings a run actually uses, as ordered key/value pairs. Ablation
// variants differ from the baseline in exactly one entry.
std::vector<std::pair<std::string, std::string>> effective_config(const ExperimentSpec& spec);

struct RunRecord {
  std::uint64_t seed = 0;
  int window = 0;
  Ablation variant = Ablation::kNone;
  double test_accuracy = 0.0;
  int best_epoch = 0;
  int epochs = 0;
  double wall_seconds = 0.0;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t n = 0;
};

Summary summarize(std::span<const double> values);

// Loaded inputs shared by every run of an experiment.
struct ExperimentData {
  Corpus corpus;
  std::optional<EmbeddingInit> pretrained;
};

ExperimentData load_experiment_data(const ExperimentSpec& spec);

// One training run; `pretrained` is ignored when the spec's ablation asks for
// random embeddings.
RunRecord run_once(const ExperimentData& data, const ExperimentSpec& spec, std::uint64_t seed,
                   TrainedModel* model_out = nullptr);

struct SweepRow {
  int window = 0;
  Summary accuracy;
  std::vector<RunRecord> runs;
};

std::vector<SweepRow> run_window_sweep(const ExperimentData& data, const ExperimentSpec& spec,
                                       const std::vector<int>& windows);

struct AblationRow {
  Ablation variant = Ablation::kNone;
  Summary accuracy;
  std::vector<RunRecord> runs;
};

std::vector<AblationRow> run_ablation(const ExperimentData& data, const ExperimentSpec& spec,
                                      const std::vector<Ablation>& variants);

struct MemoryReport {
  int vocab_size = 0;
  Capacity ours;
  std::uint64_t pmi_pairs = 0;       // unordered positive-PMI word pairs, all documents
  std::uint64_t word_doc_pairs = 0;  // distinct (word, document) pairs, all documents
  // Corpus-graph edge count: both directions of every PMI pair plus one edge
  // per word-document pair.
  std::uint64_t corpus_graph_edges = 0;
  double ratio = 0.0;  // ours.edge_param_count / corpus_graph_edges
};

MemoryReport run_memory_report(const Corpus& corpus, const ExperimentSpec& spec);

std::string sweep_tsv(const std::vector<SweepRow>& rows);
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string runs_tsv(const std::vector<RunRecord>& runs);
std::string ablation_tsv(const std::vector<AblationRow>& rows);
std::string memory_tsv(const MemoryReport& report);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace tlgnn
