#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

#include "tlgnn/checkpoint.hpp"
#include "tlgnn/experiments.hpp"

namespace py = pybind11;
using namespace tlgnn;

namespace {

// Keyword options shared by train / sweep / ablate / memory.
ExperimentSpec make_spec(const std::string& train, const std::string& test, const py::kwargs& kw) {
  ExperimentSpec s;
  s.train_path = train;
  s.test_path = test;
  auto get = [&](const char* key, auto& field) {
    if (kw.contains(key)) field = kw[key].cast<std::decay_t<decltype(field)>>();
  };
  std::string embeddings, reduction = "max", readout = "relu-dense";
  bool fixed_pmi = false;
  get("embeddings", embeddings);
  get("min_freq", s.prepare.min_freq);
  get("val_ratio", s.prepare.val_ratio);
  get("split_seed", s.prepare.split_seed);
  get("p", s.graph.window);
  get("k", s.graph.edge_min_count);
  get("dim", s.graph.dim);
  get("pmi_window", s.graph.pmi_window);
  get("reduction", reduction);
  get("readout", readout);
  get("keep_prob", s.model.dropout_keep);
  get("mpm_steps", s.model.mpm_steps);
  get("fixed_pmi", fixed_pmi);
  get("lr", s.train.optimizer.lr);
  get("weight_decay", s.train.optimizer.weight_decay);
  get("batch_size", s.train.batch_size);
  get("patience", s.train.patience);
  get("max_epochs", s.train.max_epochs);
  get("threads", s.train.threads);
  get("seeds", s.seeds);
  for (const auto& item : kw) {
    static const std::vector<std::string> known = {
        "embeddings", "min_freq", "val_ratio", "split_seed", "p",         "k",
        "dim",        "pmi_window", "reduction", "readout",  "keep_prob", "mpm_steps",
        "fixed_pmi",  "lr",       "weight_decay", "batch_size", "patience", "max_epochs",
        "threads",    "seeds",    "seed"};
    const auto key = item.first.cast<std::string>();
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown option '" + key + "'");
    }
  }
  if (kw.contains("seed")) s.seeds = {kw["seed"].cast<std::uint64_t>()};
  s.embeddings_path = embeddings;
  s.model.reduction = parse_reduction(reduction);
  s.model.readout = parse_readout_order(readout);
  s.model.edges_trainable = !fixed_pmi;
  s.validate();
  return s;
}

py::dict summary_dict(const Summary& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["std"] = s.std;
  d["n"] = s.n;
  return d;
}

py::list runs_list(const std::vector<RunRecord>& runs) {
  py::list out;
  for (const auto& r : runs) {
    py::dict d;
    d["seed"] = r.seed;
    d["p"] = r.window;
    d["variant"] = std::string(to_string(r.variant));
    d["test_accuracy"] = r.test_accuracy;
    d["best_epoch"] = r.best_epoch;
    d["epochs"] = r.epochs;
    out.append(d);
  }
  return out;
}

// A trained model held in memory with enough context to classify raw text.
class Model {
 public:
  explicit Model(ModelBundle b) : bundle_(std::move(b)) {}

  static Model load(const std::filesystem::path& path) { return Model(load_checkpoint(path)); }
  void save(const std::filesystem::path& path) const { save_checkpoint(path, bundle_); }

  std::vector<std::string> predict(const std::vector<std::string>& texts) const {
    std::vector<std::string> out;
    for (const auto& t : texts) {
      RawDocument raw{-1, tokenize(t)};
      if (raw.words.empty()) throw DataError("cannot classify an empty text");
      TextGraph g = graph_for(encode_document(raw, bundle_.vocab));
      ForwardCache<float> cache;
      forward(g, bundle_.params, bundle_.config, false, nullptr, cache);
      out.push_back(bundle_.labels.names[static_cast<std::size_t>(argmax_class<float>(cache.probs))]);
    }
    return out;
  }

  py::dict evaluate(const std::filesystem::path& path) const {
    LabelSet labels = bundle_.labels;
    const auto raw = load_documents(path, labels, false);
    if (raw.empty()) throw DataError(path.string() + " contains no documents");
    std::vector<TextGraph> graphs;
    for (const auto& d : encode_documents(raw, bundle_.vocab)) graphs.push_back(graph_for(d));
    const EvalResult ev = tlgnn::evaluate(bundle_.params, graphs, bundle_.config);
    py::dict d;
    d["accuracy"] = ev.accuracy;
    d["loss"] = ev.loss;
    d["documents"] = graphs.size();
    return d;
  }

  std::vector<std::string> labels() const { return bundle_.labels.names; }
  int vocab_size() const { return bundle_.vocab.size(); }
  std::size_t edge_parameters() const { return bundle_.edges.parameter_count(); }
  int window() const { return bundle_.edges.window(); }
  std::string checkpoint_bytes() const { return encode_checkpoint(bundle_); }

 private:
  TextGraph graph_for(const Document& d) const {
    return build_text_graph(d, bundle_.edges.window(), bundle_.edges,
                            bundle_.pmi ? &*bundle_.pmi : nullptr);
  }

  ModelBundle bundle_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Text-level graph neural network for text classification";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, (std::string(e.category()) + ": " + e.what()).c_str());
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, (std::string(e.category()) + ": " + e.what()).c_str());
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), (e.category() + ": " + e.what()).c_str());
    }
  });

  m.def("tokenize", [](const std::string& text) { return tokenize(text); });

  m.def(
      "prepare",
      [](const std::string& train, const std::string& test, int min_freq, double val_ratio,
         std::uint64_t split_seed) {
        PrepareOptions o;
        o.min_freq = min_freq;
        o.val_ratio = val_ratio;
        o.split_seed = split_seed;
        const Corpus c = prepare_corpus(train, test, o);
        const CorpusStats s = corpus_stats(c);
        py::dict d;
        d["train"] = s.train;
        d["val"] = s.val;
        d["test"] = s.test;
        d["classes"] = s.classes;
        d["labels"] = c.labels.names;
        d["vocab_size"] = s.vocab_size;
        d["avg_length"] = s.avg_length;
        d["unk_rate"] = s.unk_rate;
        return d;
      },
      py::arg("train"), py::arg("test"), py::arg("min_freq") = 5, py::arg("val_ratio") = 0.1,
      py::arg("split_seed") = 1);

  m.def(
      "window_neighbors",
      [](const std::vector<std::string>& words, int p) {
        std::vector<RawDocument> raw{{0, words}};
        Vocabulary v = build_vocabulary(raw, 1);
        Document d = encode_document(raw[0], v);
        EdgeVocabulary edges;
        TextGraph g = build_text_graph(d, p, edges);
        std::vector<std::vector<std::uint32_t>> out;
        for (std::size_t n = 0; n < g.num_nodes(); ++n) {
          auto nb = g.neighbors_of(n);
          out.emplace_back(nb.begin(), nb.end());
        }
        return out;
      },
      py::arg("words"), py::arg("p"), "Neighbor positions of every token position.");

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load, py::arg("path"))
      .def("save", &Model::save, py::arg("path"))
      .def("predict", &Model::predict, py::arg("texts"))
      .def("evaluate", &Model::evaluate, py::arg("path"))
      .def("checkpoint_bytes", [](const Model& m) { return py::bytes(m.checkpoint_bytes()); })
      .def_property_readonly("labels", &Model::labels)
      .def_property_readonly("vocab_size", &Model::vocab_size)
      .def_property_readonly("edge_parameters", &Model::edge_parameters)
      .def_property_readonly("window", &Model::window);

  m.def(
      "train",
      [](const std::string& train, const std::string& test, const py::kwargs& kw) {
        ExperimentSpec spec = make_spec(train, test, kw);
        TrainedModel tm;
        RunRecord rec;
        ExperimentData data;
        {
          py::gil_scoped_release release;
          data = load_experiment_data(spec);
          rec = run_once(data, spec, spec.seeds.front(), &tm);
        }
        py::dict d;
        d["test_accuracy"] = rec.test_accuracy;
        d["best_epoch"] = rec.best_epoch;
        d["epochs"] = rec.epochs;
        d["metrics_tsv"] = metrics_tsv(tm.report);
        d["model"] = Model(ModelBundle{tm.params, data.corpus.vocab, tm.edges, data.corpus.labels,
                                       tm.model, tm.pmi});
        return d;
      },
      py::arg("train"), py::arg("test"),
      "Train one model. Keyword options mirror the command-line flags (p, k, dim, lr, ...).");

  m.def(
      "sweep_p",
      [](const std::string& train, const std::string& test, const std::vector<int>& p_values,
         const py::kwargs& kw) {
        ExperimentSpec spec = make_spec(train, test, kw);
        std::vector<SweepRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_window_sweep(load_experiment_data(spec), spec, p_values);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["p"] = r.window;
          d["accuracy"] = summary_dict(r.accuracy);
          d["runs"] = runs_list(r.runs);
          out.append(d);
        }
        return out;
      },
      py::arg("train"), py::arg("test"), py::arg("p_values"));

  m.def(
      "ablate",
      [](const std::string& train, const std::string& test, const std::vector<std::string>& variants,
         const py::kwargs& kw) {
        ExperimentSpec spec = make_spec(train, test, kw);
        std::vector<Ablation> vs;
        for (const auto& v : variants) vs.push_back(parse_ablation(v));
        std::vector<AblationRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_ablation(load_experiment_data(spec), spec, vs);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["variant"] = std::string(to_string(r.variant));
          d["accuracy"] = summary_dict(r.accuracy);
          d["runs"] = runs_list(r.runs);
          out.append(d);
        }
        return out;
      },
      py::arg("train"), py::arg("test"), py::arg("variants"));

  m.def(
      "memory_report",
      [](const std::string& train, const std::string& test, const py::kwargs& kw) {
        ExperimentSpec spec = make_spec(train, test, kw);
        const MemoryReport r =
            run_memory_report(prepare_corpus(spec.train_path, spec.test_path, spec.prepare), spec);
        py::dict d;
        d["vocab_size"] = r.vocab_size;
        d["edge_params"] = r.ours.edge_param_count;
        d["total_params"] = r.ours.total_param_count;
        d["bytes_f32"] = r.ours.bytes_at_4b;
        d["pmi_pairs"] = r.pmi_pairs;
        d["word_doc_pairs"] = r.word_doc_pairs;
        d["corpus_graph_edges"] = r.corpus_graph_edges;
        d["edge_ratio"] = r.ratio;
        return d;
      },
      py::arg("train"), py::arg("test"));
}
