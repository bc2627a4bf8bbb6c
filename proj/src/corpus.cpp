#include "tlgnn/corpus.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

namespace tlgnn {

namespace {

constexpr float kUniformInitRange = 0.01f;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

int LabelSet::find(std::string_view name) const {
  auto it = ids.find(std::string(name));
  return it == ids.end() ? -1 : it->second;
}

int LabelSet::intern(const std::string& name) {
  auto [it, inserted] = ids.emplace(name, static_cast<int>(names.size()));
  if (inserted) names.push_back(name);
  return it->second;
}

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "tsv" || name == "label-tab-text") return DatasetFormat::kLabelTabText;
  throw ConfigError("unknown dataset format '" + std::string(name) + "'");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) {
      std::string word(text.substr(start, i - start));
      for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(std::move(word));
    }
  }
  return out;
}

std::vector<RawDocument> load_documents(const std::filesystem::path& path, LabelSet& labels,
                                        bool allow_new_labels, std::size_t* dropped) {
  std::ifstream in = open_input(path);
  std::vector<RawDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  std::size_t empty = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = strip_cr(line);
    if (view.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto tab = view.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected <label><TAB><text>");
    }
    std::string label(view.substr(0, tab));
    int label_id = labels.find(label);
    if (label_id < 0) {
      if (!allow_new_labels) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": label '" + label +
                        "' does not occur in the training data");
      }
      label_id = labels.intern(label);
    }
    RawDocument doc{label_id, tokenize(view.substr(tab + 1))};
    if (doc.words.empty()) {
      ++empty;
      continue;
    }
    docs.push_back(std::move(doc));
  }
  if (dropped) *dropped = empty;
  return docs;
}

RawCorpus load_dataset(const std::filesystem::path& train_path,
                       const std::filesystem::path& test_path, DatasetFormat format) {
  if (format != DatasetFormat::kLabelTabText) throw ConfigError("unsupported dataset format");
  RawCorpus corpus;
  corpus.train = load_documents(train_path, corpus.labels, true, &corpus.dropped_train);
  corpus.test = load_documents(test_path, corpus.labels, false, &corpus.dropped_test);
  const std::size_t dropped = corpus.dropped_train + corpus.dropped_test;
  if (dropped > 0) {
    std::cerr << "warning: dropped " << dropped << " documents with no tokens\n";
  }
  return corpus;
}

Vocabulary::Vocabulary() {
  words_.emplace_back(kUnkToken);
  freqs_.push_back(0);
  index_.emplace(std::string(kUnkToken), kUnk);
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words,
                                  const std::vector<std::uint64_t>& frequencies,
                                  std::uint64_t unk_frequency, int min_freq) {
  if (words.size() != frequencies.size()) {
    throw DataError("vocabulary words and frequencies differ in length");
  }
  Vocabulary vocab;
  vocab.min_freq_ = min_freq;
  vocab.freqs_[0] = unk_frequency;
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto [it, inserted] = vocab.index_.emplace(words[i], static_cast<WordId>(vocab.words_.size()));
    if (!inserted) throw DataError("duplicate vocabulary entry '" + words[i] + "'");
    vocab.words_.push_back(words[i]);
    vocab.freqs_.push_back(frequencies[i]);
  }
  return vocab;
}

WordId Vocabulary::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return index_.count(std::string(word)) != 0;
}

Vocabulary build_vocabulary(const std::vector<RawDocument>& train_docs, int min_freq) {
  if (min_freq < 1) throw ConfigError("min_freq must be >= 1");
  if (train_docs.empty()) throw DataError("cannot build a vocabulary from an empty training set");

  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::string> order;
  std::vector<std::uint64_t> counts;
  for (const auto& doc : train_docs) {
    for (const auto& w : doc.words) {
      auto [it, inserted] = slot.emplace(w, order.size());
      if (inserted) {
        order.push_back(w);
        counts.push_back(0);
      }
      ++counts[it->second];
    }
  }

  std::vector<std::string> kept;
  std::vector<std::uint64_t> kept_freq;
  std::uint64_t unk = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] != Vocabulary::kUnkToken && counts[i] >= static_cast<std::uint64_t>(min_freq)) {
      kept.push_back(order[i]);
      kept_freq.push_back(counts[i]);
    } else {
      unk += counts[i];
    }
  }
  return Vocabulary::from_words(kept, kept_freq, unk, min_freq);
}

Document encode_document(const RawDocument& doc, const Vocabulary& vocab) {
  Document out;
  out.label_id = doc.label_id;
  out.tokens.reserve(doc.words.size());
  for (const auto& w : doc.words) out.tokens.push_back(vocab.lookup(w));
  return out;
}

std::vector<Document> encode_documents(const std::vector<RawDocument>& docs,
                                       const Vocabulary& vocab) {
  std::vector<Document> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(encode_document(d, vocab));
  return out;
}

Corpus prepare_corpus(RawCorpus raw, const PrepareOptions& options) {
  auto [train, val] = split_validation(raw.train, options.val_ratio, options.split_seed);
  Corpus corpus;
  corpus.vocab = build_vocabulary(train, options.min_freq);
  corpus.train = encode_documents(train, corpus.vocab);
  corpus.val = encode_documents(val, corpus.vocab);
  corpus.test = encode_documents(raw.test, corpus.vocab);
  corpus.labels = std::move(raw.labels);
  corpus.dropped_empty = raw.dropped_train + raw.dropped_test;
  if (corpus.labels.size() < 2) throw DataError("need at least 2 classes");
  return corpus;
}

Corpus prepare_corpus(const std::filesystem::path& train_path,
                      const std::filesystem::path& test_path, const PrepareOptions& options) {
  return prepare_corpus(load_dataset(train_path, test_path), options);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::ostringstream out;
  auto dump = [&](const char* part, const std::vector<Document>& docs) {
    for (const auto& d : docs) {
      out << part << '\t' << corpus.labels.names.at(static_cast<std::size_t>(d.label_id)) << '\t';
      for (std::size_t i = 0; i < d.tokens.size(); ++i) {
        if (i) out << ' ';
        out << corpus.vocab.word(d.tokens[i]);
      }
      out << '\n';
    }
  };
  dump("train", corpus.train);
  dump("val", corpus.val);
  dump("test", corpus.test);
  return out.str();
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  s.train = corpus.train.size();
  s.val = corpus.val.size();
  s.test = corpus.test.size();
  s.classes = corpus.num_classes();
  s.vocab_size = corpus.vocab.size();
  std::size_t tokens = 0, unk = 0, docs = 0;
  for (const auto* part : {&corpus.train, &corpus.val, &corpus.test}) {
    for (const auto& d : *part) {
      ++docs;
      tokens += d.tokens.size();
      unk += static_cast<std::size_t>(std::count(d.tokens.begin(), d.tokens.end(), Vocabulary::kUnk));
    }
  }
  if (docs) s.avg_length = static_cast<double>(tokens) / static_cast<double>(docs);
  if (tokens) s.unk_rate = static_cast<double>(unk) / static_cast<double>(tokens);
  return s;
}

EmbeddingInit random_embeddings(const Vocabulary& vocab, int dim, std::uint64_t seed) {
  if (dim < 1) throw ConfigError("embedding dimension must be >= 1");
  EmbeddingInit init;
  init.dim = dim;
  init.matrix.resize(static_cast<std::size_t>(vocab.size()) * static_cast<std::size_t>(dim));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> uni(-kUniformInitRange, kUniformInitRange);
  for (float& v : init.matrix) v = uni(rng);
  return init;
}

EmbeddingInit load_pretrained_embeddings(const std::filesystem::path& path,
                                         const Vocabulary& vocab, int dim, std::uint64_t seed) {
  EmbeddingInit init = random_embeddings(vocab, dim, seed);
  std::vector<char> found(static_cast<std::size_t>(vocab.size()), 0);

  std::ifstream in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = strip_cr(line);
    if (view.empty()) continue;
    const auto sp = view.find(' ');
    const std::string_view word = view.substr(0, sp);
    std::string_view rest = sp == std::string_view::npos ? std::string_view{} : view.substr(sp + 1);

    int fields = 0;
    for (std::size_t i = 0; i < rest.size();) {
      while (i < rest.size() && rest[i] == ' ') ++i;
      if (i >= rest.size()) break;
      ++fields;
      while (i < rest.size() && rest[i] != ' ') ++i;
    }
    if (fields != dim) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": vector for '" +
                        std::string(word) + "' has " + std::to_string(fields) +
                        " components, expected " + std::to_string(dim));
    }

    const WordId id = vocab.lookup(word);
    if (id == Vocabulary::kUnk || found[static_cast<std::size_t>(id)]) continue;
    float* row = init.matrix.data() + static_cast<std::size_t>(id) * static_cast<std::size_t>(dim);
    const char* p = rest.data();
    const char* end = rest.data() + rest.size();
    for (int t = 0; t < dim; ++t) {
      while (p < end && *p == ' ') ++p;
      auto [next, ec] = std::from_chars(p, end, row[t]);
      if (ec != std::errc()) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": bad number in vector for '" + std::string(word) + "'");
      }
      p = next;
    }
    found[static_cast<std::size_t>(id)] = 1;
  }

  const int named = vocab.size() - 1;
  std::size_t hits = 0;
  for (std::size_t i = 1; i < found.size(); ++i) hits += found[i] ? 1u : 0u;
  init.coverage = named > 0 ? static_cast<double>(hits) / named : 0.0;
  return init;
}

}  // namespace tlgnn
