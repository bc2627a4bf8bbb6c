#include "tlgnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace tlgnn {

namespace {

constexpr char kMagic[4] = {'T', 'G', 'N', 'N'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void floats(const std::vector<float>& xs) {
    for (float x : xs) f32(x);
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<float> floats(std::size_t n) {
    need(n * 4);
    std::vector<float> xs(n);
    for (float& x : xs) x = f32();
    return xs;
  }
  void expect_magic() {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, kMagic, 4) != 0) throw FormatError("not a TGNN checkpoint");
    pos_ += 4;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated checkpoint");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::pair<std::string, std::string> split_pair(const std::string& s) {
  const auto tab = s.find('\t');
  if (tab == std::string::npos) throw FormatError("malformed pair record '" + s + "'");
  return {s.substr(0, tab), s.substr(tab + 1)};
}

WordId word_id(const Vocabulary& vocab, const std::string& word) {
  if (!vocab.contains(word)) throw FormatError("checkpoint refers to unknown word '" + word + "'");
  return vocab.lookup(word);
}

}  // namespace

std::string encode_checkpoint(const ModelBundle& b) {
  b.params.check_consistent();
  if (b.params.shape.vocab_size != b.vocab.size() ||
      static_cast<std::size_t>(b.params.shape.num_edges) != b.edges.parameter_count() ||
      b.params.shape.num_classes != b.labels.size()) {
    throw DataError("checkpoint parts disagree on vocabulary, edge or class counts");
  }
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(b.params.shape.vocab_size));
  w.u32(static_cast<std::uint32_t>(b.params.shape.dim));
  w.u32(static_cast<std::uint32_t>(b.params.shape.num_edges));
  w.u32(static_cast<std::uint32_t>(b.params.shape.num_classes));
  w.floats(b.params.embeddings);
  w.floats(b.params.edge_weights);
  w.floats(b.params.gates);
  w.floats(b.params.dense_w);
  w.floats(b.params.dense_b);

  w.u32(static_cast<std::uint32_t>(b.vocab.size()));
  for (int i = 0; i < b.vocab.size(); ++i) {
    w.str(b.vocab.word(i));
    w.u32(static_cast<std::uint32_t>(b.vocab.frequency(i)));
  }
  w.u32(static_cast<std::uint32_t>(b.vocab.min_freq()));

  w.u32(static_cast<std::uint32_t>(b.edges.named_count()));
  w.u32(b.edges.min_count());
  w.u32(static_cast<std::uint32_t>(b.edges.window()));
  for (std::size_t i = 0; i < b.edges.named().size(); ++i) {
    const EdgePair& p = b.edges.named()[i];
    w.str(b.vocab.word(p.source) + "\t" + b.vocab.word(p.target));
    w.u32(static_cast<std::uint32_t>(i + 1));
  }

  w.u32(static_cast<std::uint32_t>(b.labels.size()));
  for (const auto& name : b.labels.names) w.str(name);

  w.u32(b.config.reduction == Reduction::kMax ? 0u : 1u);
  w.f32(static_cast<float>(b.config.dropout_keep));
  w.u32(b.config.edges_trainable ? 1u : 0u);
  w.u32(static_cast<std::uint32_t>(b.config.mpm_steps));
  w.u32(b.config.readout == ReadoutOrder::kReluBeforeDense ? 0u : 1u);

  w.u32(b.pmi ? 1u : 0u);
  if (b.pmi) {
    w.u32(static_cast<std::uint32_t>(b.pmi->window()));
    w.u32(static_cast<std::uint32_t>(b.pmi->num_windows() & 0xffffffffu));
    w.u32(static_cast<std::uint32_t>(b.pmi->num_windows() >> 32));
    const auto entries = b.pmi->sorted();
    w.u32(static_cast<std::uint32_t>(entries.size()));
    for (const auto& [pair, value] : entries) {
      w.str(b.vocab.word(pair.source) + "\t" + b.vocab.word(pair.target));
      w.f32(static_cast<float>(value));
    }
  }
  return w.take();
}

ModelBundle decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  r.expect_magic();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelBundle b;
  ParamShape& s = b.params.shape;
  s.vocab_size = static_cast<int>(r.u32());
  s.dim = static_cast<int>(r.u32());
  s.num_edges = static_cast<int>(r.u32());
  s.num_classes = static_cast<int>(r.u32());
  const auto v = static_cast<std::size_t>(s.vocab_size);
  const auto d = static_cast<std::size_t>(s.dim);
  const auto c = static_cast<std::size_t>(s.num_classes);
  b.params.embeddings = r.floats(v * d);
  b.params.edge_weights = r.floats(static_cast<std::size_t>(s.num_edges));
  b.params.gates = r.floats(v);
  b.params.dense_w = r.floats(d * c);
  b.params.dense_b = r.floats(c);

  const std::uint32_t n_words = r.u32();
  if (n_words != v || n_words == 0) throw FormatError("vocabulary size disagrees with header");
  std::vector<std::string> words;
  std::vector<std::uint64_t> freqs;
  const std::string unk = r.str();
  if (unk != Vocabulary::kUnkToken) throw FormatError("vocabulary must start with the UNK token");
  const std::uint64_t unk_freq = r.u32();
  for (std::uint32_t i = 1; i < n_words; ++i) {
    words.push_back(r.str());
    freqs.push_back(r.u32());
  }
  const int min_freq = static_cast<int>(r.u32());
  b.vocab = Vocabulary::from_words(words, freqs, unk_freq, min_freq);

  const std::uint32_t n_edges = r.u32();
  const std::uint32_t k = r.u32();
  const int window = static_cast<int>(r.u32());
  if (n_edges + 1 != static_cast<std::uint32_t>(s.num_edges)) {
    throw FormatError("edge vocabulary size disagrees with header");
  }
  std::vector<EdgePair> named(n_edges);
  for (std::uint32_t i = 0; i < n_edges; ++i) {
    auto [a, n] = split_pair(r.str());
    const std::uint32_t index = r.u32();
    if (index < 1 || index > n_edges) throw FormatError("edge index out of range");
    named[index - 1] = {word_id(b.vocab, a), word_id(b.vocab, n)};
  }
  b.edges = EdgeVocabulary::from_pairs(named, k, window);

  const std::uint32_t n_labels = r.u32();
  if (n_labels != c) throw FormatError("label count disagrees with header");
  for (std::uint32_t i = 0; i < n_labels; ++i) b.labels.intern(r.str());

  b.config.reduction = r.u32() == 0 ? Reduction::kMax : Reduction::kMean;
  b.config.dropout_keep = static_cast<double>(r.f32());
  b.config.edges_trainable = r.u32() != 0;
  b.config.mpm_steps = static_cast<int>(r.u32());
  b.config.readout = r.u32() == 0 ? ReadoutOrder::kReluBeforeDense : ReadoutOrder::kReluAfterDense;

  if (r.u32() != 0) {
    PmiTable pmi;
    const int pmi_window = static_cast<int>(r.u32());
    const std::uint64_t lo = r.u32();
    const std::uint64_t hi = r.u32();
    pmi.set_window_stats(pmi_window, lo | (hi << 32));
    const std::uint32_t n_pairs = r.u32();
    for (std::uint32_t i = 0; i < n_pairs; ++i) {
      auto [a, bword] = split_pair(r.str());
      const float value = r.f32();
      pmi.set(word_id(b.vocab, a), word_id(b.vocab, bword), value);
    }
    b.pmi = std::move(pmi);
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint");
  b.params.check_consistent();
  return b;
}

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle) {
  const std::string bytes = encode_checkpoint(bundle);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace tlgnn
