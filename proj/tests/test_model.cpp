#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support/oracles.hpp"
#include "tlgnn/model.hpp"

using namespace tlgnn;

namespace {

struct RandomCase {
  Document doc;
  int p = 1;
  EdgeVocabulary edges;
  ParamsF64 params;
};

// Random document, edge vocabulary from the document itself, random float64 params.
RandomCase random_case(std::mt19937_64& gen, int vocab, int max_len, int dim, int classes) {
  RandomCase rc;
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_int_distribution<int> word(0, vocab - 1);
  std::uniform_int_distribution<int> win(1, 5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int l = len(gen);
  for (int i = 0; i < l; ++i) rc.doc.tokens.push_back(word(gen));
  rc.doc.label_id = static_cast<int>(gen() % static_cast<unsigned>(classes));
  rc.p = win(gen);
  rc.edges = build_edge_vocabulary(count_edge_pairs({rc.doc}, rc.p), 1 + static_cast<std::uint32_t>(gen() % 3), rc.p);

  ParamShape shape{vocab, dim, static_cast<int>(rc.edges.parameter_count()), classes};
  rc.params.shape = shape;
  auto fill = [&](std::vector<double>& xs, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> r(lo, hi);
    xs.resize(n);
    for (double& x : xs) x = r(gen);
  };
  fill(rc.params.embeddings, static_cast<std::size_t>(vocab * dim), -1.0, 1.0);
  fill(rc.params.edge_weights, rc.edges.parameter_count(), -2.0, 2.0);
  fill(rc.params.gates, static_cast<std::size_t>(vocab), 0.0, 1.0);
  fill(rc.params.dense_w, static_cast<std::size_t>(dim * classes), -1.0, 1.0);
  fill(rc.params.dense_b, static_cast<std::size_t>(classes), -0.5, 0.5);
  return rc;
}

ModelConfig eval_config(Reduction r) {
  ModelConfig c;
  c.reduction = r;
  return c;
}

}  // namespace

TEST_CASE("message passing equals the position-scanning reference exactly") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 1000; ++trial) {
    RandomCase rc = random_case(gen, 12, 40, 4, 3);
    TextGraph g = build_text_graph(rc.doc, rc.p, rc.edges);
    for (Reduction r : {Reduction::kMax, Reduction::kMean}) {
      ModelConfig cfg = eval_config(r);
      cfg.mpm_steps = 1 + trial % 2;
      ForwardCache<double> cache;
      message_pass(g, rc.params, cfg, cache);
      auto expected = oracle::message_pass(rc.doc, rc.p, rc.params, r, cfg.mpm_steps,
                                           [&](WordId a, WordId n) { return rc.params.edge_weights[rc.edges.resolve(a, n)]; });
      const auto d = static_cast<std::size_t>(rc.params.shape.dim);
      for (std::size_t n = 0; n < g.num_nodes(); ++n) {
        for (std::size_t t = 0; t < d; ++t) REQUIRE(cache.node_out[n * d + t] == expected[n][t]);
      }
    }
  }
}

TEST_CASE("gate 1 keeps the input representation") {
  std::mt19937_64 gen(2);
  RandomCase rc = random_case(gen, 6, 15, 3, 2);
  std::fill(rc.params.gates.begin(), rc.params.gates.end(), 1.0);
  TextGraph g = build_text_graph(rc.doc, rc.p, rc.edges);
  for (Reduction r : {Reduction::kMax, Reduction::kMean}) {
    ForwardCache<double> cache;
    message_pass(g, rc.params, eval_config(r), cache);
    for (std::size_t n = 0; n < g.num_nodes(); ++n) {
      auto row = rc.params.embedding_row(g.node_words[n]);
      for (std::size_t t = 0; t < 3; ++t) CHECK(cache.node_out[n * 3 + t] == row[t]);
    }
  }
}

TEST_CASE("single node with edge 2 and gate 0 doubles its embedding") {
  ParamsF64 p;
  p.shape = {1, 2, 2, 2};
  p.embeddings = {1.0, -1.0};
  p.edge_weights = {1.0, 2.0};
  p.gates = {0.0};
  p.dense_w = {0, 0, 0, 0};
  p.dense_b = {0, 0};
  Document d{0, {0}};
  EdgeVocabulary edges = build_edge_vocabulary(count_edge_pairs({d}, 1), 1, 1);
  TextGraph g = build_text_graph(d, 1, edges);
  ForwardCache<double> cache;
  message_pass(g, p, eval_config(Reduction::kMax), cache);
  CHECK(cache.node_out == std::vector<double>{2.0, -2.0});
  message_pass(g, p, eval_config(Reduction::kMean), cache);
  CHECK(cache.node_out == std::vector<double>{2.0, -2.0});
}

TEST_CASE("max over a single neighbor equals mean") {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    RandomCase rc = random_case(gen, 5, 1, 4, 2);
    TextGraph g = build_text_graph(rc.doc, rc.p, rc.edges);
    ForwardCache<double> a, b;
    message_pass(g, rc.params, eval_config(Reduction::kMax), a);
    message_pass(g, rc.params, eval_config(Reduction::kMean), b);
    CHECK(a.node_out == b.node_out);
  }
}

TEST_CASE("reduction does not depend on neighbor order") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 100; ++trial) {
    RandomCase rc = random_case(gen, 8, 20, 3, 2);
    TextGraph g = build_text_graph(rc.doc, rc.p, rc.edges);
    TextGraph shuffled = g;
    for (std::size_t n = 0; n < g.num_nodes(); ++n) {
      std::vector<std::uint32_t> perm(g.offsets[n + 1] - g.offsets[n]);
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<std::uint32_t>(i);
      std::shuffle(perm.begin(), perm.end(), gen);
      for (std::size_t i = 0; i < perm.size(); ++i) {
        shuffled.neighbors[g.offsets[n] + i] = g.neighbors[g.offsets[n] + perm[i]];
        shuffled.edge_refs[g.offsets[n] + i] = g.edge_refs[g.offsets[n] + perm[i]];
      }
    }
    ForwardCache<double> a, b;
    message_pass(g, rc.params, eval_config(Reduction::kMax), a);
    message_pass(shuffled, rc.params, eval_config(Reduction::kMax), b);
    CHECK(a.node_out == b.node_out);
    message_pass(g, rc.params, eval_config(Reduction::kMean), a);
    message_pass(shuffled, rc.params, eval_config(Reduction::kMean), b);
    for (std::size_t i = 0; i < a.node_out.size(); ++i) CHECK(a.node_out[i] == doctest::Approx(b.node_out[i]).epsilon(1e-12));
  }
}

TEST_CASE("softmax and cross entropy") {
  std::vector<double> out(2);
  std::vector<double> logits{std::log(2.0), 0.0};
  softmax<double>(logits, out);
  CHECK(out[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  std::vector<double> big{1000.0, 0.0};
  softmax<double>(big, out);
  CHECK(std::isfinite(out[0]));
  CHECK(out[0] + out[1] == doctest::Approx(1.0));
  CHECK(cross_entropy<double>(big, 0) == doctest::Approx(0.0));
  CHECK(cross_entropy<double>(big, 1) == doctest::Approx(1000.0));

  std::vector<double> flat(5, 0.0);
  CHECK(cross_entropy<double>(flat, 3) == doctest::Approx(std::log(5.0)));
  CHECK(argmax_class<double>(std::vector<double>{1.0, 3.0, 3.0}) == 1);

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> l(1 + gen() % 10), p(l.size());
    for (double& x : l) x = u(gen);
    softmax<double>(l, p);
    double s = 0;
    for (double x : p) {
      CHECK(x >= 0.0);
      s += x;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("all-zero representations with zero bias give a uniform prediction") {
  std::mt19937_64 gen(6);
  RandomCase rc = random_case(gen, 5, 10, 3, 4);
  std::fill(rc.params.embeddings.begin(), rc.params.embeddings.end(), 0.0);
  std::fill(rc.params.dense_b.begin(), rc.params.dense_b.end(), 0.0);
  TextGraph g = build_text_graph(rc.doc, rc.p, rc.edges);
  ForwardCache<double> cache;
  const double loss = forward(g, rc.params, eval_config(Reduction::kMax), false, nullptr, cache);
  for (double p : cache.probs) CHECK(p == doctest::Approx(0.25));
  CHECK(loss == doctest::Approx(std::log(4.0)));
}

TEST_CASE("keep probability 1 makes train mode equal eval mode") {
  std::mt19937_64 gen(10);
  for (int trial = 0; trial < 20; ++trial) {
    RandomCase rc = random_case(gen, 6, 12, 4, 3);
    TextGraph g = build_text_graph(rc.doc, rc.p, rc.edges);
    ModelConfig cfg;
    cfg.dropout_keep = 1.0;
    std::mt19937_64 rng(1);
    ForwardCache<double> a, b;
    const double la = forward(g, rc.params, cfg, true, &rng, a);
    const double lb = forward(g, rc.params, cfg, false, nullptr, b);
    CHECK(la == lb);
    CHECK(a.probs == b.probs);
  }
}

TEST_CASE("dropout masks are 0 or 1/keep and reproducible from the generator seed") {
  std::mt19937_64 gen(12);
  RandomCase rc = random_case(gen, 6, 12, 64, 3);
  TextGraph g = build_text_graph(rc.doc, rc.p, rc.edges);
  ModelConfig cfg;
  cfg.dropout_keep = 0.5;
  std::mt19937_64 r1(42), r2(42);
  ForwardCache<double> a, b;
  forward(g, rc.params, cfg, true, &r1, a);
  forward(g, rc.params, cfg, true, &r2, b);
  CHECK(a.dropout_scale == b.dropout_scale);
  for (double s : a.dropout_scale) CHECK((s == 0.0 || s == 2.0));
  CHECK_THROWS_AS(forward(g, rc.params, cfg, true, nullptr, a), ConfigError);
}

TEST_CASE("readout orders differ only in where the ReLU sits") {
  ParamsF64 p;
  p.shape = {1, 1, 1, 2};
  p.embeddings = {-1.0};
  p.edge_weights = {1.0};
  p.gates = {1.0};
  p.dense_w = {-1.0, 2.0};
  p.dense_b = {0.0, 0.0};
  Document d{0, {0}};
  EdgeVocabulary edges;
  TextGraph g = build_text_graph(d, 1, edges);
  ModelConfig cfg;
  ForwardCache<double> cache;
  forward(g, p, cfg, false, nullptr, cache);
  CHECK(cache.logits == std::vector<double>{0.0, 0.0});  // relu(-1) = 0 before the dense map
  cfg.readout = ReadoutOrder::kReluAfterDense;
  forward(g, p, cfg, false, nullptr, cache);
  CHECK(cache.logits == std::vector<double>{1.0, 0.0});  // relu((1, -2))
}

TEST_CASE("fixed-edge mode reads the graph's PMI weights") {
  std::vector<Document> docs = {{0, {0, 1}}, {0, {0, 1}}, {1, {2, 3}}, {1, {2, 4}}};
  PmiTable pmi = compute_pmi_table(docs, 20);
  EdgeVocabulary edges = build_edge_vocabulary(count_edge_pairs(docs, 1), 1, 1);
  ParamsF64 p;
  p.shape = {5, 1, static_cast<int>(edges.parameter_count()), 2};
  p.embeddings = {1, 1, 1, 1, 1};
  p.edge_weights.assign(edges.parameter_count(), 100.0);
  p.gates.assign(5, 0.0);
  p.dense_w = {0, 0};
  p.dense_b = {0, 0};
  ModelConfig cfg = eval_config(Reduction::kMax);
  cfg.edges_trainable = false;
  TextGraph plain = build_text_graph(docs[0], 1, edges);
  ForwardCache<double> cache;
  CHECK_THROWS_AS(message_pass(plain, p, cfg, cache), ConfigError);

  TextGraph g = build_text_graph(docs[0], 1, edges, &pmi);
  message_pass(g, p, cfg, cache);
  const double w = static_cast<double>(static_cast<float>(pmi.value(0, 1)));
  CHECK(cache.node_out[0] == w);  // max(0 * 1, pmi * 1)
  CHECK(cache.node_out[1] == w);
}

TEST_CASE("forward is deterministic across repeated calls") {
  std::mt19937_64 gen(14);
  RandomCase rc = random_case(gen, 10, 30, 5, 3);
  Params pf = rc.params.cast<float>();
  TextGraph g = build_text_graph(rc.doc, rc.p, rc.edges);
  ModelConfig cfg;
  ForwardCache<float> a, b;
  const float la = forward(g, pf, cfg, false, nullptr, a);
  const float lb = forward(g, pf, cfg, false, nullptr, b);
  CHECK(la == lb);
  CHECK(a.probs == b.probs);
}

TEST_CASE("capacity counts") {
  Capacity c = count_capacity(ParamShape{2, 3, 2, 2});
  CHECK(c.edge_param_count == 2);
  CHECK(c.total_param_count == 2 * 3 + 2 + 2 + 3 * 2 + 2);
  CHECK(c.total_param_count == 18);
  CHECK(c.bytes_at_4b == 72);
}

TEST_CASE("initialize_params follows the documented initial values") {
  ParamShape shape{7, 5, 3, 4};
  Params p = initialize_params(shape, nullptr, 9);
  p.check_consistent();
  CHECK(std::all_of(p.edge_weights.begin(), p.edge_weights.end(), [](float x) { return x == 1.0f; }));
  CHECK(std::all_of(p.gates.begin(), p.gates.end(), [](float x) { return x == 0.5f; }));
  CHECK(std::all_of(p.dense_b.begin(), p.dense_b.end(), [](float x) { return x == 0.0f; }));
  CHECK(std::all_of(p.embeddings.begin(), p.embeddings.end(), [](float x) { return std::abs(x) <= 0.01f; }));
  const float bound = std::sqrt(6.0f / 9.0f);
  CHECK(std::all_of(p.dense_w.begin(), p.dense_w.end(), [&](float x) { return std::abs(x) <= bound; }));
  Params q = initialize_params(shape, nullptr, 9);
  CHECK(p.embeddings == q.embeddings);
  CHECK(p.dense_w == q.dense_w);
  CHECK_THROWS_AS(initialize_params(ParamShape{7, 5, 3, 1}, nullptr, 9), ConfigError);
}

TEST_CASE("config parsing") {
  CHECK(parse_reduction("mean") == Reduction::kMean);
  CHECK(parse_readout_order("dense-relu") == ReadoutOrder::kReluAfterDense);
  CHECK_THROWS_AS(parse_reduction("sum"), ConfigError);
  ModelConfig bad;
  bad.dropout_keep = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
