#include <cmath>
#include <random>

#include "atmgad/error.hpp"
#include "atmgad/model.hpp"
#include "atmgad/synth.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace atmgad;
using diff::Tape;
using diff::Tensor;

namespace {

void fill(Tensor& t, double v) {
  for (auto& x : t.data()) x = v;
}

Matrix relu(Matrix m) {
  for (auto& x : m.data) x = std::max(0.0, x);
  return m;
}

// Ten nodes, a few triangles, integer timestamps.
TransactionGraph fixture() {
  std::vector<EdgeRecord> e{
      {0, 1, 1, std::nullopt}, {1, 2, 2, std::nullopt}, {2, 0, 3, std::nullopt}, {0, 3, 4, std::nullopt},
      {3, 1, 5, std::nullopt}, {4, 5, 2, std::nullopt}, {5, 6, 6, std::nullopt}, {6, 4, 7, std::nullopt},
      {4, 6, 9, std::nullopt}, {7, 8, 3, std::nullopt}, {8, 0, 8, std::nullopt}, {0, 7, 10, std::nullopt},
      {2, 3, 11, std::nullopt}, {5, 4, 12, std::nullopt},
  };
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix x(10, 3);
  for (auto& v : x.data) v = n(rng);
  std::vector<std::int8_t> y{1, 0, 0, 1, 0, 0, 1, 0, 0, 0};
  return TransactionGraph(10, e).with_features_labels(x, y);
}

ModelConfig small_config(Ablation a = Ablation::full) {
  ModelConfig c;
  c.gcn.layers = 2;
  c.gcn.hidden_dim = 16;
  c.gcn.out_dim = 4;
  c.gcn.dropout = 0.0;
  c.head.window_hidden = 5;
  c.head.classifier_hidden = 6;
  c.ablation = a;
  return c;
}

std::vector<double> row(const Matrix& m, std::size_t r) {
  return {m.data.begin() + static_cast<std::ptrdiff_t>(r * m.cols),
          m.data.begin() + static_cast<std::ptrdiff_t>((r + 1) * m.cols)};
}

}  // namespace

TEST_CASE("ablation names round trip") {
  for (auto a : {Ablation::gcn_only, Ablation::tm_fixed, Ablation::tm_ada, Ablation::tm_ada_intra,
                 Ablation::tm_ada_inter, Ablation::full})
    CHECK(ablation_from_string(to_string(a)) == a);
  CHECK_THROWS_AS(ablation_from_string("nope"), ValidationError);
  auto f = flags_of(Ablation::tm_ada_inter);
  CHECK((f.motifs && f.adaptive && !f.intra && f.inter));
}

TEST_CASE("adaptive window examples") {
  std::mt19937_64 rng(1);
  WindowLearner w(3, 4, rng);
  std::vector<double> h{0.3, -0.2, 0.9};
  for (Tensor* t : {&w.w1, &w.b1, &w.w2, &w.b2}) fill(*t, 0.0);
  CHECK(adaptive_window(h, w, 100.0) == doctest::Approx(50.0));
  w.b2.data()[0] = -20.0;
  double d = adaptive_window(h, w, 100.0);
  CHECK(d > 0.0);
  CHECK(d == doctest::Approx(100.0 * sigmoid(-20.0)));
  w.b2.data()[0] = 800.0;
  CHECK(adaptive_window(h, w, 100.0) < 100.0);
  w.b2.data()[0] = -800.0;
  CHECK(adaptive_window(h, w, 100.0) > 0.0);
  CHECK_THROWS_AS(adaptive_window(h, w, 0.0), ValidationError);
}

TEST_CASE("adaptive window matches a scalar oracle") {
  std::mt19937_64 rng(2);
  WindowLearner w(3, 4, rng);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  for (Tensor* t : {&w.w1, &w.b1, &w.w2, &w.b2})
    for (auto& x : t->data()) x = u(rng);
  std::vector<double> h{0.5, 1.5, -2.0};
  double f = w.b2.data()[0];
  for (std::size_t j = 0; j < 4; ++j) {
    double a = w.b1.data()[j];
    for (std::size_t i = 0; i < 3; ++i) a += h[i] * w.w1.data()[i * 4 + j];
    f += std::tanh(a) * w.w2.data()[j];
  }
  CHECK(std::abs(adaptive_window(h, w, 37.0) - 37.0 / (1.0 + std::exp(-f))) < 1e-12);
}

TEST_CASE("intra-instance attention") {
  std::vector<std::vector<double>> same(4, std::vector<double>{1.5, -2.0});
  std::vector<double> w{0.7, 0.3};
  auto out = intra_instance_embedding(same, w);
  CHECK(out[0] == doctest::Approx(1.5));
  CHECK(out[1] == doctest::Approx(-2.0));

  std::vector<std::vector<double>> m{{1.0, 0.0}, {0.0, 2.0}, {3.0, 1.0}, {-1.0, 1.0}};
  std::vector<double> zero{0.0, 0.0};
  auto mean = intra_instance_embedding(m, zero);
  CHECK(mean[0] == doctest::Approx(0.75));
  CHECK(mean[1] == doctest::Approx(1.0));

  std::vector<std::vector<double>> scalar{{0.2}, {-1.0}, {0.5}, {2.0}};
  std::vector<double> ws{0.8};
  double num = 0.0, den = 0.0;
  for (const auto& s : scalar) {
    double e = std::exp(std::tanh(s[0] * ws[0]));
    num += e * s[0];
    den += e;
  }
  CHECK(std::abs(intra_instance_embedding(scalar, ws)[0] - num / den) < 1e-12);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::vector<double>> r(4, std::vector<double>(3));
    for (auto& v : r)
      for (auto& x : v) x = n(rng);
    std::vector<double> wr{n(rng), n(rng), n(rng)};
    auto e = intra_instance_embedding(r, wr);
    for (std::size_t j = 0; j < 3; ++j) {
      double lo = r[0][j], hi = r[0][j];
      for (const auto& v : r) {
        lo = std::min(lo, v[j]);
        hi = std::max(hi, v[j]);
      }
      CHECK(e[j] >= lo - 1e-12);
      CHECK(e[j] <= hi + 1e-12);
    }
  }
  std::vector<std::vector<double>> three(3, std::vector<double>{1.0});
  CHECK_THROWS_AS(intra_instance_embedding(three, ws), ShapeError);
}

TEST_CASE("instance recency weight") {
  CHECK(instance_weight(5.0, 13.0, 10.0) == doctest::Approx(0.8807970779778823).epsilon(1e-12));
  CHECK(instance_weight(3.0, 13.0, 10.0) == doctest::Approx(0.5));
  double prev = 0.0;
  for (double d = 0.5; d < 20.0; d += 0.5) {
    double w = instance_weight(d, 13.0, 10.0);
    CHECK(w > prev);
    prev = w;
  }
  CHECK(instance_weight(4.0, 12.0, 10.0) > instance_weight(4.0, 16.0, 10.0));
}

TEST_CASE("type embedding is a weighted average") {
  Matrix inst(2, 2);
  inst(0, 0) = 1.0;
  inst(1, 1) = 1.0;
  std::vector<double> w{1.0, 3.0};
  auto e = type_embedding(inst, w);
  CHECK(e[0] == doctest::Approx(0.25));
  CHECK(e[1] == doctest::Approx(0.75));
  Matrix one(1, 3, 2.0);
  std::vector<double> w1{0.01};
  for (double x : type_embedding(one, w1)) CHECK(x == doctest::Approx(2.0));
  CHECK_THROWS_AS(type_embedding(Matrix(0, 2), std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(type_embedding(inst, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("inter-type sparsemax example") {
  // Scores after tanh are 0.9, 0.8 and 0.3.
  Matrix types(3, 2);
  Matrix w(3, 2);
  const double s[3] = {0.9, 0.8, 0.3};
  for (std::size_t i = 0; i < 3; ++i) {
    types(i, 0) = 1.0;
    types(i, 1) = static_cast<double>(i);
    w(i, 0) = std::atanh(s[i]);
  }
  auto r = inter_embedding(types, w);
  CHECK(r.beta[0] == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(r.beta[1] == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(r.beta[2] == 0.0);
  CHECK(r.embedding[0] == doctest::Approx(1.0));
  CHECK(r.embedding[1] == doctest::Approx(0.45));

  Matrix single(1, 2, 0.5);
  auto one = inter_embedding(single, Matrix(1, 2, 9.0));
  CHECK(one.beta[0] == 1.0);
  CHECK_THROWS_AS(inter_embedding(Matrix(0, 2), Matrix(0, 2)), ValidationError);
}

TEST_CASE("inter-type weights stay on the simplex and are often sparse") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 3.0);
  int sparse = 0;
  for (int t = 0; t < 200; ++t) {
    Matrix types(6, 3), w(6, 3);
    for (auto& x : types.data) x = n(rng);
    for (auto& x : w.data) x = n(rng);
    auto r = inter_embedding(types, w);
    double sum = 0.0;
    bool any_zero = false;
    for (double b : r.beta) {
      CHECK(b >= 0.0);
      sum += b;
      any_zero |= b == 0.0;
    }
    CHECK(sum == doctest::Approx(1.0));
    sparse += any_zero;
  }
  CHECK(sparse > 100);
}

TEST_CASE("motif batch layout") {
  auto g = fixture();
  const auto& cat = build_catalog(CatalogMode::focal_rooted);
  auto index = build_index(g, std::vector<double>(10, 12.0), cat, {0, 1, 0});
  const std::vector<NodeId> nodes{0, 9, 4};
  auto b = make_motif_batch(index, g, nodes);
  CHECK(b.node_offsets.size() == 4);
  CHECK(b.member_rows.size() == 4 * b.num_instances());
  CHECK(b.node_offsets[1] - b.node_offsets[0] == index.at(0).size());
  CHECK(b.node_offsets[2] == b.node_offsets[1]);  // node 9 is isolated
  CHECK(b.type_offsets.back() == b.num_instances());
  for (std::size_t i = 0; i < b.num_instances(); ++i) {
    CHECK(b.member_rows[4 * i] < cat.size());
    CHECK(b.member_rows[4 * i + 1] == cat.size() + b.instance_owner[i]);
    CHECK(b.neg_gaps[i] <= 0.0);
  }
  auto e = make_empty_batch(nodes);
  CHECK(e.num_instances() == 0);
  CHECK(e.node_offsets == diff::Offsets{0, 0, 0, 0});
}

TEST_CASE("node forward matches a step-by-step oracle") {
  auto g = fixture();
  AtmGadModel model(3, small_config(), 11);
  const auto& cat = model.catalog();
  auto a_hat = normalized_adjacency(g);
  Tensor x(g.features());
  const double tau = static_cast<double>(g.tau_max());
  ModelInputs in{x, a_hat, tau, tau / 2};
  auto index = build_index(g, std::vector<double>(10, 8.0), cat, {0, 1, 0});

  auto ad = oracle::dense_normalized_adjacency(g);
  auto& W = model.backbone().weights();
  Matrix h = oracle::dense_matmul(ad, oracle::dense_matmul(relu(oracle::dense_matmul(ad, oracle::dense_matmul(
                                                                       g.features(), W[0].to_matrix()))),
                                                               W[1].to_matrix()));
  const auto& att = model.attention();
  const Matrix sup = att.supernodes.to_matrix();
  const Matrix w_inter = att.w_inter.to_matrix();
  std::vector<double> w_intra(att.w_intra.data().begin(), att.w_intra.data().end());

  int checked_with_motifs = 0;
  for (NodeId v = 0; v < 10; ++v) {
    auto out = model.node_forward(v, in, index, g);
    std::vector<double> want = row(h, v);
    std::vector<double> motif(4, 0.0);
    const auto& types = index.at(v);
    if (!types.empty()) {
      ++checked_with_motifs;
      double delta = adaptive_window(row(h, v), model.window_learner(), tau);
      Matrix type_rows(types.size(), 4), w_rows(types.size(), 4);
      for (std::size_t k = 0; k < types.size(); ++k) {
        const auto& ti = types[k];
        Matrix inst(ti.instances.size(), 4);
        std::vector<double> weights;
        for (std::size_t i = 0; i < ti.instances.size(); ++i) {
          const auto& mi = ti.instances[i];
          std::vector<std::vector<double>> members{row(sup, ti.type), row(h, v)};
          for (NodeId u : mi.nodes)
            if (u != v) members.push_back(row(h, u));
          auto e = intra_instance_embedding(members, w_intra);
          for (std::size_t j = 0; j < 4; ++j) inst(i, j) = e[j];
          weights.push_back(instance_weight(delta, static_cast<double>(mi.tau_max),
                                            static_cast<double>(g.t_earliest(v))));
        }
        auto te = type_embedding(inst, weights);
        for (std::size_t j = 0; j < 4; ++j) {
          type_rows(k, j) = te[j];
          w_rows(k, j) = w_inter(ti.type, j);
        }
      }
      motif = inter_embedding(type_rows, w_rows).embedding;
    }
    want.insert(want.end(), motif.begin(), motif.end());
    REQUIRE(out.z.size() == 8);
    for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(out.z[j] - want[j]) < 1e-10);
  }
  CHECK(checked_with_motifs >= 6);
  CHECK(index.at(9).empty());
}

TEST_CASE("node without motifs gets a zero motif embedding") {
  auto g = fixture();
  AtmGadModel model(3, small_config(), 5);
  auto a_hat = normalized_adjacency(g);
  Tensor x(g.features());
  ModelInputs in{x, a_hat, 12.0, 6.0};
  auto index = build_index(g, std::vector<double>(10, 12.0), model.catalog(), {0, 1, 0});
  auto out = model.node_forward(9, in, index, g);
  for (std::size_t j = 4; j < 8; ++j) CHECK(out.z[j] == 0.0);
  auto& c = model.classifier();
  for (Tensor* t : {&c.w1, &c.b1, &c.w2, &c.b2}) fill(*t, 0.0);
  CHECK(model.node_forward(0, in, index, g).y_hat == 0.5);
  CHECK_THROWS_AS(model.node_forward(10, in, index, g), ValidationError);
}

TEST_CASE("deltas stay inside the open window range") {
  auto g = fixture();
  AtmGadModel model(3, small_config(), 6);
  auto a_hat = normalized_adjacency(g);
  Tensor x(g.features());
  ModelInputs in{x, a_hat, 12.0, 6.0};
  fill(model.window_learner().b2, 1e4);
  for (double d : model.compute_deltas(in)) {
    CHECK(d > 0.0);
    CHECK(d < 12.0);
  }
  AtmGadModel fixed(3, small_config(Ablation::tm_fixed), 6);
  for (double d : fixed.compute_deltas(in)) CHECK(d == 6.0);
}

TEST_CASE("uniform attention in the reduced variants") {
  auto g = fixture();
  auto a_hat = normalized_adjacency(g);
  Tensor x(g.features());
  ModelInputs in{x, a_hat, 12.0, 6.0};
  AtmGadModel model(3, small_config(Ablation::tm_fixed), 8);
  auto index = build_index(g, std::vector<double>(10, 12.0), model.catalog(), {0, 1, 0});
  Tape t;
  Tensor h = model.backbone().forward(t, x, a_hat, false, nullptr);
  Matrix hm = h.to_matrix();
  // Node 8 has a single instance: the mean of its three member embeddings.
  REQUIRE(index.instance_count(8) == 1);
  const auto& inst = index.at(8)[0].instances[0];
  auto out = model.node_forward(8, in, index, g);
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = (hm(inst.nodes[0], j) + hm(inst.nodes[1], j) + hm(inst.nodes[2], j)) / 3.0;
    CHECK(std::abs(out.z[4 + j] - mean) < 1e-12);
  }
}

TEST_CASE("gradients reach every head parameter") {
  // Windows only move the relative recency weights, so the graph needs
  // several instances of one type at different gaps.
  auto g = synth_burst_graph(60, 0.2, 20, 3);
  AtmGadModel model(g.feature_dim(), small_config(), 12);
  auto a_hat = normalized_adjacency(g);
  Tensor x(g.features());
  const double tau = static_cast<double>(g.tau_max());
  ModelInputs in{x, a_hat, tau, tau / 2};
  auto index = build_index(g, std::vector<double>(g.num_nodes(), tau / 4), model.catalog(), {0, 1, 0});
  auto nodes = g.labeled_nodes();
  auto batch = make_motif_batch(index, g, nodes);
  std::vector<double> targets;
  for (NodeId v : nodes) targets.push_back(g.labels()[v]);
  Tape t;
  auto r = model.forward(t, in, batch, false, nullptr);
  t.backward(t.bce_with_logits(r.logits, targets));
  for (const auto& p : model.named_parameters()) {
    double norm = 0.0;
    for (double gr : p.tensor.grad()) norm += gr * gr;
    INFO(p.name);
    CHECK(norm > 0.0);
  }
}

TEST_CASE("full model passes a finite-difference check") {
  auto g = fixture();
  auto a_hat = normalized_adjacency(g);
  Tensor x(g.features());
  ModelInputs in{x, a_hat, 12.0, 6.0};
  std::vector<NodeId> nodes{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<double> targets;
  for (NodeId v : nodes) targets.push_back(g.labels()[v]);
  for (auto a : {Ablation::full, Ablation::tm_ada, Ablation::tm_fixed, Ablation::gcn_only}) {
    AtmGadModel model(3, small_config(a), 13);
    auto index = build_index(g, std::vector<double>(10, 12.0), model.catalog(), {0, 1, 0});
    auto batch = make_motif_batch(index, g, nodes);
    auto loss = [&](Tape& t) { return t.bce_with_logits(model.forward(t, in, batch, false, nullptr).logits, targets); };
    auto params = model.parameters();
    std::vector<Tensor> used;
    for (const auto& p : params) used.push_back(p);
    INFO(to_string(a));
    CHECK(diff::finite_difference_check(loss, used, {1e-6, 0, 0}) < 1e-4);
  }
}
