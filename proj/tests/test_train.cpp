#include <algorithm>
#include <filesystem>
#include <random>

#include "atmgad/error.hpp"
#include "atmgad/metrics.hpp"
#include "atmgad/synth.hpp"
#include "atmgad/train.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace atmgad;

namespace {

// Label 1 iff the first feature is positive; no edges, so A_hat = I.
TransactionGraph separable(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  Matrix x(n, 2);
  std::vector<std::int8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 4 == 0;
    x(i, 0) = (y[i] ? 2.0 : -2.0) + noise(rng);
    x(i, 1) = noise(rng);
  }
  return TransactionGraph(n, {}).with_features_labels(x, y);
}

ModelConfig small_model(Ablation a) {
  ModelConfig m;
  m.gcn.hidden_dim = 16;
  m.gcn.out_dim = 8;
  m.gcn.dropout = 0.0;
  m.head.window_hidden = 8;
  m.head.classifier_hidden = 8;
  m.ablation = a;
  return m;
}

TrainConfig quick(Ablation a, int epochs, double lr = 1e-2) {
  TrainConfig c;
  c.ablation = a;
  c.epochs = epochs;
  c.learning_rate = lr;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("auc and auprc on small examples") {
  std::vector<double> s{0.9, 0.8, 0.3, 0.1};
  std::vector<std::int8_t> y{1, 0, 1, 0};
  CHECK(auc(s, y) == doctest::Approx(0.75));
  CHECK(auprc(s, y) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(accuracy(s, y) == doctest::Approx(0.5));

  std::vector<double> ties{0.5, 0.5, 0.5};
  std::vector<std::int8_t> yt{1, 0, 0};
  CHECK(auc(ties, yt) == 0.5);
  CHECK(auprc(ties, yt) == doctest::Approx(1.0 / 3.0));

  std::vector<double> perfect{0.9, 0.1};
  std::vector<std::int8_t> yp{1, 0};
  CHECK(auc(perfect, yp) == 1.0);
  CHECK(auprc(perfect, yp) == 1.0);

  std::vector<std::int8_t> one_class{1, 1};
  CHECK_THROWS_AS(auc(perfect, one_class), ValidationError);
  CHECK_THROWS_AS(auprc(perfect, one_class), ValidationError);
  std::vector<std::int8_t> short_labels{1};
  CHECK_THROWS_AS(auc(perfect, short_labels), ValidationError);
}

TEST_CASE("metrics agree with the oracles and ignore order") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> level(0, 6);
  for (int t = 0; t < 100; ++t) {
    std::size_t n = 5 + t % 20;
    std::vector<double> s(n);
    std::vector<std::int8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = level(rng) / 6.0;  // coarse grid, lots of ties
      y[i] = static_cast<std::int8_t>(i % 3 == 0);
    }
    CHECK(std::abs(auc(s, y) - oracle::auc_pairs(s, y)) < 1e-12);
    CHECK(std::abs(auprc(s, y) - oracle::auprc_thresholds(s, y)) < 1e-12);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> ps(n);
    std::vector<std::int8_t> py(n);
    for (std::size_t i = 0; i < n; ++i) {
      ps[i] = s[perm[i]];
      py[i] = y[perm[i]];
    }
    CHECK(auc(ps, py) == doctest::Approx(auc(s, y)));
    CHECK(auprc(ps, py) == doctest::Approx(auprc(s, y)));
    CHECK(accuracy(ps, py) == doctest::Approx(accuracy(s, y)));
  }
}

TEST_CASE("adam leaves parameters alone without gradient") {
  diff::Tensor p(2, 2, {1.0, 2.0, 3.0, 4.0}, true);
  Adam opt({p}, 0.1);
  opt.zero_grad();
  opt.step();
  CHECK(p.data()[0] == 1.0);
  CHECK(p.data()[3] == 4.0);
  CHECK(opt.steps() == 1);
  p.grad()[0] = 1.0;
  opt.step();
  CHECK(p.data()[0] < 1.0);
  CHECK(p.data()[1] == 2.0);
}

TEST_CASE("adam first step moves by the learning rate") {
  diff::Tensor p(1, 1, {0.0}, true);
  Adam opt({p}, 0.01);
  p.grad()[0] = -3.0;
  opt.step();
  CHECK(p.data()[0] == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("synthetic burst graph") {
  auto g = synth_burst_graph(300, 0.1, 20, 1);
  CHECK(g.num_nodes() == 300);
  int fraud = 0;
  for (auto l : g.labels()) fraud += l == 1;
  CHECK(fraud == 30);
  CHECK(g.feature_dim() == 8);
  auto h = synth_burst_graph(300, 0.1, 20, 1);
  CHECK(std::ranges::equal(g.edges(), h.edges()));
  CHECK(g.features() == h.features());
  auto other = synth_burst_graph(300, 0.1, 20, 2);
  CHECK_FALSE(std::ranges::equal(other.edges(), g.edges()));
  SynthConfig bad;
  bad.fraud_fraction = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("config validation") {
  TrainConfig c;
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = TrainConfig{};
  c.learning_rate = -1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = TrainConfig{};
  c.optimizer = "sgd";
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = TrainConfig{};
  c.delta_fixed = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("delta statistics") {
  std::vector<double> d{1.0, 2.0, 3.0, 6.0};
  std::vector<std::int8_t> y{1, 0, kUnlabeled, 1};
  auto s = delta_stats(d, y);
  CHECK(s.min == 1.0);
  CHECK(s.max == 6.0);
  CHECK(s.mean == 3.0);
  CHECK(s.mean_fraud == 3.5);
  CHECK(s.mean_normal == 2.0);
}

TEST_CASE("backbone alone separates linearly separable features") {
  auto g = separable(40, 1);
  auto split = make_splits(g, 1, 0.75, 0)[0];
  auto r = train(g, split, small_model(Ablation::gcn_only), quick(Ablation::gcn_only, 150));
  CHECK(r.report.train.auc == 1.0);
  CHECK(r.report.test.auc == 1.0);
  CHECK(r.report.loss_curve.size() == 150);
  CHECK(r.report.loss_curve.back() < r.report.loss_curve.front());
  CHECK(r.report.delta_stats.empty());
}

TEST_CASE("training is deterministic and the loss drops") {
  auto g = synth_burst_graph(120, 0.1, 20, 4);
  auto split = make_splits(g, 1, 0.7, 4)[0];
  auto c = quick(Ablation::full, 10);
  auto a = train(g, split, small_model(Ablation::full), c);
  auto b = train(g, split, small_model(Ablation::full), c);
  CHECK(a.report.loss_curve == b.report.loss_curve);
  CHECK(a.state.deltas == b.state.deltas);
  CHECK(a.report.loss_curve.back() < a.report.loss_curve.front());
  CHECK(a.report.refreshes == 1);
  REQUIRE(a.report.delta_stats.size() == 10);
  for (const auto& s : a.report.delta_stats) {
    CHECK(s.min > 0.0);
    CHECK(s.max < static_cast<double>(g.tau_max()));
  }
}

TEST_CASE("fixed-window variant uses the configured window") {
  auto g = synth_burst_graph(120, 0.1, 20, 5);
  auto split = make_splits(g, 1, 0.7, 5)[0];
  auto c = quick(Ablation::tm_fixed, 3);
  c.delta_fixed = 40.0;
  auto r = train(g, split, small_model(Ablation::tm_fixed), c);
  CHECK(r.state.fixed_delta == 40.0);
  for (NodeId v : r.state.indexed_nodes) CHECK(r.state.extraction_windows[v] == 40.0);
  c.delta_fixed = 1e9;
  auto capped = train(g, split, small_model(Ablation::tm_fixed), c);
  CHECK(capped.state.fixed_delta == static_cast<double>(g.tau_max()));
}

TEST_CASE("scoped windows stay below the scope") {
  auto g = synth_burst_graph(120, 0.1, 20, 6);
  auto split = make_splits(g, 1, 0.7, 6)[0];
  auto c = quick(Ablation::tm_ada, 5);
  c.delta_scope = 30.0;
  auto r = train(g, split, small_model(Ablation::tm_ada), c);
  CHECK(r.state.tau_max == 30.0);
  for (double d : r.state.deltas) CHECK((d > 0.0 && d < 30.0));
  for (NodeId v : r.state.indexed_nodes) CHECK(r.state.extraction_windows[v] <= 30.0);
}

TEST_CASE("training rejects unusable inputs") {
  auto g = synth_burst_graph(60, 0.1, 20, 7);
  auto split = make_splits(g, 1, 0.7, 7)[0];
  TransactionGraph bare(g.num_nodes(), std::vector<EdgeRecord>(g.edges().begin(), g.edges().end()));
  CHECK_THROWS_AS(train(bare, split, small_model(Ablation::full), quick(Ablation::full, 2)), ValidationError);
  SplitSpec unlabeled = split;
  unlabeled.train_ids.push_back(static_cast<NodeId>(g.num_nodes()));
  CHECK_THROWS_AS(train(g, unlabeled, small_model(Ablation::full), quick(Ablation::full, 2)), ValidationError);
  SplitSpec empty;
  CHECK_THROWS_AS(train(g, empty, small_model(Ablation::full), quick(Ablation::full, 2)), ValidationError);
}

TEST_CASE("checkpoint round trip reproduces predictions") {
  auto g = synth_burst_graph(120, 0.1, 20, 8);
  auto split = make_splits(g, 1, 0.7, 8)[0];
  auto r = train(g, split, small_model(Ablation::full), quick(Ablation::full, 6));
  auto dir = std::filesystem::temp_directory_path() / "atmgad_ckpt_test";
  std::filesystem::create_directories(dir);
  auto path = dir / "model.ckpt";
  save_checkpoint(r.state, path);
  auto loaded = load_checkpoint(path);
  CHECK(loaded.deltas == r.state.deltas);
  CHECK(loaded.extraction_windows == r.state.extraction_windows);
  CHECK(loaded.model.config().ablation == Ablation::full);
  CHECK(predict(loaded, g, split.test_ids) == predict(r.state, g, split.test_ids));
  auto m = evaluate(loaded, g, split.test_ids);
  CHECK(m.auc == r.report.test.auc);
  CHECK(m.auprc == r.report.test.auprc);
  CHECK(evaluate(loaded, g, split.train_ids).auc == r.report.train.auc);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
}
