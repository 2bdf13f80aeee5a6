#include <algorithm>
#include <random>
#include <sstream>

#include "atmgad/error.hpp"
#include "atmgad/txgraph.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace atmgad;

namespace {

TransactionGraph parse(const std::string& text, EdgeCsvOptions opts = {}) {
  std::istringstream in(text);
  return parse_edge_list(in, "edges.csv", opts);
}

std::multiset<std::tuple<NodeId, NodeId, Timestamp>> edge_multiset(const TransactionGraph& g) {
  std::multiset<std::tuple<NodeId, NodeId, Timestamp>> s;
  for (const auto& e : g.edges()) s.insert({e.src, e.dst, e.timestamp});
  return s;
}

TransactionGraph labeled_graph(std::size_t n_fraud, std::size_t n_normal) {
  std::size_t n = n_fraud + n_normal;
  std::vector<EdgeRecord> edges;
  for (NodeId v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1, static_cast<Timestamp>(v), std::nullopt});
  std::vector<std::int8_t> labels(n, 0);
  for (std::size_t i = 0; i < n_fraud; ++i) labels[i] = 1;
  return TransactionGraph(n, edges).with_features_labels(Matrix(n, 1), labels);
}

}  // namespace

TEST_CASE("edge list: three rows") {
  auto g = parse("0,1,10\n1,2,20\n0,2,15\n");
  CHECK(g.num_nodes() == 3);
  CHECK(g.num_edges() == 3);
  CHECK(g.tau_max() == 20);
  CHECK(g.t_earliest(0) == 10);
  CHECK(g.t_earliest(1) == 10);
  CHECK(g.t_earliest(2) == 15);
  CHECK(g.edge(1).timestamp == 15);
}

TEST_CASE("edge list: header is optional and amounts are carried") {
  auto g = parse("src,dst,timestamp,amount\n3,1,5,2.5\n");
  CHECK(g.num_nodes() == 4);
  REQUIRE(g.edge(0).amount.has_value());
  CHECK(*g.edge(0).amount == doctest::Approx(2.5));
  CHECK(g.t_earliest(0) == kNoTimestamp);
}

TEST_CASE("edge list: empty input") {
  auto g = parse("");
  CHECK(g.num_edges() == 0);
  CHECK(g.tau_max() == kNoTimestamp);
}

TEST_CASE("edge list: errors") {
  CHECK_THROWS_AS(parse("0,0,5\n"), ValidationError);
  CHECK_THROWS_AS(parse("0,1,-3\n"), ValidationError);
  try {
    parse("0,1,5\n1,x,6\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("0,1\n"), ParseError);
  CHECK_THROWS_AS(parse("0,1,2,abc\n"), ParseError);
}

TEST_CASE("edge list: remapped ids keep first-appearance order") {
  auto g = parse("0xab,0xcd,1\n0xcd,0xef,2\n", EdgeCsvOptions{true});
  CHECK(g.num_nodes() == 3);
  REQUIRE(g.external_ids().size() == 3);
  CHECK(g.external_ids()[0] == "0xab");
  CHECK(g.external_ids()[2] == "0xef");
}

TEST_CASE("edges sort by timestamp, src, dst, then input position") {
  std::vector<EdgeRecord> edges{{2, 1, 5, 1.0}, {1, 2, 5, 2.0}, {1, 2, 5, 3.0}, {0, 1, 1, std::nullopt}};
  TransactionGraph g(3, edges);
  CHECK(g.edge(0).timestamp == 1);
  CHECK(g.edge(1).src == 1);
  CHECK(*g.edge(1).amount == 2.0);
  CHECK(*g.edge(2).amount == 3.0);
  CHECK(g.edge(3).src == 2);
  auto inc = g.incident_edges(1);
  CHECK(std::is_sorted(inc.begin(), inc.end()));
  CHECK(inc.size() == 4);
}

TEST_CASE("edge list round trip reproduces the multiset") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    auto g = oracle::random_graph(rng, 10, 30, 50);
    std::stringstream buf;
    write_edge_list(g, buf);
    auto h = parse_edge_list(buf, "roundtrip");
    CHECK(edge_multiset(g) == edge_multiset(h));
  }
}

TEST_CASE("features and labels") {
  auto g = parse("0,1,10\n1,2,20\n");
  std::istringstream f3("1,2\n3,4\n5,6\n");
  auto x = parse_features(f3, "f.csv", 3);
  CHECK(x.cols == 2);
  std::istringstream f2("1,2\n3,4\n");
  try {
    parse_features(f2, "f.csv", 3);
    FAIL("expected dimension error");
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    CHECK(msg.find("n=3") != std::string::npos);
    CHECK(msg.find("got 2") != std::string::npos);
  }
  std::istringstream l1("node_id,label\n0,1\n1,?\n2,0\n");
  auto y = parse_labels(l1, "l.csv", g);
  CHECK(y == std::vector<std::int8_t>{1, kUnlabeled, 0});
  std::istringstream l2("0,2\n");
  CHECK_THROWS_AS(parse_labels(l2, "l.csv", g), ValidationError);
  auto h = g.with_features_labels(x, y);
  CHECK(h.feature_dim() == 2);
  CHECK(h.labeled_nodes() == std::vector<NodeId>{0, 2});
}

TEST_CASE("normalized adjacency: small cases") {
  TransactionGraph two(2, {{0, 1, 1, std::nullopt}});
  auto a = normalized_adjacency(two).to_dense();
  for (double v : a.data) CHECK(v == doctest::Approx(0.5));
  TransactionGraph one(1, {});
  CHECK(normalized_adjacency(one).to_dense()(0, 0) == 1.0);
}

TEST_CASE("normalized adjacency matches the dense oracle") {
  TransactionGraph path(4, {{0, 1, 1, std::nullopt}, {2, 1, 2, std::nullopt}, {2, 3, 3, std::nullopt},
                            {1, 0, 4, std::nullopt}});
  auto got = normalized_adjacency(path).to_dense();
  auto want = oracle::dense_normalized_adjacency(path);
  for (std::size_t i = 0; i < got.data.size(); ++i) CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-14));

  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    auto g = oracle::random_graph(rng, 12, 40, 100);
    auto s = normalized_adjacency(g).to_dense();
    auto d = oracle::dense_normalized_adjacency(g);
    for (std::size_t i = 0; i < s.rows; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < s.cols; ++j) {
        CHECK(std::abs(s(i, j) - d(i, j)) < 1e-14);
        CHECK(s(i, j) == s(j, i));
        row += s(i, j);
      }
      CHECK(row > 0.0);
    }
  }
}

TEST_CASE("temporal subgraph") {
  std::mt19937_64 rng(5);
  auto g = oracle::random_graph(rng, 10, 50, 1000);
  CHECK(edge_multiset(temporal_subgraph(g, g.tau_max())) == edge_multiset(g));
  std::vector<Timestamp> ts;
  for (const auto& e : g.edges()) ts.push_back(e.timestamp);
  std::sort(ts.begin(), ts.end());
  Timestamp median = ts.empty() ? 0 : ts[ts.size() / 2];
  auto sub = temporal_subgraph(g, median);
  std::multiset<std::tuple<NodeId, NodeId, Timestamp>> want;
  for (const auto& e : g.edges())
    if (e.timestamp <= median) want.insert({e.src, e.dst, e.timestamp});
  CHECK(edge_multiset(sub) == want);
  CHECK(sub.num_nodes() == g.num_nodes());
  CHECK_THROWS_AS(temporal_subgraph(g, -1), ValidationError);

  TransactionGraph late(3, {{0, 1, 5, std::nullopt}, {1, 2, 6, std::nullopt}});
  CHECK(temporal_subgraph(late, 0).num_edges() == 0);

  for (Timestamp a = 0; a < 1000; a += 97) {
    auto s1 = edge_multiset(temporal_subgraph(g, a));
    auto s2 = edge_multiset(temporal_subgraph(g, a + 50));
    CHECK(std::includes(s2.begin(), s2.end(), s1.begin(), s1.end()));
  }
}

TEST_CASE("splits are stratified, disjoint and deterministic") {
  auto g = labeled_graph(5, 5);
  auto splits = make_splits(g, 3, 0.8, 7);
  REQUIRE(splits.size() == 3);
  for (const auto& s : splits) {
    int fraud = 0, normal = 0;
    for (NodeId v : s.train_ids) (g.labels()[v] ? fraud : normal)++;
    CHECK(fraud == 4);
    CHECK(normal == 4);
    CHECK(s.test_ids.size() == 2);
    std::set<NodeId> tr(s.train_ids.begin(), s.train_ids.end());
    for (NodeId v : s.test_ids) CHECK(!tr.count(v));
  }
  CHECK(make_splits(g, 3, 0.8, 7) == splits);

  auto big = labeled_graph(30, 70);
  CHECK(make_splits(big, 1, 0.7, 1)[0] != make_splits(big, 1, 0.7, 2)[0]);

  auto all_normal = labeled_graph(0, 6);
  CHECK_THROWS_AS(make_splits(all_normal, 1, 0.5, 0), ValidationError);
}

TEST_CASE("graph cache round trip and version check") {
  std::mt19937_64 rng(9);
  auto g = oracle::random_graph(rng, 8, 20, 30);
  std::vector<std::int8_t> labels(g.num_nodes(), kUnlabeled);
  labels[0] = 1;
  Matrix x(g.num_nodes(), 2);
  x(1, 1) = 3.5;
  g = g.with_features_labels(x, labels);
  std::stringstream buf;
  save_graph_cache(g, buf);
  std::string bytes = buf.str();
  std::istringstream in(bytes);
  auto h = load_graph_cache(in);
  CHECK(edge_multiset(h) == edge_multiset(g));
  CHECK(h.features() == g.features());
  CHECK(std::equal(h.labels().begin(), h.labels().end(), g.labels().begin(), g.labels().end()));

  std::stringstream again;
  save_graph_cache(h, again);
  CHECK(again.str() == bytes);

  bytes[8] = static_cast<char>(kGraphCacheVersion + 1);
  std::istringstream bad(bytes);
  CHECK_THROWS_AS(load_graph_cache(bad), FormatError);
}

TEST_CASE("bfs subgraph sampling") {
  TransactionGraph g(5, {{0, 1, 1, std::nullopt}, {1, 2, 2, std::nullopt}, {3, 4, 3, std::nullopt}});
  auto s = sample_subgraph_bfs(g, 0, 10);
  CHECK(s.num_nodes() == 3);
  CHECK(s.num_edges() == 2);
  CHECK(sample_subgraph_bfs(g, 0, 2).num_nodes() == 2);
}
