#include "atmgad/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "atmgad/error.hpp"

namespace atmgad {

void SynthConfig::validate() const {
  if (n_nodes < 10) throw ValidationError("synth: n_nodes must be at least 10");
  if (!(fraud_fraction > 0.0 && fraud_fraction <= 0.5)) throw ValidationError("synth: fraud_fraction must lie in (0, 0.5]");
  if (burst_len <= 0 || horizon <= burst_len) throw ValidationError("synth: need 0 < burst_len < horizon");
  if (!(avg_degree >= 2.0)) throw ValidationError("synth: avg_degree must be at least 2");
  if (community_size < 3) throw ValidationError("synth: community_size must be at least 3");
  if (chains_per_fraud < 1) throw ValidationError("synth: chains_per_fraud must be positive");
  if (feature_dim < 2) throw ValidationError("synth: feature_dim must be at least 2");
  if (!(feature_noise >= 0.0)) throw ValidationError("synth: feature_noise must be non-negative");
}

TransactionGraph synth_burst_graph(const SynthConfig& c) {
  c.validate();
  std::mt19937_64 rng(c.seed);
  const std::size_t n = c.n_nodes;
  const auto n_fraud = static_cast<std::size_t>(std::llround(c.fraud_fraction * static_cast<double>(n)));
  if (n_fraud == 0 || n_fraud >= n) throw ValidationError("synth: fraud fraction leaves an empty class");

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::int8_t> labels(n, 0);
  for (std::size_t i = 0; i < n_fraud; ++i) labels[order[i]] = 1;
  std::vector<NodeId> normals(order.begin() + static_cast<std::ptrdiff_t>(n_fraud), order.end());
  std::sort(normals.begin(), normals.end());

  // Communities are consecutive runs in the sorted normal list.
  const std::size_t n_normal = normals.size();
  auto community_of = [&](std::size_t pos) { return pos / c.community_size; };

  std::uniform_int_distribution<Timestamp> any_time(0, c.horizon);
  std::lognormal_distribution<double> amount(3.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_normal(0, n_normal - 1);
  std::bernoulli_distribution local(0.8);
  std::vector<EdgeRecord> edges;

  const double out_mean = c.avg_degree / 2.0;
  const auto out_lo = static_cast<int>(std::max(1.0, std::floor(out_mean - 1.0)));
  const auto out_hi = static_cast<int>(std::ceil(out_mean + 1.0));
  std::uniform_int_distribution<int> out_count(out_lo, out_hi);

  for (std::size_t pos = 0; pos < n_normal; ++pos) {
    NodeId u = normals[pos];
    std::size_t cbeg = community_of(pos) * c.community_size;
    std::size_t cend = std::min(cbeg + c.community_size, n_normal);
    int k = out_count(rng);
    for (int e = 0; e < k; ++e) {
      std::size_t other = pos;
      while (other == pos) {
        if (local(rng) && cend - cbeg > 1)
          other = std::uniform_int_distribution<std::size_t>(cbeg, cend - 1)(rng);
        else
          other = any_normal(rng);
      }
      edges.push_back({u, normals[other], any_time(rng), amount(rng)});
    }
  }

  std::uniform_int_distribution<Timestamp> offset(0, c.burst_len);
  std::bernoulli_distribution coin(0.5);
  const double fraud_degree_target = c.avg_degree;
  for (std::size_t i = 0; i < n_fraud; ++i) {
    NodeId v = order[i];
    Timestamp b = std::uniform_int_distribution<Timestamp>(0, c.horizon - c.burst_len)(rng);
    for (int ch = 0; ch < c.chains_per_fraud; ++ch) {
      NodeId payer = normals[any_normal(rng)];
      NodeId ben = payer;
      while (ben == payer) ben = normals[any_normal(rng)];
      std::array<Timestamp, 3> ts{b + offset(rng), b + offset(rng), b + offset(rng)};
      std::sort(ts.begin(), ts.end());
      edges.push_back({payer, v, ts[0], amount(rng)});
      edges.push_back({v, ben, ts[1], amount(rng)});
      if (coin(rng))
        edges.push_back({v, ben, ts[2], amount(rng)});
      else
        edges.push_back({payer, v, ts[2], amount(rng)});
    }
    // Sparse trading after the burst tops the degree up to the normal level.
    const auto rest = static_cast<int>(
        std::max(0.0, std::round(fraud_degree_target - 3.0 * static_cast<double>(c.chains_per_fraud))));
    Timestamp after = b + c.burst_len + 1;
    if (after <= c.horizon) {
      std::uniform_int_distribution<Timestamp> later(after, c.horizon);
      for (int e = 0; e < rest; ++e) {
        NodeId other = normals[any_normal(rng)];
        if (coin(rng))
          edges.push_back({v, other, later(rng), amount(rng)});
        else
          edges.push_back({other, v, later(rng), amount(rng)});
      }
    }
  }

  TransactionGraph g(n, std::move(edges));

  std::vector<double> volume(n, 0.0);
  for (const auto& e : g.edges()) {
    volume[e.src] += *e.amount;
    volume[e.dst] += *e.amount;
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix x(n, c.feature_dim);
  for (NodeId v = 0; v < n; ++v) {
    x(v, 0) = std::log1p(static_cast<double>(g.degree(v))) + c.feature_noise * noise(rng);
    x(v, 1) = std::log1p(volume[v]) + c.feature_noise * noise(rng);
    for (std::size_t j = 2; j < c.feature_dim; ++j) x(v, j) = noise(rng);
  }
  for (std::size_t j = 0; j < c.feature_dim; ++j) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t v = 0; v < n; ++v) mean += x(v, j);
    mean /= static_cast<double>(n);
    for (std::size_t v = 0; v < n; ++v) sq += (x(v, j) - mean) * (x(v, j) - mean);
    double sd = std::sqrt(sq / static_cast<double>(n));
    if (sd <= 0.0) sd = 1.0;
    for (std::size_t v = 0; v < n; ++v) x(v, j) = (x(v, j) - mean) / sd;
  }
  return g.with_features_labels(std::move(x), std::move(labels));
}

TransactionGraph synth_burst_graph(std::size_t n_nodes, double fraud_fraction, Timestamp burst_len,
                                   std::uint64_t seed) {
  SynthConfig c;
  c.n_nodes = n_nodes;
  c.fraud_fraction = fraud_fraction;
  c.burst_len = burst_len;
  c.seed = seed;
  return synth_burst_graph(c);
}

}  // namespace atmgad
