#pragma once

#include <cstdint>

#include "atmgad/txgraph.hpp"

namespace atmgad {

struct SynthConfig {
  std::size_t n_nodes = 300;
  double fraud_fraction = 0.1;  // (0, 0.5]
  Timestamp burst_len = 20;
  Timestamp horizon = 1000;
  // Mean incident edges per node (in + out).
  double avg_degree = 8.0;
  std::size_t community_size = 10;
  // Chains of 3 edges (payer -> mule -> beneficiary plus one repeat) inside
  // each fraud burst.
  int chains_per_fraud = 2;
  std::size_t feature_dim = 8;
  double feature_noise = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

// Normal nodes trade with a small community at uniform times over
// [0, horizon]. Fraud nodes open with a burst of triadic chains inside
// [b, b + burst_len] and then trade sparsely. Degree and amount distributions
// match across classes, so features (noisy log degree and volume plus pure
// noise columns, standardized) carry little signal. Labels: 1 = fraud.
TransactionGraph synth_burst_graph(const SynthConfig& config);
TransactionGraph synth_burst_graph(std::size_t n_nodes, double fraud_fraction, Timestamp burst_len,
                                   std::uint64_t seed);

}  // namespace atmgad
