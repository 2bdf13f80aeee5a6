#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "atmgad/motif.hpp"

namespace atmgad {

struct BenchOptions {
  double avg_degree = 4.0;
  // Window used for every node; clamped to tau_max of each graph.
  double delta = 50.0;
  int repeats = 3;
  CatalogMode catalog_mode = CatalogMode::focal_rooted;
  std::size_t cap_per_type = 512;
  unsigned jobs = 1;
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  double avg_degree = 0.0;
  std::size_t instances = 0;
  double mean_seconds = 0.0;
  double stddev_seconds = 0.0;
};

// Times index construction over every node of a synthetic graph per size.
std::vector<BenchRow> bench_enumeration(std::span<const std::size_t> sizes, const BenchOptions& opts);

// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace atmgad
