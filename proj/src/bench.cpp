#include "atmgad/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "atmgad/error.hpp"
#include "atmgad/synth.hpp"

namespace atmgad {

std::vector<BenchRow> bench_enumeration(std::span<const std::size_t> sizes, const BenchOptions& opts) {
  if (sizes.empty()) throw ValidationError("bench: no sizes given");
  if (opts.repeats < 1) throw ValidationError("bench: repeats must be positive");
  const auto& catalog = build_catalog(opts.catalog_mode);
  std::vector<BenchRow> rows;
  for (std::size_t n : sizes) {
    SynthConfig sc;
    sc.n_nodes = n;
    sc.avg_degree = opts.avg_degree;
    sc.seed = opts.seed;
    TransactionGraph g = synth_burst_graph(sc);
    double window = std::min(opts.delta, static_cast<double>(std::max<Timestamp>(g.tau_max(), 1)));
    std::vector<double> windows(n, window);
    std::vector<NodeId> all(n);
    std::iota(all.begin(), all.end(), NodeId{0});
    BuildIndexOptions bo{opts.cap_per_type, opts.jobs, 0};

    BenchRow row;
    row.num_nodes = n;
    row.num_edges = g.num_edges();
    row.avg_degree = g.average_degree();
    std::vector<double> times;
    for (int r = 0; r < opts.repeats; ++r) {
      auto t0 = std::chrono::steady_clock::now();
      MotifIndex index = build_index(g, windows, all, catalog, bo);
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      row.instances = index.total_instances();
    }
    row.mean_seconds = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
    double sq = 0.0;
    for (double t : times) sq += (t - row.mean_seconds) * (t - row.mean_seconds);
    row.stddev_seconds = times.size() > 1 ? std::sqrt(sq / static_cast<double>(times.size() - 1)) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("loglog_slope: need at least 2 paired points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ValidationError("loglog_slope: values must be positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
  double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw ValidationError("loglog_slope: x values must differ");
  return sxy / sxx;
}

}  // namespace atmgad
