#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "atmgad/config.hpp"
#include "atmgad/synth.hpp"

namespace atmgad::cli {

struct DataConfig {
  std::string format = "csv";  // "csv" or "synthetic"
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path labels;
  bool remap_ids = false;
  SynthConfig synthetic;
  int splits = 3;
  double train_fraction = 0.7;
  std::optional<std::uint64_t> split_seed;  // defaults to train.seed
};

struct AnalysisConfig {
  std::vector<double> delta_grid;
  std::optional<double> correlation_delta;  // defaults to the smallest grid value
  std::vector<Ablation> ablations;
  std::vector<double> window_grid;
  std::vector<std::size_t> bench_sizes{1000, 2000, 4000};
  int bench_repeats = 3;
  double bench_avg_degree = 4.0;
  double bench_delta = 50.0;
};

struct RunConfig {
  std::filesystem::path base_dir;
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  AnalysisConfig analysis;
  std::filesystem::path output_dir = "out";
};

// Relative paths resolve against `base_dir` (the config file's directory).
RunConfig parse_run_config(const Json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Entry point shared by the executable and the tests.
// Exit codes: 0 success, 1 internal error, 2 input or validation error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace atmgad::cli
