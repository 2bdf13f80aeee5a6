#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "atmgad/model.hpp"
#include "atmgad/tensor.hpp"
#include "atmgad/txgraph.hpp"

namespace atmgad {

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::string optimizer = "adam";
  // Re-enumerate motifs with the current windows every R epochs; 0 means
  // extract once before training.
  int refresh_interval = 5;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::full;
  // Window for tm_fixed; tau_max / 2 when unset.
  std::optional<double> delta_fixed;
  // Temporal scope bounding learned windows (and their extraction) in place
  // of tau_max; capped at tau_max.
  std::optional<double> delta_scope;
  // Scale positive rows of the loss by n_neg / n_pos.
  bool class_weighting = false;
  double window_slack = 1.5;
  std::size_t instance_cap = 512;
  unsigned jobs = 1;

  void validate() const;
};

class Adam {
 public:
  Adam(std::vector<diff::Tensor> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step();
  void zero_grad();
  int steps() const { return t_; }

 private:
  std::vector<diff::Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
};

struct ModelState {
  ModelState(AtmGadModel m, TrainConfig c) : model(std::move(m)), train_config(std::move(c)) {}

  AtmGadModel model;
  TrainConfig train_config;
  // Upper bound of the learned windows: tau_max, or the scope when set.
  double tau_max = 1.0;
  double fixed_delta = 1.0;
  // Eval-mode windows after training, one per node.
  std::vector<double> deltas;
  // Windows the final motif index was built with (0 for nodes not indexed).
  std::vector<double> extraction_windows;
  std::vector<NodeId> indexed_nodes;
};

struct EvalMetrics {
  double auc = 0.0;
  double auprc = 0.0;
  double accuracy = 0.0;
  std::size_t num_nodes = 0;
};

struct DeltaStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double mean_fraud = 0.0;
  double mean_normal = 0.0;
};

struct MetricsReport {
  EvalMetrics test;
  EvalMetrics train;
  std::vector<double> loss_curve;
  std::vector<DeltaStats> delta_stats;  // per epoch; empty without windows
  std::size_t refreshes = 0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelState state;
  MetricsReport report;
};

// Features must be present and every split node labeled.
TrainResult train(const TransactionGraph& g, const SplitSpec& split, const ModelConfig& model_config,
                  const TrainConfig& config);

// Fraud probability per node, using the windows stored in the state.
std::vector<double> predict(const ModelState& state, const TransactionGraph& g, std::span<const NodeId> nodes);
EvalMetrics evaluate(const ModelState& state, const TransactionGraph& g, std::span<const NodeId> nodes);

DeltaStats delta_stats(std::span<const double> deltas, std::span<const std::int8_t> labels);

// Checkpoint: model tensors plus JSON metadata (configs, catalog mode/size,
// extraction schedule, window snapshot).
void save_checkpoint(const ModelState& state, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace atmgad
