#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "atmgad/gcn.hpp"
#include "atmgad/motif.hpp"
#include "atmgad/tensor.hpp"
#include "atmgad/txgraph.hpp"

namespace atmgad {

// Progressive component lattice, from the bare backbone to the full model.
enum class Ablation : std::uint8_t { gcn_only, tm_fixed, tm_ada, tm_ada_intra, tm_ada_inter, full };

const char* to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);

struct AblationFlags {
  bool motifs = true;    // temporal-motif branch present
  bool adaptive = true;  // per-node learned window (else the fixed delta)
  bool intra = true;     // attention within instances (else mean of the 3 nodes)
  bool inter = true;     // sparsemax across types (else uniform mean)
};
AblationFlags flags_of(Ablation a);

struct HeadConfig {
  int window_hidden = 16;
  int classifier_hidden = 32;
  CatalogMode catalog_mode = CatalogMode::focal_rooted;
};

struct ModelConfig {
  GCNConfig gcn;
  HeadConfig head;
  Ablation ablation = Ablation::full;
};

// Motif instances of a batch of focal nodes, flattened into the segment
// layout the attention ops consume.
struct MotifBatch {
  std::vector<NodeId> nodes;
  // 4 rows per instance into [supernodes; H]: supernode, focal, two others.
  std::vector<std::uint32_t> member_rows;
  std::vector<std::uint32_t> instance_owner;  // focal node id per instance
  std::vector<double> neg_gaps;               // -(tau_instance_max - t_v)
  diff::Offsets member_offsets{0};
  diff::Offsets type_offsets{0};              // instances of each (node, type) pair
  std::vector<std::uint32_t> pair_types;
  diff::Offsets node_offsets{0};              // (node, type) pairs of each batch node

  std::size_t num_instances() const { return instance_owner.size(); }
};

// An empty index (or gcn_only) yields a batch whose node segments are empty.
MotifBatch make_motif_batch(const MotifIndex& index, const TransactionGraph& g, std::span<const NodeId> nodes);
MotifBatch make_empty_batch(std::span<const NodeId> nodes);

// f_theta: d_h -> hidden (tanh) -> 1, then delta = tau_max * sigmoid(.).
// The pre-activation is clamped to [-30, 30] so delta stays strictly inside
// (0, tau_max) in double precision.
struct WindowLearner {
  diff::Tensor w1, b1, w2, b2;

  WindowLearner() = default;
  WindowLearner(std::size_t d_h, std::size_t hidden, std::mt19937_64& rng);
  diff::Tensor pre_activation(diff::Tape& tape, const diff::Tensor& h) const;
  diff::Tensor deltas(diff::Tape& tape, const diff::Tensor& h, double tau_max) const;
};

struct MotifAttention {
  diff::Tensor supernodes;  // catalog_size x d_h
  diff::Tensor w_intra;     // d_h x 1
  diff::Tensor w_inter;     // catalog_size x d_h

  MotifAttention() = default;
  MotifAttention(std::size_t catalog_size, std::size_t d_h, std::mt19937_64& rng);
  // Temporal motif embedding per batch node (zero rows for nodes without
  // motifs). `deltas` is n x 1, indexed by node id.
  diff::Tensor forward(diff::Tape& tape, const diff::Tensor& h, const MotifBatch& batch, const diff::Tensor& deltas,
                       const AblationFlags& flags) const;
};

// f_eta: 2 d_h -> hidden (ReLU) -> 1 logit.
struct Classifier {
  diff::Tensor w1, b1, w2, b2;

  Classifier() = default;
  Classifier(std::size_t in_dim, std::size_t hidden, std::mt19937_64& rng);
  diff::Tensor logits(diff::Tape& tape, const diff::Tensor& z) const;
};

struct ModelInputs {
  const diff::Tensor& features;
  const SparseMatrix& a_hat;
  double tau_max = 1.0;
  double fixed_delta = 1.0;  // used when the ablation has no adaptive window
};

struct ForwardResult {
  diff::Tensor embeddings;       // n x d_h
  diff::Tensor deltas;           // n x 1; undefined for gcn_only
  diff::Tensor motif_embedding;  // B x d_h
  diff::Tensor z;                // B x 2 d_h
  diff::Tensor logits;           // B x 1
};

class AtmGadModel {
 public:
  AtmGadModel(std::size_t in_dim, const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  AblationFlags flags() const { return flags_of(config_.ablation); }
  const MotifCatalog& catalog() const { return build_catalog(config_.head.catalog_mode); }
  std::size_t embedding_dim() const { return static_cast<std::size_t>(config_.gcn.out_dim); }
  std::size_t input_dim() const { return backbone_.in_dim(); }

  GCNBackbone& backbone() { return backbone_; }
  WindowLearner& window_learner() { return window_; }
  MotifAttention& attention() { return attention_; }
  Classifier& classifier() { return classifier_; }

  std::vector<diff::NamedTensor> named_parameters() const;
  std::vector<diff::Tensor> parameters() const;

  ForwardResult forward(diff::Tape& tape, const ModelInputs& in, const MotifBatch& batch, bool training,
                        std::mt19937_64* rng) const;

  // Eval-mode per-node windows (size n). Constant fixed_delta when the
  // ablation does not learn windows.
  std::vector<double> compute_deltas(const ModelInputs& in) const;

  struct NodeOutput {
    std::vector<double> z;
    double y_hat = 0.5;
  };
  NodeOutput node_forward(NodeId v, const ModelInputs& in, const MotifIndex& index, const TransactionGraph& g) const;

 private:
  ModelConfig config_;
  GCNBackbone backbone_;
  WindowLearner window_;
  MotifAttention attention_;
  Classifier classifier_;
};

// Standalone evaluations of the individual head stages on plain vectors.
double sigmoid(double x);
double adaptive_window(std::span<const double> h_v, const WindowLearner& learner, double tau_max);
double instance_weight(double delta, double tau_instance_max, double t_v);
// members: supernode, focal, two others (each d_h long).
std::vector<double> intra_instance_embedding(std::span<const std::vector<double>> members,
                                             std::span<const double> w_intra);
// Weighted average of instance embeddings (rows).
std::vector<double> type_embedding(const Matrix& instance_embeddings, std::span<const double> weights);
struct InterResult {
  std::vector<double> embedding;
  std::vector<double> beta;
};
// type_embeddings and w_inter_rows hold one row per present type.
InterResult inter_embedding(const Matrix& type_embeddings, const Matrix& w_inter_rows);

}  // namespace atmgad
