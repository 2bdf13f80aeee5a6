#include "atmgad/gcn.hpp"

#include <cmath>
#include <string>

#include "atmgad/error.hpp"

namespace atmgad {

void GCNConfig::validate() const {
  if (layers < 2 || layers > 4) throw ValidationError("gcn: layers must be in [2, 4], got " + std::to_string(layers));
  if (hidden_dim != 16 && hidden_dim != 32 && hidden_dim != 64)
    throw ValidationError("gcn: hidden_dim must be one of {16, 32, 64}, got " + std::to_string(hidden_dim));
  if (out_dim <= 0) throw ValidationError("gcn: out_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("gcn: dropout must lie in [0, 1)");
}

diff::Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  diff::Tensor t(rows, cols, true);
  for (auto& x : t.data()) x = dist(rng);
  return t;
}

GCNBackbone::GCNBackbone(std::size_t in_dim, const GCNConfig& config, std::mt19937_64& rng)
    : config_(config), in_dim_(in_dim) {
  config_.validate();
  if (in_dim == 0) throw ValidationError("gcn: input feature dimension must be positive");
  std::size_t prev = in_dim;
  for (int l = 0; l < config_.layers; ++l) {
    std::size_t next = l + 1 == config_.layers ? static_cast<std::size_t>(config_.out_dim)
                                               : static_cast<std::size_t>(config_.hidden_dim);
    weights_.push_back(glorot_uniform(prev, next, rng));
    prev = next;
  }
}

std::vector<diff::NamedTensor> GCNBackbone::named_parameters() const {
  std::vector<diff::NamedTensor> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) out.push_back({"gcn.W" + std::to_string(l), weights_[l]});
  return out;
}

diff::Tensor GCNBackbone::forward(diff::Tape& tape, const diff::Tensor& features, const SparseMatrix& a_hat,
                                  bool training, std::mt19937_64* rng) const {
  if (features.cols() != in_dim_)
    throw ShapeError("gcn: features have " + std::to_string(features.cols()) + " columns, expected " +
                     std::to_string(in_dim_));
  if (a_hat.rows != features.rows() || a_hat.cols != features.rows())
    throw ShapeError("gcn: adjacency is " + std::to_string(a_hat.rows) + "x" + std::to_string(a_hat.cols) +
                     " for " + std::to_string(features.rows()) + " nodes");
  diff::Tensor h = features;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (training && config_.dropout > 0.0 && rng) h = tape.dropout(h, config_.dropout, *rng);
    h = tape.spmm(a_hat, tape.matmul(h, weights_[l]));
    if (l + 1 < weights_.size()) h = tape.relu(h);
  }
  return h;
}

}  // namespace atmgad
