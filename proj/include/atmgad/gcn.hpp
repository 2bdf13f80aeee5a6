#pragma once

#include <random>
#include <vector>

#include "atmgad/matrix.hpp"
#include "atmgad/tensor.hpp"

namespace atmgad {

struct GCNConfig {
  int layers = 2;        // 2..4
  int hidden_dim = 32;   // one of 16, 32, 64
  int out_dim = 32;
  double dropout = 0.1;  // applied to every layer input while training

  void validate() const;
};

// Glorot-uniform initialized rows x cols weight matrix.
diff::Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

// Stacked H' = A_hat H W layers, ReLU between layers, linear last layer.
class GCNBackbone {
 public:
  GCNBackbone() = default;
  GCNBackbone(std::size_t in_dim, const GCNConfig& config, std::mt19937_64& rng);

  const GCNConfig& config() const { return config_; }
  std::size_t in_dim() const { return in_dim_; }
  std::vector<diff::Tensor>& weights() { return weights_; }
  const std::vector<diff::Tensor>& weights() const { return weights_; }
  std::vector<diff::NamedTensor> named_parameters() const;

  // `rng` is only consulted when training with dropout > 0.
  diff::Tensor forward(diff::Tape& tape, const diff::Tensor& features, const SparseMatrix& a_hat, bool training,
                       std::mt19937_64* rng) const;

 private:
  GCNConfig config_;
  std::size_t in_dim_ = 0;
  std::vector<diff::Tensor> weights_;
};

}  // namespace atmgad
