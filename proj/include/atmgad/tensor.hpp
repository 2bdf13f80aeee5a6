#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "atmgad/matrix.hpp"

namespace atmgad::diff {

namespace detail {
struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // allocated iff requires_grad
  bool requires_grad = false;
};
}  // namespace detail

// Handle to a dense double matrix that may carry a gradient. Copies share
// storage; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, bool requires_grad = false);
  Tensor(const Matrix& values, bool requires_grad = false);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values, bool requires_grad = false);

  static Tensor column(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> data() const { return node_->value; }
  std::span<double> data() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> grad() { return node_->grad; }

  double operator()(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
  double item() const;
  Matrix to_matrix() const;
  Tensor clone() const;

  void zero_grad();
  bool same(const Tensor& other) const { return node_ == other.node_; }

 private:
  friend class Tape;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

// Segment boundaries for the segment_* ops: segment s covers rows
// [offsets[s], offsets[s+1]). Segments may be empty.
using Offsets = std::vector<std::size_t>;

// Records forward operations and replays their adjoints in reverse.
// Single-threaded; use one tape per worker.
class Tape {
 public:
  Tensor matmul(const Tensor& a, const Tensor& b);
  // Constant sparse matrix times dense b. `a` must outlive backward().
  Tensor spmm(const SparseMatrix& a, const Tensor& b);
  // Same shape, or b is 1 x cols and is added to every row.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor hadamard(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double factor);
  Tensor concat_rows(const Tensor& a, const Tensor& b);
  Tensor concat_cols(const Tensor& a, const Tensor& b);
  Tensor gather_rows(const Tensor& a, std::span<const std::uint32_t> rows);

  Tensor tanh(const Tensor& a);
  Tensor sigmoid(const Tensor& a);
  Tensor log_sigmoid(const Tensor& a);
  Tensor relu(const Tensor& a);
  // Zero gradient outside [lo, hi].
  Tensor clamp(const Tensor& a, double lo, double hi);

  // Vector ops accept n x 1 or 1 x n and keep the input's shape.
  Tensor softmax_vec(const Tensor& x);
  Tensor sparsemax_vec(const Tensor& x);
  // Column vector x, independent (soft|sparse)max per segment.
  Tensor segment_softmax(const Tensor& x, const Offsets& offsets);
  Tensor segment_sparsemax(const Tensor& x, const Offsets& offsets);

  // values: n x d, weights: n x 1 -> 1 x d, sum_i w_i values_i.
  Tensor weighted_sum(const Tensor& values, const Tensor& weights);
  // One weighted sum per segment -> segments x d. Empty segments give zeros.
  Tensor segment_weighted_sum(const Tensor& values, const Tensor& weights, const Offsets& offsets);
  // Row-wise dot product of equal-shape a, b -> rows x 1.
  Tensor rowwise_dot(const Tensor& a, const Tensor& b);

  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);
  // Mean binary cross-entropy of column-vector logits against 0/1 targets,
  // in the log-sum-exp stable form. Positive rows are scaled by pos_weight.
  Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets, double pos_weight = 1.0);

  // Inverted dropout on a; identity when p == 0.
  Tensor dropout(const Tensor& a, double p, std::mt19937_64& rng);

  // Accumulates d loss / d t into every reachable requires_grad tensor.
  void backward(const Tensor& loss);
  void reset();
  std::size_t size() const { return records_.size(); }

 private:
  struct Record {
    std::string_view op;
    std::function<void()> adjoint;
  };

  Tensor make_output(std::string_view op, std::size_t rows, std::size_t cols, bool needs_grad);
  void finish(std::string_view op, const Tensor& out, std::function<void()> adjoint);

  std::vector<Record> records_;
  bool backward_done_ = false;
};

// Projection of z onto the probability simplex (values only, no tape).
std::vector<double> sparsemax(std::span<const double> z);
std::vector<double> softmax(std::span<const double> z);

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct FiniteDifferenceOptions {
  double step = 1e-5;
  // Coordinates checked per parameter tensor; 0 means all.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

// Compares reverse-mode gradients of build_loss against central differences.
// Returns max |analytic - numeric| / max(1, |analytic|, |numeric|). Parameter
// values are restored before returning.
double finite_difference_check(const std::function<Tensor(Tape&)>& build_loss, std::span<Tensor> params,
                               const FiniteDifferenceOptions& opts = {});

// Flat binary checkpoint: "ATMGCKPT", version byte, metadata string, then
// (name, rows, cols, row-major doubles) records.
inline constexpr std::uint8_t kCheckpointVersion = 1;
void save_tensors(std::ostream& out, std::span<const NamedTensor> tensors, const std::string& metadata);
// Loads values into `expected` in place; names and shapes must match exactly.
// Returns the metadata string.
std::string load_tensors(std::istream& in, std::span<NamedTensor> expected);
// Reads only the metadata string.
std::string read_checkpoint_metadata(std::istream& in);

}  // namespace atmgad::diff
