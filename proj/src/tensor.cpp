#include "atmgad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

#include "atmgad/error.hpp"

namespace atmgad::diff {

namespace {

std::string shape_str(const Tensor& t) { return std::to_string(t.rows()) + "x" + std::to_string(t.cols()); }

[[noreturn]] void shape_error(std::string_view op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

void check_offsets(std::string_view op, const Offsets& offsets, std::size_t rows) {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != rows)
    shape_error(op, "segment offsets must start at 0 and end at " + std::to_string(rows));
  for (std::size_t s = 1; s < offsets.size(); ++s)
    if (offsets[s] < offsets[s - 1]) shape_error(op, "segment offsets must be non-decreasing");
}

bool is_vector(const Tensor& t) { return t.rows() == 1 || t.cols() == 1; }

// Simplex projection by iterated active-set thresholding: repeatedly set
// tau = (sum of active - 1) / |active| and drop entries <= tau. tau never
// decreases, so the loop terminates with the exact support.
void project_simplex(const double* z, std::size_t n, double* out) {
  if (n == 0) return;
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);
  double tau = 0.0;
  while (true) {
    double s = 0.0;
    for (auto i : active) s += z[i];
    tau = (s - 1.0) / static_cast<double>(active.size());
    std::size_t kept = 0;
    for (auto i : active)
      if (z[i] > tau) active[kept++] = i;
    if (kept == active.size()) break;
    active.resize(kept);
  }
  std::fill(out, out + n, 0.0);
  for (auto i : active) out[i] = z[i] - tau;
}

void softmax_into(const double* z, std::size_t n, double* out) {
  if (n == 0) return;
  double m = *std::max_element(z, z + n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (out[i] = std::exp(z[i] - m));
  for (std::size_t i = 0; i < n; ++i) out[i] /= s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(std::size_t rows, std::size_t cols, bool requires_grad) : node_(std::make_shared<detail::Node>()) {
  node_->rows = rows;
  node_->cols = cols;
  node_->value.assign(rows * cols, 0.0);
  node_->requires_grad = requires_grad;
  if (requires_grad) node_->grad.assign(rows * cols, 0.0);
}

Tensor::Tensor(const Matrix& values, bool requires_grad) : Tensor(values.rows, values.cols, requires_grad) {
  node_->value = values.data;
}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values, bool requires_grad)
    : Tensor(rows, cols, requires_grad) {
  if (values.size() != rows * cols)
    throw ShapeError("Tensor: " + std::to_string(values.size()) + " values for shape " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  node_->value = std::move(values);
}

Tensor Tensor::column(std::vector<double> values, bool requires_grad) {
  auto n = values.size();
  return Tensor(n, 1, std::move(values), requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor is " + shape_str(*this) + ", expected 1x1");
  return node_->value[0];
}

Matrix Tensor::to_matrix() const {
  Matrix m(rows(), cols());
  m.data = node_->value;
  return m;
}

Tensor Tensor::clone() const {
  Tensor t(rows(), cols(), requires_grad());
  t.node_->value = node_->value;
  return t;
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

// ---------------------------------------------------------------------------
// Tape plumbing

Tensor Tape::make_output(std::string_view, std::size_t rows, std::size_t cols, bool needs_grad) {
  return Tensor(rows, cols, needs_grad);
}

void Tape::finish(std::string_view op, const Tensor& out, std::function<void()> adjoint) {
  for (double x : out.data())
    if (!std::isfinite(x)) throw NumericError(std::string(op) + ": non-finite value in forward output");
  if (out.requires_grad()) records_.push_back({op, std::move(adjoint)});
}

void Tape::backward(const Tensor& loss) {
  if (backward_done_) throw Error("backward: called twice without reset");
  if (loss.size() != 1) throw ShapeError("backward: loss must be 1x1, got " + shape_str(loss));
  if (!loss.requires_grad() || records_.empty()) throw Error("backward: loss does not depend on any parameter");
  backward_done_ = true;
  loss.node_->grad[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->adjoint();
}

void Tape::reset() {
  records_.clear();
  backward_done_ = false;
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  constexpr std::string_view op = "matmul";
  if (a.cols() != b.rows()) shape_error(op, shape_str(a) + " * " + shape_str(b));
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = make_output(op, m, n, a.requires_grad() || b.requires_grad());
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* C = out.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      double x = A[i * k + p];
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) C[i * n + j] += x * B[p * n + j];
    }
  auto an = a.node_, bn = b.node_, on = out.node_;
  finish(op, out, [an, bn, on, m, k, n] {
    const double* G = on->grad.data();
    if (an->requires_grad)
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * bn->value[p * n + j];
          an->grad[i * k + p] += s;
        }
    if (bn->requires_grad)
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double x = an->value[i * k + p];
          if (x == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) bn->grad[p * n + j] += x * G[i * n + j];
        }
  });
  return out;
}

Tensor Tape::spmm(const SparseMatrix& s, const Tensor& b) {
  constexpr std::string_view op = "spmm";
  if (s.cols != b.rows()) shape_error(op, std::to_string(s.rows) + "x" + std::to_string(s.cols) + " * " + shape_str(b));
  const std::size_t n = b.cols();
  Tensor out = make_output(op, s.rows, n, b.requires_grad());
  double* C = out.data().data();
  const double* B = b.data().data();
  for (std::size_t r = 0; r < s.rows; ++r)
    for (std::size_t p = s.row_ptr[r]; p < s.row_ptr[r + 1]; ++p) {
      double v = s.values[p];
      const double* brow = B + static_cast<std::size_t>(s.col_idx[p]) * n;
      for (std::size_t j = 0; j < n; ++j) C[r * n + j] += v * brow[j];
    }
  auto bn = b.node_, on = out.node_;
  const SparseMatrix* sp = &s;
  finish(op, out, [sp, bn, on, n] {
    for (std::size_t r = 0; r < sp->rows; ++r)
      for (std::size_t p = sp->row_ptr[r]; p < sp->row_ptr[r + 1]; ++p) {
        double v = sp->values[p];
        double* brow = bn->grad.data() + static_cast<std::size_t>(sp->col_idx[p]) * n;
        for (std::size_t j = 0; j < n; ++j) brow[j] += v * on->grad[r * n + j];
      }
  });
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  constexpr std::string_view op = "add";
  bool broadcast = b.rows() == 1 && a.rows() != 1 && b.cols() == a.cols();
  if (!broadcast && (a.rows() != b.rows() || a.cols() != b.cols()))
    shape_error(op, shape_str(a) + " + " + shape_str(b));
  const std::size_t rows = a.rows(), cols = a.cols();
  Tensor out = make_output(op, rows, cols, a.requires_grad() || b.requires_grad());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out.data()[i * cols + j] = a.data()[i * cols + j] + b.data()[(broadcast ? 0 : i) * cols + j];
  auto an = a.node_, bn = b.node_, on = out.node_;
  finish(op, out, [an, bn, on, rows, cols, broadcast] {
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        double g = on->grad[i * cols + j];
        if (an->requires_grad) an->grad[i * cols + j] += g;
        if (bn->requires_grad) bn->grad[(broadcast ? 0 : i) * cols + j] += g;
      }
  });
  return out;
}

Tensor Tape::hadamard(const Tensor& a, const Tensor& b) {
  constexpr std::string_view op = "hadamard";
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, shape_str(a) + " .* " + shape_str(b));
  Tensor out = make_output(op, a.rows(), a.cols(), a.requires_grad() || b.requires_grad());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  auto an = a.node_, bn = b.node_, on = out.node_;
  finish(op, out, [an, bn, on] {
    for (std::size_t i = 0; i < on->value.size(); ++i) {
      if (an->requires_grad) an->grad[i] += on->grad[i] * bn->value[i];
      if (bn->requires_grad) bn->grad[i] += on->grad[i] * an->value[i];
    }
  });
  return out;
}

Tensor Tape::scale(const Tensor& a, double factor) {
  constexpr std::string_view op = "scale";
  Tensor out = make_output(op, a.rows(), a.cols(), a.requires_grad());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * factor;
  auto an = a.node_, on = out.node_;
  finish(op, out, [an, on, factor] {
    for (std::size_t i = 0; i < on->value.size(); ++i) an->grad[i] += factor * on->grad[i];
  });
  return out;
}

Tensor Tape::concat_rows(const Tensor& a, const Tensor& b) {
  constexpr std::string_view op = "concat_rows";
  if (a.cols() != b.cols()) shape_error(op, shape_str(a) + " over " + shape_str(b));
  Tensor out = make_output(op, a.rows() + b.rows(), a.cols(), a.requires_grad() || b.requires_grad());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
  auto an = a.node_, bn = b.node_, on = out.node_;
  finish(op, out, [an, bn, on] {
    const std::size_t na = an->value.size();
    if (an->requires_grad)
      for (std::size_t i = 0; i < na; ++i) an->grad[i] += on->grad[i];
    if (bn->requires_grad)
      for (std::size_t i = 0; i < bn->value.size(); ++i) bn->grad[i] += on->grad[na + i];
  });
  return out;
}

Tensor Tape::concat_cols(const Tensor& a, const Tensor& b) {
  constexpr std::string_view op = "concat_cols";
  if (a.rows() != b.rows()) shape_error(op, shape_str(a) + " beside " + shape_str(b));
  const std::size_t rows = a.rows(), ca = a.cols(), cb = b.cols(), c = ca + cb;
  Tensor out = make_output(op, rows, c, a.requires_grad() || b.requires_grad());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out.data()[i * c + j] = a.data()[i * ca + j];
    for (std::size_t j = 0; j < cb; ++j) out.data()[i * c + ca + j] = b.data()[i * cb + j];
  }
  auto an = a.node_, bn = b.node_, on = out.node_;
  finish(op, out, [an, bn, on, rows, ca, cb, c] {
    for (std::size_t i = 0; i < rows; ++i) {
      if (an->requires_grad)
        for (std::size_t j = 0; j < ca; ++j) an->grad[i * ca + j] += on->grad[i * c + j];
      if (bn->requires_grad)
        for (std::size_t j = 0; j < cb; ++j) bn->grad[i * cb + j] += on->grad[i * c + ca + j];
    }
  });
  return out;
}

Tensor Tape::gather_rows(const Tensor& a, std::span<const std::uint32_t> rows) {
  constexpr std::string_view op = "gather_rows";
  const std::size_t cols = a.cols();
  for (auto r : rows)
    if (r >= a.rows()) shape_error(op, "row " + std::to_string(r) + " out of range for " + shape_str(a));
  Tensor out = make_output(op, rows.size(), cols, a.requires_grad());
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(rows[i]) * cols), cols,
                out.data().begin() + static_cast<std::ptrdiff_t>(i * cols));
  auto an = a.node_, on = out.node_;
  std::vector<std::uint32_t> idx(rows.begin(), rows.end());
  finish(op, out, [an, on, idx = std::move(idx), cols] {
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j) an->grad[static_cast<std::size_t>(idx[i]) * cols + j] += on->grad[i * cols + j];
  });
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor Tape::tanh(const Tensor& a) {
  constexpr std::string_view op = "tanh";
  Tensor out = make_output(op, a.rows(), a.cols(), a.requires_grad());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = std::tanh(a.data()[i]);
  auto an = a.node_, on = out.node_;
  finish(op, out, [an, on] {
    for (std::size_t i = 0; i < on->value.size(); ++i) {
      double y = on->value[i];
      an->grad[i] += on->grad[i] * (1.0 - y * y);
    }
  });
  return out;
}

Tensor Tape::sigmoid(const Tensor& a) {
  constexpr std::string_view op = "sigmoid";
  Tensor out = make_output(op, a.rows(), a.cols(), a.requires_grad());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = stable_sigmoid(a.data()[i]);
  auto an = a.node_, on = out.node_;
  finish(op, out, [an, on] {
    for (std::size_t i = 0; i < on->value.size(); ++i) {
      double y = on->value[i];
      an->grad[i] += on->grad[i] * y * (1.0 - y);
    }
  });
  return out;
}

Tensor Tape::log_sigmoid(const Tensor& a) {
  constexpr std::string_view op = "log_sigmoid";
  Tensor out = make_output(op, a.rows(), a.cols(), a.requires_grad());
  for (std::size_t i = 0; i < a.size(); ++i) {
    double x = a.data()[i];
    out.data()[i] = std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x)));
  }
  auto an = a.node_, on = out.node_;
  finish(op, out, [an, on] {
    for (std::size_t i = 0; i < on->value.size(); ++i) an->grad[i] += on->grad[i] * stable_sigmoid(-an->value[i]);
  });
  return out;
}

Tensor Tape::relu(const Tensor& a) {
  constexpr std::string_view op = "relu";
  Tensor out = make_output(op, a.rows(), a.cols(), a.requires_grad());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = std::max(a.data()[i], 0.0);
  auto an = a.node_, on = out.node_;
  finish(op, out, [an, on] {
    for (std::size_t i = 0; i < on->value.size(); ++i)
      if (an->value[i] > 0.0) an->grad[i] += on->grad[i];
  });
  return out;
}

Tensor Tape::clamp(const Tensor& a, double lo, double hi) {
  constexpr std::string_view op = "clamp";
  Tensor out = make_output(op, a.rows(), a.cols(), a.requires_grad());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = std::clamp(a.data()[i], lo, hi);
  auto an = a.node_, on = out.node_;
  finish(op, out, [an, on, lo, hi] {
    for (std::size_t i = 0; i < on->value.size(); ++i) {
      double x = an->value[i];
      if (x >= lo && x <= hi) an->grad[i] += on->grad[i];
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Normalizers

Tensor Tape::segment_softmax(const Tensor& x, const Offsets& offsets) {
  constexpr std::string_view op = "segment_softmax";
  if (x.cols() != 1) shape_error(op, "expected a column vector, got " + shape_str(x));
  check_offsets(op, offsets, x.rows());
  Tensor out = make_output(op, x.rows(), 1, x.requires_grad());
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s)
    softmax_into(x.data().data() + offsets[s], offsets[s + 1] - offsets[s], out.data().data() + offsets[s]);
  auto xn = x.node_, on = out.node_;
  finish(op, out, [xn, on, offsets] {
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
      double dot = 0.0;
      for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) dot += on->value[i] * on->grad[i];
      for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) xn->grad[i] += on->value[i] * (on->grad[i] - dot);
    }
  });
  return out;
}

Tensor Tape::segment_sparsemax(const Tensor& x, const Offsets& offsets) {
  constexpr std::string_view op = "segment_sparsemax";
  if (x.cols() != 1) shape_error(op, "expected a column vector, got " + shape_str(x));
  check_offsets(op, offsets, x.rows());
  Tensor out = make_output(op, x.rows(), 1, x.requires_grad());
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s)
    project_simplex(x.data().data() + offsets[s], offsets[s + 1] - offsets[s], out.data().data() + offsets[s]);
  auto xn = x.node_, on = out.node_;
  finish(op, out, [xn, on, offsets] {
    // Jacobian on the support S is I - 11^T/|S|; zero elsewhere.
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
      double sum = 0.0;
      std::size_t support = 0;
      for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i)
        if (on->value[i] > 0.0) {
          sum += on->grad[i];
          ++support;
        }
      if (support == 0) continue;
      double avg = sum / static_cast<double>(support);
      for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i)
        if (on->value[i] > 0.0) xn->grad[i] += on->grad[i] - avg;
    }
  });
  return out;
}

Tensor Tape::softmax_vec(const Tensor& x) {
  if (!is_vector(x)) shape_error("softmax_vec", "expected a vector, got " + shape_str(x));
  if (x.cols() == 1) return segment_softmax(x, Offsets{0, x.rows()});
  constexpr std::string_view op = "softmax_vec";
  Tensor out = make_output(op, x.rows(), x.cols(), x.requires_grad());
  softmax_into(x.data().data(), x.size(), out.data().data());
  auto xn = x.node_, on = out.node_;
  finish(op, out, [xn, on] {
    double dot = 0.0;
    for (std::size_t i = 0; i < on->value.size(); ++i) dot += on->value[i] * on->grad[i];
    for (std::size_t i = 0; i < on->value.size(); ++i) xn->grad[i] += on->value[i] * (on->grad[i] - dot);
  });
  return out;
}

Tensor Tape::sparsemax_vec(const Tensor& x) {
  if (!is_vector(x)) shape_error("sparsemax_vec", "expected a vector, got " + shape_str(x));
  if (x.cols() == 1) return segment_sparsemax(x, Offsets{0, x.rows()});
  constexpr std::string_view op = "sparsemax_vec";
  Tensor out = make_output(op, x.rows(), x.cols(), x.requires_grad());
  project_simplex(x.data().data(), x.size(), out.data().data());
  auto xn = x.node_, on = out.node_;
  finish(op, out, [xn, on] {
    double sum = 0.0;
    std::size_t support = 0;
    for (std::size_t i = 0; i < on->value.size(); ++i)
      if (on->value[i] > 0.0) {
        sum += on->grad[i];
        ++support;
      }
    if (support == 0) return;
    double avg = sum / static_cast<double>(support);
    for (std::size_t i = 0; i < on->value.size(); ++i)
      if (on->value[i] > 0.0) xn->grad[i] += on->grad[i] - avg;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Reductions

Tensor Tape::segment_weighted_sum(const Tensor& values, const Tensor& weights, const Offsets& offsets) {
  constexpr std::string_view op = "segment_weighted_sum";
  if (weights.cols() != 1 || weights.rows() != values.rows())
    shape_error(op, "values " + shape_str(values) + " with weights " + shape_str(weights));
  check_offsets(op, offsets, values.rows());
  const std::size_t d = values.cols(), segs = offsets.size() - 1;
  Tensor out = make_output(op, segs, d, values.requires_grad() || weights.requires_grad());
  const double* V = values.data().data();
  const double* W = weights.data().data();
  double* O = out.data().data();
  for (std::size_t s = 0; s < segs; ++s)
    for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i)
      for (std::size_t j = 0; j < d; ++j) O[s * d + j] += W[i] * V[i * d + j];
  auto vn = values.node_, wn = weights.node_, on = out.node_;
  finish(op, out, [vn, wn, on, offsets, d, segs] {
    for (std::size_t s = 0; s < segs; ++s)
      for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) {
        const double* g = on->grad.data() + s * d;
        if (vn->requires_grad)
          for (std::size_t j = 0; j < d; ++j) vn->grad[i * d + j] += wn->value[i] * g[j];
        if (wn->requires_grad) {
          double dot = 0.0;
          for (std::size_t j = 0; j < d; ++j) dot += vn->value[i * d + j] * g[j];
          wn->grad[i] += dot;
        }
      }
  });
  return out;
}

Tensor Tape::weighted_sum(const Tensor& values, const Tensor& weights) {
  return segment_weighted_sum(values, weights, Offsets{0, values.rows()});
}

Tensor Tape::rowwise_dot(const Tensor& a, const Tensor& b) {
  constexpr std::string_view op = "rowwise_dot";
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, shape_str(a) + " . " + shape_str(b));
  const std::size_t rows = a.rows(), d = a.cols();
  Tensor out = make_output(op, rows, 1, a.requires_grad() || b.requires_grad());
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += a.data()[i * d + j] * b.data()[i * d + j];
    out.data()[i] = s;
  }
  auto an = a.node_, bn = b.node_, on = out.node_;
  finish(op, out, [an, bn, on, rows, d] {
    for (std::size_t i = 0; i < rows; ++i) {
      double g = on->grad[i];
      for (std::size_t j = 0; j < d; ++j) {
        if (an->requires_grad) an->grad[i * d + j] += g * bn->value[i * d + j];
        if (bn->requires_grad) bn->grad[i * d + j] += g * an->value[i * d + j];
      }
    }
  });
  return out;
}

Tensor Tape::sum(const Tensor& a) {
  constexpr std::string_view op = "sum";
  Tensor out = make_output(op, 1, 1, a.requires_grad());
  out.data()[0] = std::accumulate(a.data().begin(), a.data().end(), 0.0);
  auto an = a.node_, on = out.node_;
  finish(op, out, [an, on] {
    for (auto& g : an->grad) g += on->grad[0];
  });
  return out;
}

Tensor Tape::mean(const Tensor& a) {
  if (a.size() == 0) shape_error("mean", "empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor Tape::bce_with_logits(const Tensor& logits, std::span<const double> targets, double pos_weight) {
  constexpr std::string_view op = "bce_with_logits";
  if (logits.cols() != 1 || logits.rows() != targets.size())
    shape_error(op, "logits " + shape_str(logits) + " with " + std::to_string(targets.size()) + " targets");
  if (targets.empty()) throw ValidationError("bce_with_logits: empty mask");
  const double n = static_cast<double>(targets.size());
  Tensor out = make_output(op, 1, 1, logits.requires_grad());
  double total = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    double x = logits.data()[i], y = targets[i];
    double w = y > 0.5 ? pos_weight : 1.0;
    total += w * (std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x))));
  }
  out.data()[0] = total / n;
  auto ln = logits.node_, on = out.node_;
  std::vector<double> y(targets.begin(), targets.end());
  finish(op, out, [ln, on, y = std::move(y), n, pos_weight] {
    for (std::size_t i = 0; i < y.size(); ++i) {
      double w = y[i] > 0.5 ? pos_weight : 1.0;
      ln->grad[i] += on->grad[0] * w * (stable_sigmoid(ln->value[i]) - y[i]) / n;
    }
  });
  return out;
}

Tensor Tape::dropout(const Tensor& a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw ValidationError("dropout: p must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  Tensor mask(a.rows(), a.cols());
  for (auto& m : mask.data()) m = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
  return hadamard(a, mask);
}

// ---------------------------------------------------------------------------
// Free functions

std::vector<double> sparsemax(std::span<const double> z) {
  std::vector<double> out(z.size());
  project_simplex(z.data(), z.size(), out.data());
  return out;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> out(z.size());
  softmax_into(z.data(), z.size(), out.data());
  return out;
}

double finite_difference_check(const std::function<Tensor(Tape&)>& build_loss, std::span<Tensor> params,
                               const FiniteDifferenceOptions& opts) {
  for (auto& p : params) {
    if (!p.requires_grad()) throw Error("finite_difference_check: parameter without requires_grad");
    p.zero_grad();
  }
  {
    Tape tape;
    Tensor loss = build_loss(tape);
    tape.backward(loss);
  }
  auto eval = [&] {
    Tape tape;
    return build_loss(tape).item();
  };
  std::mt19937_64 rng(opts.seed);
  double worst = 0.0;
  for (auto& p : params) {
    std::vector<std::size_t> coords(p.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (opts.max_coords_per_tensor > 0 && coords.size() > opts.max_coords_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opts.max_coords_per_tensor);
    }
    std::vector<double> analytic(p.grad().begin(), p.grad().end());
    for (auto i : coords) {
      double orig = p.data()[i];
      p.data()[i] = orig + opts.step;
      double up = eval();
      p.data()[i] = orig - opts.step;
      double down = eval();
      p.data()[i] = orig;
      double numeric = (up - down) / (2.0 * opts.step);
      double a = analytic[i];
      double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kCkptMagic[8] = {'A', 'T', 'M', 'G', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("checkpoint truncated");
  return v;
}

std::string get_string(std::istream& in) {
  std::string s(get<std::uint64_t>(in), '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  if (!in) throw FormatError("checkpoint truncated");
  return s;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void read_header(std::istream& in) {
  char magic[sizeof(kCkptMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) throw FormatError("not a checkpoint (bad magic)");
  auto version = get<std::uint8_t>(in);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
}

}  // namespace

void save_tensors(std::ostream& out, std::span<const NamedTensor> tensors, const std::string& metadata) {
  out.write(kCkptMagic, sizeof(kCkptMagic));
  put<std::uint8_t>(out, kCheckpointVersion);
  put_string(out, metadata);
  put<std::uint64_t>(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    put_string(out, name);
    put<std::uint64_t>(out, t.rows());
    put<std::uint64_t>(out, t.cols());
    for (double x : t.data()) put<double>(out, x);
  }
}

std::string read_checkpoint_metadata(std::istream& in) {
  read_header(in);
  return get_string(in);
}

std::string load_tensors(std::istream& in, std::span<NamedTensor> expected) {
  std::string metadata = read_checkpoint_metadata(in);
  auto count = get<std::uint64_t>(in);
  if (count != expected.size())
    throw FormatError("checkpoint holds " + std::to_string(count) + " tensors, expected " +
                      std::to_string(expected.size()));
  for (auto& [name, t] : expected) {
    auto stored = get_string(in);
    if (stored != name) throw FormatError("checkpoint tensor '" + stored + "' where '" + name + "' was expected");
    auto rows = get<std::uint64_t>(in);
    auto cols = get<std::uint64_t>(in);
    if (rows != t.rows() || cols != t.cols())
      throw FormatError("checkpoint tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                        std::to_string(cols) + ", expected " + shape_str(t));
    for (auto& x : t.data()) x = get<double>(in);
  }
  return metadata;
}

}  // namespace atmgad::diff
