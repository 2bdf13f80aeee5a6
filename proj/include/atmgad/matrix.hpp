#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace atmgad {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  bool operator==(const Matrix&) const = default;
};

// Compressed sparse row matrix. Column indices are sorted within each row.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }

  double at(std::size_t r, std::size_t c) const {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      if (col_idx[k] == c) return values[k];
    return 0.0;
  }

  Matrix to_dense() const {
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) m(r, col_idx[k]) = values[k];
    return m;
  }
};

}  // namespace atmgad
