#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <tuple>
#include <vector>

#include "contgcn/errors.hpp"
#include "contgcn/matrix.hpp"

namespace contgcn {

// Square sparse matrix in CSR form. Adjacency matrices held here are
// structurally symmetric with a unit diagonal.
class SparseMatrix {
 public:
  struct Entry {
    std::uint32_t row, col;
    double val;
  };

  SparseMatrix() = default;

  // Triplets must be unique (row, col) pairs; they get sorted here.
  static SparseMatrix from_triplets(std::size_t dim,
                                    std::vector<Entry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) {
                return a.row != b.row ? a.row < b.row : a.col < b.col;
              });
    SparseMatrix m;
    m.dim_ = dim;
    m.row_ptr_.assign(dim + 1, 0);
    m.col_.reserve(entries.size());
    m.val_.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& e = entries[k];
      if (e.row >= dim || e.col >= dim)
        throw data_error(ErrorCode::DimMismatch, "triplet out of range");
      if (k > 0 && entries[k - 1].row == e.row && entries[k - 1].col == e.col)
        throw data_error(ErrorCode::DimMismatch, "duplicate triplet");
      m.row_ptr_[e.row + 1] += 1;
      m.col_.push_back(e.col);
      m.val_.push_back(e.val);
    }
    for (std::size_t r = 0; r < dim; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
    return m;
  }

  static SparseMatrix identity(std::size_t dim) {
    std::vector<Entry> entries;
    entries.reserve(dim);
    for (std::size_t i = 0; i < dim; ++i)
      entries.push_back({static_cast<std::uint32_t>(i),
                         static_cast<std::uint32_t>(i), 1.0});
    return from_triplets(dim, std::move(entries));
  }

  std::size_t dim() const { return dim_; }
  std::size_t nnz() const { return val_.size(); }

  double at(std::size_t r, std::size_t c) const {
    const auto begin = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
    const auto end = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
    auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(c));
    if (it == end || *it != c) return 0.0;
    return val_[static_cast<std::size_t>(it - col_.begin())];
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        fn(r, static_cast<std::size_t>(col_[k]), val_[k]);
  }

  std::vector<double> row_sums() const {
    std::vector<double> sums(dim_, 0.0);
    for_each([&](std::size_t r, std::size_t, double v) { sums[r] += v; });
    return sums;
  }

  bool is_symmetric(double tol = 0.0) const {
    bool ok = true;
    for_each([&](std::size_t r, std::size_t c, double v) {
      if (std::abs(at(c, r) - v) > tol) ok = false;
    });
    return ok;
  }

  bool operator==(const SparseMatrix& o) const {
    return dim_ == o.dim_ && row_ptr_ == o.row_ptr_ && col_ == o.col_ &&
           val_ == o.val_;
  }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& cols() const { return col_; }
  const std::vector<double>& vals() const { return val_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_;
  std::vector<double> val_;
};

// Symmetric degree normalization D^{-1/2} A D^{-1/2} with D_ii = sum_j A_ij.
// Requires strictly positive row sums, which the unit diagonal guarantees.
inline SparseMatrix normalize(const SparseMatrix& a) {
  const auto sums = a.row_sums();
  std::vector<double> inv_sqrt(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (!(sums[i] > 0.0))
      throw numerical_error(ErrorCode::NonFinite,
                            "zero row sum at node " + std::to_string(i));
    inv_sqrt[i] = 1.0 / std::sqrt(sums[i]);
  }
  std::vector<SparseMatrix::Entry> entries;
  entries.reserve(a.nnz());
  a.for_each([&](std::size_t r, std::size_t c, double v) {
    entries.push_back({static_cast<std::uint32_t>(r),
                       static_cast<std::uint32_t>(c),
                       v * inv_sqrt[r] * inv_sqrt[c]});
  });
  return SparseMatrix::from_triplets(a.dim(), std::move(entries));
}

// out = A * X for dense X, exact sparse-dense product.
inline void spmm_into(const SparseMatrix& a, const Matrix& x, Matrix& out) {
  if (a.dim() != x.rows())
    throw data_error(ErrorCode::DimMismatch,
                     "spmm: adjacency dim " + std::to_string(a.dim()) +
                         " vs x rows " + std::to_string(x.rows()));
  if (out.rows() != a.dim() || out.cols() != x.cols())
    out = Matrix(a.dim(), x.cols());
  else
    out.fill(0.0);
  const std::size_t d = x.cols();
  const auto& row_ptr = a.row_ptr();
  const auto& cols = a.cols();
  const auto& vals = a.vals();
  for (std::size_t r = 0; r < a.dim(); ++r) {
    double* o = out.row(r);
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      axpy(vals[k], x.row(cols[k]), o, d);
  }
}

inline Matrix spmm(const SparseMatrix& a, const Matrix& x) {
  Matrix out;
  spmm_into(a, x, out);
  return out;
}

}  // namespace contgcn
