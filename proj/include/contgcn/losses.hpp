#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "contgcn/errors.hpp"
#include "contgcn/matrix.hpp"

namespace contgcn {

// MLP classifier f: R^d -> R^c, one relu hidden layer of width d, softmax
// output. Biases are 1 x n matrices.
struct ClassifierParams {
  Matrix w1, b1;  // d x d, 1 x d
  Matrix w2, b2;  // d x c, 1 x c

  std::size_t d() const { return w1.rows(); }
  std::size_t c() const { return w2.cols(); }
};

inline ClassifierParams init_classifier(std::size_t d, std::size_t c,
                                        std::mt19937_64& rng) {
  ClassifierParams clf;
  const double bound1 = std::sqrt(6.0 / (2.0 * static_cast<double>(d)));
  const double bound2 =
      std::sqrt(6.0 / (static_cast<double>(d) + static_cast<double>(c)));
  clf.w1 = uniform_matrix(d, d, -bound1, bound1, rng);
  clf.b1 = Matrix(1, d);
  clf.w2 = uniform_matrix(d, c, -bound2, bound2, rng);
  clf.b2 = Matrix(1, c);
  return clf;
}

namespace detail {

// Row-wise softmax of logits, stabilized by max subtraction.
inline void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double* row = m.row(r);
    double mx = row[0];
    for (std::size_t c = 1; c < m.cols(); ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] /= sum;
  }
}

}  // namespace detail

struct ClassifierCache {
  Matrix hidden;  // relu(Z w1 + b1)
  Matrix probs;   // softmax rows
};

inline Matrix classifier_forward(const ClassifierParams& clf, const Matrix& z,
                                 ClassifierCache* cache = nullptr) {
  Matrix hidden = matmul(z, clf.w1);
  for (std::size_t r = 0; r < hidden.rows(); ++r)
    axpy(1.0, clf.b1.row(0), hidden.row(r), hidden.cols());
  for (std::size_t i = 0; i < hidden.size(); ++i)
    if (hidden.data()[i] < 0.0) hidden.data()[i] = 0.0;
  Matrix probs = matmul(hidden, clf.w2);
  for (std::size_t r = 0; r < probs.rows(); ++r)
    axpy(1.0, clf.b2.row(0), probs.row(r), probs.cols());
  detail::softmax_rows(probs);
  if (cache) {
    cache->hidden = std::move(hidden);
    cache->probs = probs;
  }
  return probs;
}

struct ClassifierGrads {
  Matrix w1, b1, w2, b2;
};

struct ClassificationResult {
  double loss = 0.0;
  Matrix d_z;
  ClassifierGrads d_clf;
};

// Mean negative log-likelihood of the true classes under the MLP softmax.
inline ClassificationResult classification_loss(
    const Matrix& z, std::span<const std::int32_t> labels,
    const ClassifierParams& clf) {
  const std::size_t b = z.rows();
  const std::size_t c = clf.c();
  if (labels.size() != b)
    throw data_error(ErrorCode::InvalidLabel, "labels do not match batch");
  for (auto l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= c)
      throw data_error(ErrorCode::InvalidLabel,
                       "label " + std::to_string(l) + " outside [0, " +
                           std::to_string(c) + ")");
  ClassifierCache cache;
  classifier_forward(clf, z, &cache);

  ClassificationResult res;
  for (std::size_t j = 0; j < b; ++j) {
    const double p = cache.probs(j, static_cast<std::size_t>(labels[j]));
    res.loss -= std::log(std::max(p, 1e-300));
  }
  res.loss /= static_cast<double>(b);

  // d logits = (probs - onehot) / b
  Matrix dlogits = cache.probs;
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t j = 0; j < b; ++j) {
    double* row = dlogits.row(j);
    row[static_cast<std::size_t>(labels[j])] -= 1.0;
    for (std::size_t k = 0; k < c; ++k) row[k] *= inv_b;
  }
  res.d_clf.w2 = matmul_tn(cache.hidden, dlogits);
  res.d_clf.b2 = Matrix(1, c);
  for (std::size_t j = 0; j < b; ++j)
    axpy(1.0, dlogits.row(j), res.d_clf.b2.row(0), c);
  Matrix dhidden = matmul_nt(dlogits, clf.w2);
  for (std::size_t i = 0; i < dhidden.size(); ++i)
    if (cache.hidden.data()[i] <= 0.0) dhidden.data()[i] = 0.0;
  res.d_clf.w1 = matmul_tn(z, dhidden);
  res.d_clf.b1 = Matrix(1, clf.d());
  for (std::size_t j = 0; j < b; ++j)
    axpy(1.0, dhidden.row(j), res.d_clf.b1.row(0), clf.d());
  res.d_z = matmul_nt(dhidden, clf.w1);
  return res;
}

struct ContrastiveResult {
  double loss = 0.0;
  std::vector<Matrix> d_z_p;  // b matrices, b x d
  Matrix d_z_n;               // b x d
};

// Anti-interference contrastive loss: for each anchor j, a softmax over the
// b dot-products between the rows of Z_p[j] and the jammed embedding of j;
// the matching entry is pulled up. Exactly zero at b = 1.
inline ContrastiveResult contrastive_loss(std::span<const Matrix> z_p,
                                          const Matrix& z_n) {
  const std::size_t b = z_n.rows();
  const std::size_t d = z_n.cols();
  if (z_p.size() != b)
    throw data_error(ErrorCode::DimMismatch, "z_p count vs z_n rows");
  ContrastiveResult res;
  res.d_z_n = Matrix(b, d);
  res.d_z_p.assign(b, Matrix(b, d));
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t j = 0; j < b; ++j) {
    const Matrix& zpj = z_p[j];
    if (zpj.rows() != b || zpj.cols() != d)
      throw data_error(ErrorCode::DimMismatch, "z_p[j] shape");
    Matrix y(1, b);
    for (std::size_t i = 0; i < b; ++i)
      y(0, i) = dot(zpj.row(i), z_n.row(j), d);
    detail::softmax_rows(y);
    res.loss -= std::log(std::max(y(0, j), 1e-300));
    // d logits_i = (y_i - [i == j]) / b
    for (std::size_t i = 0; i < b; ++i) {
      const double g = (y(0, i) - (i == j ? 1.0 : 0.0)) * inv_b;
      axpy(g, z_n.row(j), res.d_z_p[j].row(i), d);
      axpy(g, zpj.row(i), res.d_z_n.row(j), d);
    }
  }
  res.loss *= inv_b;
  return res;
}

// Overall objective L = L_cls + lambda * L_aic; gradients distribute
// linearly so callers just scale-and-add.
inline double total_loss(double cls, double aic, double lambda) {
  if (lambda < 0.0)
    throw data_error(ErrorCode::BadConfig, "lambda must be >= 0");
  return cls + lambda * aic;
}

}  // namespace contgcn
