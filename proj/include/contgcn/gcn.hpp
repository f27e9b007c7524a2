#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "contgcn/errors.hpp"
#include "contgcn/matrix.hpp"
#include "contgcn/sparse.hpp"

namespace contgcn {

// Stack of h graph convolution layers H_k = relu(A~ H_{k-1} W_k) with square
// d x d weights.
struct GcnParams {
  std::vector<Matrix> weights;

  std::size_t layer_count() const { return weights.size(); }
  std::size_t d() const { return weights.empty() ? 0 : weights[0].rows(); }
};

inline GcnParams init_gcn(std::size_t layers, std::size_t d,
                          std::mt19937_64& rng) {
  GcnParams params;
  const double bound = std::sqrt(6.0 / (2.0 * static_cast<double>(d)));
  for (std::size_t k = 0; k < layers; ++k)
    params.weights.push_back(uniform_matrix(d, d, -bound, bound, rng));
  return params;
}

// Forward intermediates for the exact backward pass. masks[k] holds the
// multiplicative derivative of the activation (and dropout, when enabled)
// at each position.
struct GcnCache {
  std::vector<Matrix> messages;  // S_k = A~ H_{k-1}
  std::vector<Matrix> masks;
};

inline Matrix gcn_forward(const GcnParams& params, const SparseMatrix& adj,
                          const Matrix& x, GcnCache* cache = nullptr,
                          double dropout = 0.0,
                          std::mt19937_64* dropout_rng = nullptr) {
  if (adj.dim() != x.rows())
    throw data_error(ErrorCode::DimMismatch, "gcn: adjacency vs node rows");
  if (x.cols() != params.d())
    throw data_error(ErrorCode::DimMismatch, "gcn: embedding width");
  Matrix h = x;
  std::bernoulli_distribution keep(1.0 - dropout);
  for (std::size_t k = 0; k < params.layer_count(); ++k) {
    Matrix s = spmm(adj, h);
    Matrix p = matmul(s, params.weights[k]);
    Matrix mask(p.rows(), p.cols());
    const bool drop = dropout > 0.0 && dropout_rng != nullptr;
    const double scale = drop ? 1.0 / (1.0 - dropout) : 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      // One draw per position, independent of the activation state.
      const double keep_scale = drop ? (keep(*dropout_rng) ? scale : 0.0)
                                     : 1.0;
      const double m = p.data()[i] > 0.0 ? keep_scale : 0.0;
      mask.data()[i] = m;
      p.data()[i] *= m;
    }
    if (cache) {
      cache->messages.push_back(std::move(s));
      cache->masks.push_back(std::move(mask));
    }
    h = std::move(p);
    check_finite(h, "gcn layer output");
  }
  return h;
}

struct GcnGrads {
  std::vector<Matrix> weights;  // dL/dW_k
  Matrix input;                 // dL/dX
};

// Exact reverse-mode gradients of the layer stack; `upstream` is dL/dH_h.
inline GcnGrads gcn_backward(const GcnParams& params, const SparseMatrix& adj,
                             const GcnCache& cache, const Matrix& upstream) {
  const std::size_t h = params.layer_count();
  GcnGrads grads;
  grads.weights.resize(h);
  Matrix g = upstream;
  for (std::size_t k = h; k-- > 0;) {
    Matrix dp = g;
    const Matrix& mask = cache.masks[k];
    for (std::size_t i = 0; i < dp.size(); ++i) dp.data()[i] *= mask.data()[i];
    grads.weights[k] = matmul_tn(cache.messages[k], dp);
    Matrix ds = matmul_nt(dp, params.weights[k]);
    // A~ is symmetric, so A~^T dS = A~ dS.
    g = spmm(adj, ds);
  }
  grads.input = std::move(g);
  return grads;
}

// Document representations pulled out of the encoded node matrices: Z for
// classification, Z_p / Z_n for the anti-interference contrastive task.
struct GcnOutputs {
  Matrix z;                 // b x d, row j from unjammed pass j
  std::vector<Matrix> z_p;  // b matrices of b x d (document rows of pass j)
  Matrix z_n;               // b x d, document rows of the jammed pass
};

// `unjammed[j]` is the encoded unjammed node matrix of pass j; `jammed` the
// encoded jammed matrix over the same bundle. Document rows live at
// [u, u+b).
inline GcnOutputs extract_outputs(std::span<const Matrix> unjammed,
                                  const Matrix& jammed, std::size_t u) {
  const std::size_t b = unjammed.size();
  const std::size_t d = jammed.cols();
  GcnOutputs out;
  out.z = Matrix(b, d);
  out.z_n = Matrix(b, d);
  out.z_p.reserve(b);
  for (std::size_t j = 0; j < b; ++j) {
    Matrix zp(b, d);
    for (std::size_t i = 0; i < b; ++i)
      std::copy_n(unjammed[j].row(u + i), d, zp.row(i));
    std::copy_n(unjammed[j].row(u + j), d, out.z.row(j));
    std::copy_n(jammed.row(u + j), d, out.z_n.row(j));
    out.z_p.push_back(std::move(zp));
  }
  return out;
}

}  // namespace contgcn
