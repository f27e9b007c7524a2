#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "contgcn/errors.hpp"
#include "contgcn/omm.hpp"
#include "contgcn/sparse.hpp"
#include "contgcn/vocab.hpp"

namespace contgcn {

// One document-token row: (token id, weight) sorted by token id.
using DocTokenRow = std::vector<std::pair<std::uint32_t, double>>;

// Token-token block from OMM statistics. Diagonal 1; off-diagonal
// max(log(s * C_ij / (c_i * c_j)), 0); zero counts yield no entry.
inline SparseMatrix build_ppmi(const OmmState& state) {
  if (state.s == 0)
    throw data_error(ErrorCode::EmptyMemory,
                     "occurrence memory holds no documents");
  std::vector<SparseMatrix::Entry> entries;
  const auto triples = state.C.sorted_triples();
  entries.reserve(state.u + 2 * triples.size());
  for (std::uint64_t i = 0; i < state.u; ++i)
    entries.push_back({static_cast<std::uint32_t>(i),
                       static_cast<std::uint32_t>(i), 1.0});
  for (const auto& t : triples) {
    if (t.count == 0 || state.c[t.i] == 0 || state.c[t.j] == 0) continue;
    const double ratio = static_cast<double>(state.s) *
                         static_cast<double>(t.count) /
                         (static_cast<double>(state.c[t.i]) *
                          static_cast<double>(state.c[t.j]));
    const double w = std::log(ratio);
    if (w > 0.0) {
      entries.push_back({t.i, t.j, w});
      entries.push_back({t.j, t.i, w});
    }
  }
  return SparseMatrix::from_triplets(state.u, std::move(entries));
}

// TF-IDF document-token rows: (g(s,t)/|s|) * log(s / (c_t + 1)) with
// negative idf clamped to zero. Zero weights are not stored.
inline std::vector<DocTokenRow> build_doc_token(
    const OmmState& state, std::span<const TokenizedDocument> docs) {
  if (state.s == 0)
    throw data_error(ErrorCode::EmptyMemory,
                     "occurrence memory holds no documents");
  if (docs.empty())
    throw data_error(ErrorCode::ZeroLengthDocument, "empty batch");
  std::vector<DocTokenRow> rows;
  rows.reserve(docs.size());
  for (const auto& doc : docs) {
    if (doc.token_ids.empty())
      throw data_error(ErrorCode::ZeroLengthDocument,
                       "document of length 0 in batch");
    std::unordered_map<std::uint32_t, std::uint32_t> counts;
    for (TokenId t : doc.token_ids) {
      if (t < 0 || static_cast<std::uint64_t>(t) >= state.u)
        throw data_error(ErrorCode::TokenOutOfRange,
                         "token id out of range in batch");
      counts[static_cast<std::uint32_t>(t)] += 1;
    }
    DocTokenRow row;
    row.reserve(counts.size());
    const double len = static_cast<double>(doc.token_ids.size());
    for (const auto& [t, g] : counts) {
      const double idf = std::log(static_cast<double>(state.s) /
                                  (static_cast<double>(state.c[t]) + 1.0));
      if (idf <= 0.0) continue;
      row.push_back({t, static_cast<double>(g) / len * idf});
    }
    std::sort(row.begin(), row.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

// The (u+b)x(u+b) block adjacency: PPMI block at [0,u), TF-IDF rows at
// [u,u+b) plus their transpose, identity over documents.
inline SparseMatrix compose_adjacency_matrix(
    const SparseMatrix& ppmi, std::span<const DocTokenRow> doc_rows) {
  const std::size_t u = ppmi.dim();
  const std::size_t b = doc_rows.size();
  std::vector<SparseMatrix::Entry> entries;
  std::size_t nnz_rows = 0;
  for (const auto& row : doc_rows) nnz_rows += row.size();
  entries.reserve(ppmi.nnz() + 2 * nnz_rows + b);
  ppmi.for_each([&](std::size_t r, std::size_t c, double v) {
    entries.push_back({static_cast<std::uint32_t>(r),
                       static_cast<std::uint32_t>(c), v});
  });
  for (std::size_t j = 0; j < b; ++j) {
    const auto dj = static_cast<std::uint32_t>(u + j);
    for (const auto& [t, w] : doc_rows[j]) {
      if (t >= u)
        throw data_error(ErrorCode::DimMismatch,
                         "doc-token row references token beyond u");
      entries.push_back({dj, t, w});
      entries.push_back({t, dj, w});
    }
    entries.push_back({dj, dj, 1.0});
  }
  return SparseMatrix::from_triplets(u + b, std::move(entries));
}

struct AdjacencyBundle {
  std::shared_ptr<const SparseMatrix> ppmi_block;
  std::vector<DocTokenRow> doc_token_block;
  SparseMatrix composed;
  SparseMatrix normalized;
  std::uint64_t omm_version = 0;

  std::size_t u() const { return ppmi_block->dim(); }
  std::size_t b() const { return doc_token_block.size(); }
};

inline AdjacencyBundle compose_adjacency(
    std::shared_ptr<const SparseMatrix> ppmi,
    std::vector<DocTokenRow> doc_rows, std::uint64_t omm_version) {
  AdjacencyBundle bundle;
  bundle.ppmi_block = std::move(ppmi);
  bundle.doc_token_block = std::move(doc_rows);
  bundle.composed =
      compose_adjacency_matrix(*bundle.ppmi_block, bundle.doc_token_block);
  bundle.normalized = normalize(bundle.composed);
  bundle.omm_version = omm_version;
  return bundle;
}

// Phase-fixed PPMI block, rebuilt lazily when the OMM version moves.
class PpmiCache {
 public:
  const std::shared_ptr<const SparseMatrix>& get(const OmmState& state) {
    if (!ppmi_ || version_ != state.version) {
      ppmi_ = std::make_shared<const SparseMatrix>(build_ppmi(state));
      row_sums_ = ppmi_->row_sums();
      version_ = state.version;
    }
    return ppmi_;
  }

  const std::vector<double>& row_sums(const OmmState& state) {
    get(state);
    return row_sums_;
  }

  std::uint64_t version() const { return version_; }

 private:
  std::shared_ptr<const SparseMatrix> ppmi_;
  std::vector<double> row_sums_;
  std::uint64_t version_ = ~0ull;
};

// Normalized (u+1)-node adjacency holding the PPMI block plus one document
// row. Equals normalize(compose(ppmi, [row])) restricted to its nonzero
// nodes; document nodes other than this one are isolated with zero state, so
// dropping them does not change any kept output.
inline SparseMatrix build_single_doc_normalized(
    const SparseMatrix& ppmi, const std::vector<double>& ppmi_row_sums,
    const DocTokenRow& row) {
  const std::size_t u = ppmi.dim();
  std::vector<double> deg(u + 1, 0.0);
  for (std::size_t i = 0; i < u; ++i) deg[i] = ppmi_row_sums[i];
  double doc_deg = 1.0;
  for (const auto& [t, w] : row) {
    deg[t] += w;
    doc_deg += w;
  }
  deg[u] = doc_deg;
  std::vector<double> inv_sqrt(u + 1);
  for (std::size_t i = 0; i <= u; ++i) inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);

  std::vector<SparseMatrix::Entry> entries;
  entries.reserve(ppmi.nnz() + 2 * row.size() + 1);
  ppmi.for_each([&](std::size_t r, std::size_t c, double v) {
    entries.push_back({static_cast<std::uint32_t>(r),
                       static_cast<std::uint32_t>(c),
                       v * inv_sqrt[r] * inv_sqrt[c]});
  });
  const auto dnode = static_cast<std::uint32_t>(u);
  for (const auto& [t, w] : row) {
    const double v = w * inv_sqrt[t] * inv_sqrt[u];
    entries.push_back({dnode, t, v});
    entries.push_back({t, dnode, v});
  }
  entries.push_back({dnode, dnode, 1.0 / doc_deg});
  return SparseMatrix::from_triplets(u + 1, std::move(entries));
}

// Lossless effective-vocabulary projection: with h convolution layers, only
// tokens within h PPMI hops of the batch's tokens can carry any message that
// reaches a document node, so rows/cols outside that set can be dropped
// after normalization without changing any document output.
struct ProjectionPlan {
  std::vector<std::uint32_t> kept_tokens;          // sorted old token ids
  std::vector<std::int32_t> old_to_new;            // -1 if dropped
  std::size_t u_full = 0;

  std::size_t u_kept() const { return kept_tokens.size(); }
};

inline ProjectionPlan plan_khop_projection(
    const SparseMatrix& ppmi, std::span<const TokenizedDocument> docs,
    std::size_t hops) {
  const std::size_t u = ppmi.dim();
  std::vector<char> reach(u, 0);
  std::vector<std::uint32_t> frontier;
  for (const auto& doc : docs)
    for (TokenId t : doc.token_ids)
      if (!reach[static_cast<std::size_t>(t)]) {
        reach[static_cast<std::size_t>(t)] = 1;
        frontier.push_back(static_cast<std::uint32_t>(t));
      }
  for (std::size_t step = 0; step < hops && !frontier.empty(); ++step) {
    std::vector<std::uint32_t> next;
    for (std::uint32_t r : frontier) {
      const auto& row_ptr = ppmi.row_ptr();
      const auto& cols = ppmi.cols();
      for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
        const std::uint32_t c = cols[k];
        if (!reach[c]) {
          reach[c] = 1;
          next.push_back(c);
        }
      }
    }
    frontier = std::move(next);
  }
  ProjectionPlan plan;
  plan.u_full = u;
  plan.old_to_new.assign(u, -1);
  for (std::uint32_t i = 0; i < u; ++i)
    if (reach[i]) {
      plan.old_to_new[i] = static_cast<std::int32_t>(plan.kept_tokens.size());
      plan.kept_tokens.push_back(i);
    }
  return plan;
}

// Restrict a normalized (u_full + extra)-node matrix to kept tokens plus all
// trailing non-token nodes. Must be applied after normalization so degrees
// stay those of the full graph.
inline SparseMatrix project_normalized(const SparseMatrix& a,
                                       const ProjectionPlan& plan) {
  const std::size_t u = plan.u_full;
  const std::size_t extra = a.dim() - u;
  const std::size_t uk = plan.u_kept();
  auto remap = [&](std::size_t old) -> std::int64_t {
    if (old < u) return plan.old_to_new[old];
    return static_cast<std::int64_t>(uk + (old - u));
  };
  std::vector<SparseMatrix::Entry> entries;
  entries.reserve(a.nnz());
  a.for_each([&](std::size_t r, std::size_t c, double v) {
    const std::int64_t nr = remap(r);
    const std::int64_t nc = remap(c);
    if (nr < 0 || nc < 0) return;
    entries.push_back({static_cast<std::uint32_t>(nr),
                       static_cast<std::uint32_t>(nc), v});
  });
  return SparseMatrix::from_triplets(uk + extra, std::move(entries));
}

// Coordinate-list debug dump: one "row col weight" line per stored entry.
inline void dump_adjacency(const SparseMatrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error(ErrorCode::Io, "cannot open dump: " + path);
  out.precision(17);
  a.for_each([&](std::size_t r, std::size_t c, double v) {
    out << r << ' ' << c << ' ' << v << '\n';
  });
}

}  // namespace contgcn
