#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "contgcn/encoder.hpp"
#include "contgcn/errors.hpp"
#include "contgcn/gcn.hpp"
#include "contgcn/graph.hpp"
#include "contgcn/losses.hpp"
#include "contgcn/model.hpp"
#include "contgcn/omm.hpp"
#include "contgcn/parallel.hpp"

namespace contgcn {

struct PipelineOpts {
  double lambda = 0.03;
  bool khop_project = false;
  double dropout = 0.0;       // training-only; inference paths keep 0
  std::uint64_t dropout_seed = 0;
};

// Which document encoder produces the contextual token states: the
// trainable tiny table, or frozen external per-document states.
struct EncoderRuntime {
  const ExternalEmbeddings* external = nullptr;

  bool tiny() const { return external == nullptr; }
};

inline EncodedBatch run_encoder(const ModelParams& model,
                                const EncoderRuntime& rt,
                                const DocumentBatch& batch) {
  if (rt.tiny()) return encode_documents(model.encoder, batch);
  return encode_documents(*rt.external, batch);
}

// Batch-level adjacency state. The jammed pass runs over the full composed
// graph; each unjammed pass runs over the PPMI block plus that single
// document's row, so its result cannot depend on batch mates. Token ids are
// optionally remapped by the lossless k-hop projection.
struct BatchGraphs {
  AdjacencyBundle bundle;
  ProjectionPlan plan;              // identity when projection is off
  bool projected = false;
  SparseMatrix jammed;              // normalized, maybe projected
  std::vector<SparseMatrix> unjammed;  // per document, (uk+1) nodes

  std::size_t u_kept() const {
    return projected ? plan.u_kept() : bundle.u();
  }
  // Maps a token id into pass-local row index; -1 when dropped.
  std::int32_t token_row(std::uint32_t t) const {
    return projected ? plan.old_to_new[t] : static_cast<std::int32_t>(t);
  }
};

inline BatchGraphs build_batch_graphs(PpmiCache& cache, const OmmState& omm,
                                      const DocumentBatch& batch,
                                      std::size_t gcn_layers,
                                      bool khop_project) {
  BatchGraphs graphs;
  const auto ppmi = cache.get(omm);
  const auto& row_sums = cache.row_sums(omm);
  auto doc_rows = build_doc_token(omm, batch.docs);
  graphs.bundle = compose_adjacency(ppmi, std::move(doc_rows), omm.version);
  graphs.projected = khop_project;
  if (khop_project) {
    graphs.plan = plan_khop_projection(*ppmi, batch.docs, gcn_layers);
    graphs.jammed = project_normalized(graphs.bundle.normalized, graphs.plan);
  } else {
    graphs.jammed = graphs.bundle.normalized;
  }
  graphs.unjammed.reserve(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    SparseMatrix single = build_single_doc_normalized(
        *ppmi, row_sums, graphs.bundle.doc_token_block[j]);
    graphs.unjammed.push_back(
        khop_project ? project_normalized(single, graphs.plan)
                     : std::move(single));
  }
  return graphs;
}

// Unjammed node matrix of document j in pass-local coordinates: averaged
// occurrence states on token rows, the document embedding on the last row.
inline Matrix build_unjammed_input(const BatchGraphs& graphs,
                                   const EncodedBatch& enc,
                                   const DocTokenOccurrences& occ,
                                   std::size_t j) {
  const std::size_t uk = graphs.u_kept();
  const std::size_t d = enc.doc_embeddings.cols();
  Matrix x(uk + 1, d);
  const Matrix& states = enc.token_states[j];
  for (std::size_t q = 0; q < occ.tokens.size(); ++q) {
    const std::int32_t r = graphs.token_row(occ.tokens[q]);
    if (r < 0) continue;  // unreachable under a valid projection
    double* row = x.row(static_cast<std::size_t>(r));
    for (std::uint32_t pos : occ.positions[q])
      axpy(1.0, states.row(pos), row, d);
    const double inv = 1.0 / static_cast<double>(occ.positions[q].size());
    for (std::size_t i = 0; i < d; ++i) row[i] *= inv;
  }
  std::copy_n(enc.doc_embeddings.row(j), d, x.row(uk));
  return x;
}

struct BatchForward {
  BatchGraphs graphs;
  EncodedBatch enc;
  std::vector<DocTokenOccurrences> occurrences;
  std::vector<GcnCache> unjammed_caches;
  std::vector<Matrix> unjammed_out;  // (uk+1) x d per document
  GcnCache jammed_cache;
  Matrix jammed_out;  // (uk+b) x d, empty when the jammed pass is skipped
  GcnOutputs outputs;
  bool has_jammed = false;
};

// Runs encoding plus the b unjammed passes (and the jammed pass when
// `need_jammed`). Unjammed passes are independent and run in parallel;
// outputs land in per-document slots.
inline BatchForward forward_batch(const ModelParams& model,
                                  const EncoderRuntime& rt, PpmiCache& cache,
                                  const OmmState& omm,
                                  const DocumentBatch& batch,
                                  const PipelineOpts& opts, bool need_jammed,
                                  bool keep_caches) {
  BatchForward fwd;
  fwd.graphs = build_batch_graphs(cache, omm, batch,
                                  model.gcn.layer_count(), opts.khop_project);
  if (fwd.graphs.bundle.omm_version != omm.version)
    throw data_error(ErrorCode::VersionMismatch,
                     "adjacency bundle built from a stale OMM version");
  fwd.enc = run_encoder(model, rt, batch);

  const std::size_t b = batch.size();
  const std::size_t d = model.d();
  const std::size_t uk = fwd.graphs.u_kept();
  fwd.occurrences.reserve(b);
  for (std::size_t j = 0; j < b; ++j)
    fwd.occurrences.push_back(doc_token_occurrences(batch.docs[j]));

  // Per-pass dropout streams keep results independent of scheduling.
  auto pass_rng = [&](std::uint64_t tag) {
    return std::mt19937_64(opts.dropout_seed ^ (0x9e3779b97f4a7c15ull * tag));
  };
  fwd.unjammed_caches.assign(keep_caches ? b : 0, GcnCache{});
  fwd.unjammed_out.assign(b, Matrix{});
  parallel_for(b, [&](std::size_t j) {
    Matrix x = build_unjammed_input(fwd.graphs, fwd.enc, fwd.occurrences[j], j);
    GcnCache* cj = keep_caches ? &fwd.unjammed_caches[j] : nullptr;
    std::mt19937_64 rng = pass_rng(j + 1);
    fwd.unjammed_out[j] =
        gcn_forward(model.gcn, fwd.graphs.unjammed[j], x, cj, opts.dropout,
                    opts.dropout > 0.0 ? &rng : nullptr);
  });

  // Document outputs: Z row j is the document row of pass j; rows of other
  // documents are structurally zero in a single-document pass.
  fwd.outputs.z = Matrix(b, d);
  fwd.outputs.z_p.assign(b, Matrix(b, d));
  for (std::size_t j = 0; j < b; ++j) {
    std::copy_n(fwd.unjammed_out[j].row(uk), d, fwd.outputs.z.row(j));
    std::copy_n(fwd.unjammed_out[j].row(uk), d, fwd.outputs.z_p[j].row(j));
  }

  fwd.outputs.z_n = Matrix(b, d);
  if (need_jammed) {
    Matrix xn(uk + b, d);
    for (std::size_t j = 0; j < b; ++j)
      std::copy_n(fwd.enc.doc_embeddings.row(j), d, xn.row(uk + j));
    std::mt19937_64 rng = pass_rng(0);
    fwd.jammed_out = gcn_forward(model.gcn, fwd.graphs.jammed, xn,
                                 keep_caches ? &fwd.jammed_cache : nullptr,
                                 opts.dropout,
                                 opts.dropout > 0.0 ? &rng : nullptr);
    for (std::size_t j = 0; j < b; ++j)
      std::copy_n(fwd.jammed_out.row(uk + j), d, fwd.outputs.z_n.row(j));
    fwd.has_jammed = true;
  }
  return fwd;
}

struct BatchLosses {
  double cls = 0.0;
  double aic = 0.0;
  double total = 0.0;
};

// Upstream gradients flowing into the GCN outputs.
struct OutputGrads {
  Matrix d_z;               // b x d, zero when classification is off
  std::vector<Matrix> d_z_p;
  Matrix d_z_n;
  ClassifierGrads d_clf;
  bool has_cls = false;
  bool has_aic = false;
};

inline std::pair<BatchLosses, OutputGrads> batch_losses(
    const ModelParams& model, const BatchForward& fwd,
    std::span<const std::int32_t> labels, double lambda, bool with_cls,
    bool with_aic) {
  const std::size_t b = fwd.outputs.z.rows();
  const std::size_t d = fwd.outputs.z.cols();
  BatchLosses losses;
  OutputGrads grads;
  grads.d_z = Matrix(b, d);
  grads.d_z_n = Matrix(b, d);
  if (with_cls) {
    auto cls = classification_loss(fwd.outputs.z, labels, model.clf);
    losses.cls = cls.loss;
    grads.d_z = std::move(cls.d_z);
    grads.d_clf = std::move(cls.d_clf);
    grads.has_cls = true;
  }
  if (with_aic) {
    if (!fwd.has_jammed)
      throw data_error(ErrorCode::BadConfig,
                       "contrastive loss requires the jammed pass");
    auto aic = contrastive_loss(fwd.outputs.z_p, fwd.outputs.z_n);
    losses.aic = aic.loss;
    grads.d_z_p = std::move(aic.d_z_p);
    grads.d_z_n = std::move(aic.d_z_n);
    grads.has_aic = true;
  }
  losses.total = total_loss(losses.cls, losses.aic,
                            with_aic && with_cls ? lambda : with_aic ? 1.0
                                                                     : 0.0);
  return {losses, grads};
}

namespace detail {

// Sparse per-document contribution to the encoder table gradient.
struct DocTableGrad {
  std::vector<std::uint32_t> rows;
  Matrix values;  // |rows| x d
};

// Backward through unjammed assembly, pooling, and the table lookup for one
// document. d_doc_emb and d_token_rows use pass-local coordinates.
inline DocTableGrad encoder_doc_backward(const BatchGraphs& graphs,
                                         const DocTokenOccurrences& occ,
                                         const TokenizedDocument& doc,
                                         const double* d_doc_emb,
                                         const Matrix* d_x_unjammed,
                                         std::size_t d) {
  const std::size_t len = doc.token_ids.size();
  Matrix d_states(len, d);
  if (d_doc_emb) {
    const double inv = 1.0 / static_cast<double>(len);
    for (std::size_t k = 0; k < len; ++k)
      axpy(inv, d_doc_emb, d_states.row(k), d);
  }
  if (d_x_unjammed) {
    for (std::size_t q = 0; q < occ.tokens.size(); ++q) {
      const std::int32_t r = graphs.token_row(occ.tokens[q]);
      if (r < 0) continue;
      const double inv =
          1.0 / static_cast<double>(occ.positions[q].size());
      for (std::uint32_t pos : occ.positions[q])
        axpy(inv, d_x_unjammed->row(static_cast<std::size_t>(r)),
             d_states.row(pos), d);
    }
  }
  // Fold positions into distinct-token rows (deterministic sorted order).
  DocTableGrad out;
  out.rows = occ.tokens;
  out.values = Matrix(occ.tokens.size(), d);
  for (std::size_t q = 0; q < occ.tokens.size(); ++q)
    for (std::uint32_t pos : occ.positions[q])
      axpy(1.0, d_states.row(pos), out.values.row(q), d);
  return out;
}

}  // namespace detail

// Full reverse pass for one batch. Per-document gradient buffers are
// reduced in document order, so results do not depend on the worker count.
inline ModelGrads backward_batch(const ModelParams& model,
                                 const DocumentBatch& batch,
                                 BatchForward& fwd, const OutputGrads& out,
                                 double lambda, bool tiny_encoder) {
  const std::size_t b = batch.size();
  const std::size_t d = model.d();
  const std::size_t uk = fwd.graphs.u_kept();
  ModelGrads grads = ModelGrads::zeros_like(model);
  grads.clf = out.d_clf;
  if (grads.clf.w1.empty()) {
    grads.clf.w1 = Matrix(model.clf.w1.rows(), model.clf.w1.cols());
    grads.clf.b1 = Matrix(model.clf.b1.rows(), model.clf.b1.cols());
    grads.clf.w2 = Matrix(model.clf.w2.rows(), model.clf.w2.cols());
    grads.clf.b2 = Matrix(model.clf.b2.rows(), model.clf.b2.cols());
  }

  Matrix d_doc_emb(b, d);  // pooled-embedding gradients across passes

  // Jammed pass backward (serial; one pass).
  if (out.has_aic && fwd.has_jammed) {
    Matrix upstream(uk + b, d);
    for (std::size_t i = 0; i < b; ++i)
      std::copy_n(out.d_z_n.row(i), d, upstream.row(uk + i));
    const double scale = out.has_cls ? lambda : 1.0;
    for (std::size_t i = 0; i < upstream.size(); ++i)
      upstream.data()[i] *= scale;
    GcnGrads jg = gcn_backward(model.gcn, fwd.graphs.jammed,
                               fwd.jammed_cache, upstream);
    for (std::size_t k = 0; k < jg.weights.size(); ++k)
      add_inplace(grads.gcn_weights[k], jg.weights[k]);
    for (std::size_t j = 0; j < b; ++j)
      axpy(1.0, jg.input.row(uk + j), d_doc_emb.row(j), d);
  }

  // Unjammed passes backward, parallel with per-document slots.
  const double aic_scale = out.has_cls ? lambda : 1.0;
  std::vector<GcnGrads> per_doc(b);
  parallel_for(b, [&](std::size_t j) {
    Matrix upstream(uk + 1, d);
    double* target = upstream.row(uk);
    if (out.has_cls) axpy(1.0, out.d_z.row(j), target, d);
    if (out.has_aic) axpy(aic_scale, out.d_z_p[j].row(j), target, d);
    per_doc[j] = gcn_backward(model.gcn, fwd.graphs.unjammed[j],
                              fwd.unjammed_caches[j], upstream);
  });
  for (std::size_t j = 0; j < b; ++j) {
    for (std::size_t k = 0; k < per_doc[j].weights.size(); ++k)
      add_inplace(grads.gcn_weights[k], per_doc[j].weights[k]);
    axpy(1.0, per_doc[j].input.row(uk), d_doc_emb.row(j), d);
  }

  if (!tiny_encoder) return grads;  // external encoder states are frozen

  // Encoder backward, parallel compute + ordered reduction.
  std::vector<detail::DocTableGrad> table_contrib(b);
  parallel_for(b, [&](std::size_t j) {
    table_contrib[j] = detail::encoder_doc_backward(
        fwd.graphs, fwd.occurrences[j], batch.docs[j], d_doc_emb.row(j),
        &per_doc[j].input, d);
  });
  for (std::size_t j = 0; j < b; ++j) {
    const auto& contrib = table_contrib[j];
    for (std::size_t q = 0; q < contrib.rows.size(); ++q)
      axpy(1.0, contrib.values.row(q),
           grads.encoder_table.row(contrib.rows[q]), d);
  }
  return grads;
}

// Inference: per-document class probabilities through the unjammed path.
// Never mutates the OMM or the model.
inline Matrix predict_probs(const ModelParams& model, const EncoderRuntime& rt,
                            PpmiCache& cache, const OmmState& omm,
                            const DocumentBatch& batch,
                            const PipelineOpts& opts) {
  BatchForward fwd = forward_batch(model, rt, cache, omm, batch, opts,
                                   /*need_jammed=*/false,
                                   /*keep_caches=*/false);
  return classifier_forward(model.clf, fwd.outputs.z);
}

}  // namespace contgcn
