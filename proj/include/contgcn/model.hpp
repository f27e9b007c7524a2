#pragma once

#include <cstdint>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "contgcn/encoder.hpp"
#include "contgcn/errors.hpp"
#include "contgcn/gcn.hpp"
#include "contgcn/io.hpp"
#include "contgcn/losses.hpp"
#include "contgcn/matrix.hpp"

namespace contgcn {

enum class ParamGroup { Encoder, Gcn, Classifier };

// Everything gradient-carrying: encoder table, GCN weights, MLP classifier.
struct ModelParams {
  EncoderParams encoder;
  GcnParams gcn;
  ClassifierParams clf;

  std::size_t u() const { return encoder.u(); }
  std::size_t d() const { return encoder.d(); }

  template <typename Fn>
  void visit(Fn&& fn) {
    fn("encoder.table", encoder.table, ParamGroup::Encoder);
    for (std::size_t k = 0; k < gcn.weights.size(); ++k)
      fn("gcn.W" + std::to_string(k + 1), gcn.weights[k], ParamGroup::Gcn);
    fn("clf.W1", clf.w1, ParamGroup::Classifier);
    fn("clf.b1", clf.b1, ParamGroup::Classifier);
    fn("clf.W2", clf.w2, ParamGroup::Classifier);
    fn("clf.b2", clf.b2, ParamGroup::Classifier);
  }

  template <typename Fn>
  void visit(Fn&& fn) const {
    const_cast<ModelParams*>(this)->visit(
        [&](const std::string& name, Matrix& m, ParamGroup g) {
          fn(name, static_cast<const Matrix&>(m), g);
        });
  }

  bool operator==(const ModelParams& o) const {
    bool eq = true;
    std::size_t idx = 0;
    std::vector<const Matrix*> mine, theirs;
    visit([&](const std::string&, const Matrix& m, ParamGroup) {
      mine.push_back(&m);
    });
    o.visit([&](const std::string&, const Matrix& m, ParamGroup) {
      theirs.push_back(&m);
    });
    if (mine.size() != theirs.size()) return false;
    for (; idx < mine.size(); ++idx) eq = eq && (*mine[idx] == *theirs[idx]);
    return eq;
  }
};

// Gradients with the same tensor layout as ModelParams.
struct ModelGrads {
  Matrix encoder_table;
  std::vector<Matrix> gcn_weights;
  ClassifierGrads clf;

  static ModelGrads zeros_like(const ModelParams& p) {
    ModelGrads g;
    g.encoder_table = Matrix(p.encoder.table.rows(), p.encoder.table.cols());
    for (const auto& w : p.gcn.weights)
      g.gcn_weights.emplace_back(w.rows(), w.cols());
    g.clf.w1 = Matrix(p.clf.w1.rows(), p.clf.w1.cols());
    g.clf.b1 = Matrix(p.clf.b1.rows(), p.clf.b1.cols());
    g.clf.w2 = Matrix(p.clf.w2.rows(), p.clf.w2.cols());
    g.clf.b2 = Matrix(p.clf.b2.rows(), p.clf.b2.cols());
    return g;
  }

  void add(const ModelGrads& o, double scale = 1.0) {
    add_inplace(encoder_table, o.encoder_table, scale);
    for (std::size_t k = 0; k < gcn_weights.size(); ++k)
      add_inplace(gcn_weights[k], o.gcn_weights[k], scale);
    add_inplace(clf.w1, o.clf.w1, scale);
    add_inplace(clf.b1, o.clf.b1, scale);
    add_inplace(clf.w2, o.clf.w2, scale);
    add_inplace(clf.b2, o.clf.b2, scale);
  }

  template <typename Fn>
  void visit(Fn&& fn) {
    fn("encoder.table", encoder_table, ParamGroup::Encoder);
    for (std::size_t k = 0; k < gcn_weights.size(); ++k)
      fn("gcn.W" + std::to_string(k + 1), gcn_weights[k], ParamGroup::Gcn);
    fn("clf.W1", clf.w1, ParamGroup::Classifier);
    fn("clf.b1", clf.b1, ParamGroup::Classifier);
    fn("clf.W2", clf.w2, ParamGroup::Classifier);
    fn("clf.b2", clf.b2, ParamGroup::Classifier);
  }
};

inline ModelParams init_model(std::size_t u, std::size_t d, std::size_t h,
                              std::size_t c, std::mt19937_64& rng) {
  ModelParams m;
  m.encoder = init_encoder(u, d, rng);
  m.gcn = init_gcn(h, d, rng);
  m.clf = init_classifier(d, c, rng);
  return m;
}

// Adam with per-group learning rates and per-stage group selection; frozen
// groups are skipped entirely so their moments never move.
class Adam {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double lr_encoder = 1e-5;
    double lr_other = 5e-4;
    bool update_encoder = true;
    bool update_gcn = true;
    bool update_classifier = true;
  };

  explicit Adam(const ModelParams& params, Options opt) : opt_(opt) {
    params.visit([&](const std::string&, const Matrix& m, ParamGroup) {
      m_.emplace_back(m.rows(), m.cols());
      v_.emplace_back(m.rows(), m.cols());
    });
  }

  void step(ModelParams& params, ModelGrads& grads) {
    t_ += 1;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    std::size_t slot = 0;
    std::vector<std::pair<Matrix*, ParamGroup>> tensors;
    params.visit([&](const std::string&, Matrix& m, ParamGroup g) {
      tensors.push_back({&m, g});
    });
    std::vector<Matrix*> gtensors;
    grads.visit([&](const std::string&, Matrix& m, ParamGroup) {
      gtensors.push_back(&m);
    });
    for (; slot < tensors.size(); ++slot) {
      auto [param, group] = tensors[slot];
      if (!enabled(group)) continue;
      const double lr =
          group == ParamGroup::Encoder ? opt_.lr_encoder : opt_.lr_other;
      Matrix& m = m_[slot];
      Matrix& v = v_[slot];
      const Matrix& g = *gtensors[slot];
      for (std::size_t i = 0; i < param->size(); ++i) {
        const double gi = g.data()[i];
        m.data()[i] = opt_.beta1 * m.data()[i] + (1.0 - opt_.beta1) * gi;
        v.data()[i] = opt_.beta2 * v.data()[i] + (1.0 - opt_.beta2) * gi * gi;
        const double mhat = m.data()[i] / bc1;
        const double vhat = v.data()[i] / bc2;
        param->data()[i] -= lr * mhat / (std::sqrt(vhat) + opt_.eps);
      }
    }
  }

 private:
  bool enabled(ParamGroup g) const {
    switch (g) {
      case ParamGroup::Encoder: return opt_.update_encoder;
      case ParamGroup::Gcn: return opt_.update_gcn;
      case ParamGroup::Classifier: return opt_.update_classifier;
    }
    return false;
  }

  Options opt_;
  std::uint64_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

namespace detail {
inline constexpr char kCkptMagic[8] = {'C', 'G', 'C', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCkptFormatVersion = 1;
}  // namespace detail

// Training-configuration echo persisted with every checkpoint so inference
// commands can rebuild the exact pipeline shape.
struct CheckpointMeta {
  std::uint64_t u = 0;
  std::uint32_t d = 0;
  std::uint32_t h = 0;
  std::uint32_t c = 0;
  std::uint32_t max_len = 128;
  double lambda = 0.03;
  double lr_encoder = 1e-5;
  double lr_gcn = 5e-4;
  std::uint32_t epochs = 0;
  std::uint32_t batch_size = 64;
  std::uint64_t seed = 0;
  std::string stage;
  std::string encoder_mode = "tiny";
  std::vector<std::string> label_names;

  bool operator==(const CheckpointMeta&) const = default;
};

inline void save_checkpoint(const std::string& path, const ModelParams& model,
                            const CheckpointMeta& meta) {
  ByteWriter w;
  w.put_bytes(detail::kCkptMagic, 8);
  w.put_u32(detail::kCkptFormatVersion);
  w.put_u64(meta.u);
  w.put_u32(meta.d);
  w.put_u32(meta.h);
  w.put_u32(meta.c);
  w.put_u32(meta.max_len);
  w.put_f64(meta.lambda);
  w.put_f64(meta.lr_encoder);
  w.put_f64(meta.lr_gcn);
  w.put_u32(meta.epochs);
  w.put_u32(meta.batch_size);
  w.put_u64(meta.seed);
  w.put_string(meta.stage);
  w.put_string(meta.encoder_mode);
  w.put_u64(meta.label_names.size());
  for (const auto& name : meta.label_names) w.put_string(name);

  std::uint32_t ntensors = 0;
  model.visit([&](const std::string&, const Matrix&, ParamGroup) {
    ++ntensors;
  });
  w.put_u32(ntensors);
  model.visit([&](const std::string& name, const Matrix& m, ParamGroup) {
    w.put_string(name);
    w.put_u32(static_cast<std::uint32_t>(m.rows()));
    w.put_u32(static_cast<std::uint32_t>(m.cols()));
    for (std::size_t i = 0; i < m.size(); ++i) w.put_f64(m.data()[i]);
  });
  w.finalize();
  w.write_atomic(path);
}

struct Checkpoint {
  ModelParams model;
  CheckpointMeta meta;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  ByteReader r = ByteReader::from_file(path);
  r.verify_checksum();
  char magic[8];
  r.get_bytes(magic, 8);
  if (std::memcmp(magic, detail::kCkptMagic, 8) != 0)
    throw data_error(ErrorCode::BadFormat, "not a checkpoint: " + path);
  if (r.get_u32() != detail::kCkptFormatVersion)
    throw data_error(ErrorCode::BadFormat, "unsupported checkpoint version");
  Checkpoint ckpt;
  CheckpointMeta& meta = ckpt.meta;
  meta.u = r.get_u64();
  meta.d = r.get_u32();
  meta.h = r.get_u32();
  meta.c = r.get_u32();
  meta.max_len = r.get_u32();
  meta.lambda = r.get_f64();
  meta.lr_encoder = r.get_f64();
  meta.lr_gcn = r.get_f64();
  meta.epochs = r.get_u32();
  meta.batch_size = r.get_u32();
  meta.seed = r.get_u64();
  meta.stage = r.get_string();
  meta.encoder_mode = r.get_string();
  const std::uint64_t nlabels = r.get_u64();
  for (std::uint64_t i = 0; i < nlabels; ++i)
    meta.label_names.push_back(r.get_string());

  std::mt19937_64 dummy(0);
  ckpt.model = init_model(meta.u, meta.d, meta.h, meta.c, dummy);
  const std::uint32_t ntensors = r.get_u32();
  std::vector<std::pair<std::string, Matrix*>> slots;
  ckpt.model.visit([&](const std::string& name, Matrix& m, ParamGroup) {
    slots.push_back({name, &m});
  });
  if (ntensors != slots.size())
    throw data_error(ErrorCode::BadFormat, "tensor count mismatch");
  for (std::uint32_t k = 0; k < ntensors; ++k) {
    const std::string name = r.get_string();
    if (name != slots[k].first)
      throw data_error(ErrorCode::BadFormat, "unexpected tensor " + name);
    const std::uint32_t rows = r.get_u32();
    const std::uint32_t cols = r.get_u32();
    Matrix& m = *slots[k].second;
    if (rows != m.rows() || cols != m.cols())
      throw data_error(ErrorCode::BadFormat, "tensor shape mismatch " + name);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = r.get_f64();
  }
  if (!r.at_payload_end())
    throw data_error(ErrorCode::BadFormat, "trailing bytes in checkpoint");
  return ckpt;
}

}  // namespace contgcn
