#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "contgcn/dataset.hpp"
#include "contgcn/errors.hpp"
#include "contgcn/model.hpp"
#include "contgcn/omm.hpp"
#include "contgcn/pipeline.hpp"
#include "contgcn/vocab.hpp"

namespace contgcn {

enum class Stage { PostPretrain, Train, LabelFreeUpdate };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::PostPretrain: return "post_pretrain";
    case Stage::Train: return "train";
    case Stage::LabelFreeUpdate: return "label_free_update";
  }
  return "?";
}

struct TrainConfig {
  double lambda = 0.03;
  double lr_encoder = 1e-5;
  double lr_gcn = 5e-4;
  std::uint32_t epochs = 30;
  std::uint32_t batch_size = 64;
  std::uint64_t seed = 0;
  Stage stage = Stage::Train;

  std::uint32_t d = 64;
  std::uint32_t h = 3;
  std::uint32_t max_len = 128;
  double val_fraction = 0.1;
  std::uint32_t patience = 5;
  std::uint32_t stage1_epochs = 10;
  std::uint32_t update_epochs = 5;
  double dropout = 0.0;
  bool khop_project = false;

  void validate() const {
    if (batch_size < 1)
      throw data_error(ErrorCode::BadConfig, "batch_size must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw data_error(ErrorCode::BadConfig, "lambda must be finite and >= 0");
    if (h < 1) throw data_error(ErrorCode::BadConfig, "h must be >= 1");
    if (d < 1) throw data_error(ErrorCode::BadConfig, "d must be >= 1");
  }
};

struct MetricsRow {
  std::string stage;
  std::int32_t session = 0;
  std::int32_t epoch = 0;
  double loss_cls = std::nan("");
  double loss_aic = std::nan("");
  double val_acc = std::nan("");
  double test_acc = std::nan("");
  double seconds = 0.0;
};

// Collects per-epoch rows; absent values serialize as empty CSV cells.
class MetricsSink {
 public:
  void add(MetricsRow row) { rows_.push_back(std::move(row)); }
  const std::vector<MetricsRow>& rows() const { return rows_; }

  static std::string cell(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw data_error(ErrorCode::Io, "cannot open: " + path);
    out << "stage,session,epoch,loss_cls,loss_aic,val_acc,test_acc,seconds\n";
    for (const auto& r : rows_)
      out << r.stage << ',' << r.session << ',' << r.epoch << ','
          << cell(r.loss_cls) << ',' << cell(r.loss_aic) << ','
          << cell(r.val_acc) << ',' << cell(r.test_acc) << ','
          << cell(r.seconds) << '\n';
  }

 private:
  std::vector<MetricsRow> rows_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag));
}

inline double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace detail

// A dataset tokenized once up front: classification views plus the
// per-sentence token lists the OMM consumes.
struct TokenizedDataset {
  std::vector<TokenizedDocument> docs;
  std::vector<std::string> keys;
  std::vector<SentenceTokens> sentences;
  std::vector<std::string> label_names;

  std::size_t size() const { return docs.size(); }
};

inline TokenizedDataset tokenize_dataset(const Vocabulary& vocab,
                                         const DatasetFile& ds,
                                         std::size_t max_len) {
  TokenizedDataset out;
  out.label_names = ds.label_names;
  out.docs.reserve(ds.size());
  out.keys.reserve(ds.size());
  out.sentences.reserve(ds.size());
  for (const auto& rec : ds.records) {
    TokenizedDocument doc = tokenize(vocab, rec.text, max_len);
    doc.label = rec.label;
    out.docs.push_back(std::move(doc));
    out.keys.push_back(rec.id);
    out.sentences.push_back(tokenize_sentences(vocab, rec.text));
  }
  return out;
}

inline void omm_update_with(OmmState& omm, const TokenizedDataset& data) {
  omm_update(omm, std::span<const SentenceTokens>(data.sentences));
}

namespace detail {

inline std::vector<std::vector<std::size_t>> epoch_batches(
    std::size_t n, std::size_t batch_size, std::mt19937_64& rng,
    bool shuffle_docs) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (shuffle_docs) std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += batch_size) {
    const std::size_t end = std::min(n, i + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

inline DocumentBatch gather_batch(const TokenizedDataset& data,
                                  std::span<const std::size_t> idx) {
  std::vector<TokenizedDocument> docs;
  std::vector<std::string> keys;
  docs.reserve(idx.size());
  keys.reserve(idx.size());
  for (std::size_t i : idx) {
    docs.push_back(data.docs[i]);
    keys.push_back(data.keys[i]);
  }
  return assemble_batch(std::move(docs), std::move(keys));
}

inline std::vector<std::int32_t> gather_labels(
    const TokenizedDataset& data, std::span<const std::size_t> idx) {
  std::vector<std::int32_t> labels;
  labels.reserve(idx.size());
  for (std::size_t i : idx) {
    if (!data.docs[i].label)
      throw data_error(ErrorCode::InvalidLabel,
                       "unlabeled document in a labeled stage");
    labels.push_back(*data.docs[i].label);
  }
  return labels;
}

}  // namespace detail

// Accuracy of the pure inference path over the labeled records of `data`.
inline double evaluate(const ModelParams& model, PpmiCache& cache,
                       const OmmState& omm, const TokenizedDataset& data,
                       const TrainConfig& config, EncoderRuntime rt = {}) {
  PipelineOpts opts{config.lambda, config.khop_project, 0.0};
  std::size_t correct = 0, total = 0;
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.docs[i].label) labeled.push_back(i);
  if (labeled.empty())
    throw data_error(ErrorCode::InvalidLabel, "no labeled documents to score");
  for (std::size_t start = 0; start < labeled.size();
       start += config.batch_size) {
    const std::size_t end =
        std::min(labeled.size(), start + config.batch_size);
    std::span<const std::size_t> idx(labeled.data() + start, end - start);
    DocumentBatch batch = detail::gather_batch(data, idx);
    Matrix probs = predict_probs(model, rt, cache, omm, batch, opts);
    for (std::size_t r = 0; r < probs.rows(); ++r) {
      std::size_t argmax = 0;
      for (std::size_t c = 1; c < probs.cols(); ++c)
        if (probs(r, c) > probs(r, argmax)) argmax = c;
      correct +=
          argmax == static_cast<std::size_t>(*data.docs[idx[r]].label);
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

// Stage 1: warm-start the encoder and classifier with the classification
// task alone; the graph machinery stays out of the loop.
inline void stage1_post_pretrain(ModelParams& model, const TrainConfig& config,
                                 const TokenizedDataset& train,
                                 MetricsSink* metrics = nullptr,
                                 std::int32_t session = 0,
                                 EncoderRuntime rt = {}) {
  config.validate();
  if (train.size() == 0 ||
      std::none_of(train.docs.begin(), train.docs.end(),
                   [](const TokenizedDocument& d) { return d.label.has_value(); }))
    throw data_error(ErrorCode::InvalidLabel,
                     "post-pretraining needs labeled data");
  Adam::Options aopt;
  aopt.lr_encoder = config.lr_encoder;
  aopt.lr_other = config.lr_gcn;
  aopt.update_gcn = false;
  aopt.update_encoder = rt.tiny();
  Adam adam(model, aopt);
  std::mt19937_64 rng(detail::sub_seed(config.seed, 1));
  for (std::uint32_t epoch = 0; epoch < config.stage1_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    auto batches =
        detail::epoch_batches(train.size(), config.batch_size, rng, true);
    double loss_sum = 0.0;
    std::size_t nbatches = 0;
    for (const auto& idx : batches) {
      DocumentBatch batch = detail::gather_batch(train, idx);
      auto labels = detail::gather_labels(train, idx);
      EncodedBatch enc = run_encoder(model, rt, batch);
      auto cls = classification_loss(enc.doc_embeddings, labels, model.clf);
      loss_sum += cls.loss;
      ++nbatches;
      ModelGrads grads = ModelGrads::zeros_like(model);
      grads.clf = std::move(cls.d_clf);
      if (rt.tiny()) {
        for (std::size_t j = 0; j < batch.size(); ++j) {
          const auto& ids = batch.docs[j].token_ids;
          const double inv = 1.0 / static_cast<double>(ids.size());
          for (TokenId t : ids)
            axpy(inv, cls.d_z.row(j),
                 grads.encoder_table.row(static_cast<std::size_t>(t)),
                 model.d());
        }
      }
      adam.step(model, grads);
    }
    if (metrics) {
      MetricsRow row;
      row.stage = stage_name(Stage::PostPretrain);
      row.session = session;
      row.epoch = static_cast<std::int32_t>(epoch);
      row.loss_cls = loss_sum / static_cast<double>(std::max<std::size_t>(
                                    1, nbatches));
      row.seconds = detail::elapsed_s(t0);
      metrics->add(row);
    }
  }
}

struct Stage2Result {
  double best_val_acc = std::nan("");
  std::uint32_t epochs_run = 0;
};

// Stage 2: the multi-task objective over the dynamically rebuilt graph.
// Expects the OMM to already include the training data. Tracks validation
// accuracy, keeps the best parameters, stops early on a patience budget.
inline Stage2Result stage2_train(ModelParams& model, const TrainConfig& config,
                                 const TokenizedDataset& train,
                                 const TokenizedDataset* val, OmmState& omm,
                                 PpmiCache& cache,
                                 MetricsSink* metrics = nullptr,
                                 const TokenizedDataset* test = nullptr,
                                 std::int32_t session = 0,
                                 EncoderRuntime rt = {}) {
  config.validate();
  if (omm.s == 0)
    throw data_error(ErrorCode::EmptyMemory,
                     "stage 2 requires an updated occurrence memory");
  PipelineOpts opts{config.lambda, config.khop_project, config.dropout};
  Adam::Options aopt;
  aopt.lr_encoder = config.lr_encoder;
  aopt.lr_other = config.lr_gcn;
  aopt.update_encoder = rt.tiny();
  Adam adam(model, aopt);
  std::mt19937_64 rng(detail::sub_seed(config.seed, 2));

  Stage2Result result;
  ModelParams best = model;
  std::uint32_t since_best = 0;
  std::uint64_t step = 0;
  const bool track_val = val != nullptr && val->size() > 0;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    auto batches =
        detail::epoch_batches(train.size(), config.batch_size, rng, true);
    double cls_sum = 0.0, aic_sum = 0.0;
    for (const auto& idx : batches) {
      opts.dropout_seed = detail::sub_seed(config.seed, 0xd0 + step++);
      DocumentBatch batch = detail::gather_batch(train, idx);
      auto labels = detail::gather_labels(train, idx);
      const bool with_aic = config.lambda > 0.0;
      BatchForward fwd =
          forward_batch(model, rt, cache, omm, batch, opts,
                        /*need_jammed=*/with_aic, /*keep_caches=*/true);
      auto [losses, ograds] = batch_losses(model, fwd, labels, config.lambda,
                                           /*with_cls=*/true, with_aic);
      cls_sum += losses.cls;
      aic_sum += losses.aic;
      ModelGrads grads = backward_batch(model, batch, fwd, ograds,
                                        config.lambda, rt.tiny());
      adam.step(model, grads);
    }
    result.epochs_run = epoch + 1;

    MetricsRow row;
    row.stage = stage_name(Stage::Train);
    row.session = session;
    row.epoch = static_cast<std::int32_t>(epoch);
    row.loss_cls = cls_sum / static_cast<double>(std::max<std::size_t>(
                                 1, batches.size()));
    row.loss_aic = aic_sum / static_cast<double>(std::max<std::size_t>(
                                 1, batches.size()));
    if (track_val) {
      const double acc = evaluate(model, cache, omm, *val, config, rt);
      row.val_acc = acc;
      if (std::isnan(result.best_val_acc) || acc > result.best_val_acc) {
        result.best_val_acc = acc;
        best = model;
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    if (test) row.test_acc = evaluate(model, cache, omm, *test, config, rt);
    row.seconds = detail::elapsed_s(t0);
    if (metrics) metrics->add(row);
    if (track_val && since_best >= config.patience) break;
  }
  if (track_val) model = best;
  return result;
}

// Stage 3, the label-free updating mechanism: fold the new unlabeled data
// into the OMM, then fine-tune encoder and GCN on the contrastive task
// alone. Labels are stripped on entry and the classifier stays frozen.
inline void stage3_label_free_update(ModelParams& model,
                                     const TrainConfig& config,
                                     const TokenizedDataset& update_data,
                                     OmmState& omm, PpmiCache& cache,
                                     MetricsSink* metrics = nullptr,
                                     std::int32_t session = 0,
                                     EncoderRuntime rt = {}) {
  config.validate();
  if (update_data.size() == 0) return;  // no-op; callers warn

  TokenizedDataset unlabeled = update_data;
  for (auto& doc : unlabeled.docs) doc.label.reset();

  omm_update_with(omm, unlabeled);

  PipelineOpts opts{config.lambda, config.khop_project, config.dropout};
  Adam::Options aopt;
  aopt.lr_encoder = config.lr_encoder;
  aopt.lr_other = config.lr_gcn;
  aopt.update_classifier = false;
  aopt.update_encoder = rt.tiny();
  Adam adam(model, aopt);
  std::mt19937_64 rng(detail::sub_seed(config.seed, 3));
  std::uint64_t step = 0;
  for (std::uint32_t epoch = 0; epoch < config.update_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    auto batches = detail::epoch_batches(unlabeled.size(), config.batch_size,
                                         rng, true);
    double aic_sum = 0.0;
    for (const auto& idx : batches) {
      opts.dropout_seed = detail::sub_seed(config.seed, 0xe0 + step++);
      DocumentBatch batch = detail::gather_batch(unlabeled, idx);
      BatchForward fwd =
          forward_batch(model, rt, cache, omm, batch, opts,
                        /*need_jammed=*/true, /*keep_caches=*/true);
      auto [losses, ograds] =
          batch_losses(model, fwd, {}, config.lambda,
                       /*with_cls=*/false, /*with_aic=*/true);
      aic_sum += losses.aic;
      ModelGrads grads = backward_batch(model, batch, fwd, ograds,
                                        config.lambda, rt.tiny());
      adam.step(model, grads);
    }
    if (metrics) {
      MetricsRow row;
      row.stage = stage_name(Stage::LabelFreeUpdate);
      row.session = session;
      row.epoch = static_cast<std::int32_t>(epoch);
      row.loss_aic = aic_sum / static_cast<double>(std::max<std::size_t>(
                                   1, batches.size()));
      row.seconds = detail::elapsed_s(t0);
      metrics->add(row);
    }
  }
}

struct SessionResult {
  std::int32_t session = 0;
  double accuracy = 0.0;
  double seconds = 0.0;  // initial training time for session 0
};

struct OnlineSpec {
  std::vector<double> ratios{0.2, 0.2, 0.6};  // train : test : update
  std::uint32_t sessions = 6;
  bool labeled_sessions = false;  // true: update with stage 2 on labels
};

// Online protocol: train once, then feed the update set session by session,
// scoring the fixed test set after each. Label-free sessions run stage 3;
// labeled mode reruns stage 2 per part.
inline std::vector<SessionResult> run_online_sessions(
    const TrainConfig& config, const OnlineSpec& spec, const Vocabulary& vocab,
    const DatasetFile& dataset, OmmState omm, ModelParams& model,
    MetricsSink* metrics = nullptr) {
  config.validate();
  if (spec.ratios.size() != 3)
    throw data_error(ErrorCode::BadRatio,
                     "online split needs train:test:update ratios");
  auto parts = split_dataset(dataset, spec.ratios,
                             detail::sub_seed(config.seed, 10));
  TokenizedDataset train_all =
      tokenize_dataset(vocab, parts[0], config.max_len);
  TokenizedDataset test = tokenize_dataset(vocab, parts[1], config.max_len);
  auto update_parts = split_equal_parts(parts[2], spec.sessions);

  // Hold out validation from the training part.
  std::vector<double> val_split{1.0 - config.val_fraction,
                                config.val_fraction};
  auto tv = split_dataset(parts[0], val_split,
                          detail::sub_seed(config.seed, 11));
  TokenizedDataset train = tokenize_dataset(vocab, tv[0], config.max_len);
  TokenizedDataset val = tokenize_dataset(vocab, tv[1], config.max_len);

  PpmiCache cache;
  std::vector<SessionResult> results;

  auto t0 = std::chrono::steady_clock::now();
  omm_update_with(omm, train_all);
  stage1_post_pretrain(model, config, train, metrics, 0);
  stage2_train(model, config, train, val.size() ? &val : nullptr, omm, cache,
               metrics, nullptr, 0);
  const double train_secs = detail::elapsed_s(t0);
  results.push_back(
      {0, evaluate(model, cache, omm, test, config), train_secs});

  for (std::uint32_t sess = 1; sess <= spec.sessions; ++sess) {
    TokenizedDataset part = tokenize_dataset(
        vocab, update_parts[sess - 1], config.max_len);
    t0 = std::chrono::steady_clock::now();
    if (spec.labeled_sessions) {
      omm_update_with(omm, part);
      stage2_train(model, config, part, val.size() ? &val : nullptr, omm,
                   cache, metrics, nullptr, static_cast<std::int32_t>(sess));
    } else {
      stage3_label_free_update(model, config, part, omm, cache, metrics,
                               static_cast<std::int32_t>(sess));
    }
    const double secs = detail::elapsed_s(t0);
    results.push_back({static_cast<std::int32_t>(sess),
                       evaluate(model, cache, omm, test, config), secs});
  }
  return results;
}

struct SweepRow {
  double lambda = 0.0;
  double accuracy_pct = 0.0;   // test accuracy in percent
  double relative_pct = 0.0;   // accuracy(lambda) - accuracy(0)
};

// Repeat training over a lambda grid from the same seed; relative accuracy
// is the percentage-point difference against the lambda = 0 run.
inline std::vector<SweepRow> sweep_lambda(
    const TrainConfig& base_config, std::vector<double> lambdas,
    const Vocabulary& vocab, const DatasetFile& train_ds,
    const DatasetFile& test_ds, const OmmState& base_omm,
    MetricsSink* metrics = nullptr) {
  if (lambdas.empty())
    throw data_error(ErrorCode::BadConfig, "empty lambda grid");
  bool has_zero = false;
  for (double l : lambdas) has_zero = has_zero || l == 0.0;
  if (!has_zero) lambdas.insert(lambdas.begin(), 0.0);

  DatasetFile test_remapped = test_ds;
  remap_labels(test_remapped, train_ds.label_names);

  std::vector<double> val_split{1.0 - base_config.val_fraction,
                                base_config.val_fraction};
  auto tv = split_dataset(train_ds, val_split,
                          detail::sub_seed(base_config.seed, 11));
  TokenizedDataset train_all =
      tokenize_dataset(vocab, train_ds, base_config.max_len);
  TokenizedDataset train =
      tokenize_dataset(vocab, tv[0], base_config.max_len);
  TokenizedDataset val = tokenize_dataset(vocab, tv[1], base_config.max_len);
  TokenizedDataset test = tokenize_dataset(vocab, test_remapped,
                                           base_config.max_len);

  double acc0 = std::nan("");
  std::vector<SweepRow> rows;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    TrainConfig config = base_config;
    config.lambda = lambdas[k];
    OmmState omm = base_omm;
    PpmiCache cache;
    omm_update_with(omm, train_all);
    std::mt19937_64 rng(detail::sub_seed(config.seed, 12));
    ModelParams model = init_model(vocab.size(), config.d, config.h,
                                   train_ds.label_names.size(), rng);
    stage1_post_pretrain(model, config, train, metrics,
                         static_cast<std::int32_t>(k));
    stage2_train(model, config, train, val.size() ? &val : nullptr, omm,
                 cache, metrics, nullptr, static_cast<std::int32_t>(k));
    const double acc = evaluate(model, cache, omm, test, config) * 100.0;
    if (lambdas[k] == 0.0) acc0 = acc;
    rows.push_back({lambdas[k], acc, 0.0});
  }
  for (auto& row : rows) row.relative_pct = row.accuracy_pct - acc0;
  return rows;
}

}  // namespace contgcn
