// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "contgcn/contgcn.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace contgcn;

namespace {

struct Check {
  std::string name;
  std::function<void()> fn;
};

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw Failure(msg);
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<SentenceTokens> random_docs(std::size_t u, std::size_t ndocs,
                                        std::mt19937_64& rng) {
  std::vector<SentenceTokens> docs(ndocs);
  for (auto& doc : docs) {
    const std::size_t nsent = 1 + rng() % 4;
    for (std::size_t s = 0; s < nsent; ++s) {
      std::vector<TokenId> sent(1 + rng() % 8);
      for (auto& t : sent) t = static_cast<TokenId>(rng() % u);
      doc.push_back(std::move(sent));
    }
  }
  return docs;
}

TokenizedDocument doc_of(std::vector<TokenId> ids) {
  TokenizedDocument d;
  d.token_ids = std::move(ids);
  return d;
}

// ---------------------------------------------------------------------------
// 1. OMM oracle equivalence under arbitrary chunkings, integer-exact.
void criterion_omm_oracle() {
  const double t0 = now_s();
  std::mt19937_64 rng(1001);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t u = 2 + rng() % 29;
    const std::size_t ndocs = 1 + rng() % 50;
    auto docs = random_docs(u, ndocs, rng);

    OmmState incremental(u);
    std::size_t pos = 0;
    while (pos < docs.size()) {
      const std::size_t len =
          std::min<std::size_t>(1 + rng() % 9, docs.size() - pos);
      omm_update(incremental,
                 std::span<const SentenceTokens>(docs.data() + pos, len));
      pos += len;
    }

    auto recount = oracles::brute_force_recount(u, docs);
    require(oracles::recount_matches(recount, incremental),
            "incremental counters diverged from the brute-force recount");
  }
  require(now_s() - t0 < 5.0, "runtime exceeded 5 s");
}

// ---------------------------------------------------------------------------
// 2. PPMI / TF-IDF against independent dense implementations, 1e-9.
void criterion_ppmi_tfidf_oracle() {
  const double t0 = now_s();
  std::mt19937_64 rng(1002);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t u = 3 + rng() % 28;
    OmmState omm(u);
    // Small corpora keep s low so negative idf and PPMI clamps both occur.
    omm_update(omm, random_docs(u, 1 + rng() % 35, rng));

    Matrix expect = oracles::dense_ppmi(omm);
    Matrix got(u, u);
    build_ppmi(omm).for_each(
        [&](std::size_t r, std::size_t c, double v) { got(r, c) = v; });
    require(oracles::max_abs_diff(expect, got) < 1e-9,
            "PPMI diverged from the dense oracle");

    std::vector<TokenizedDocument> docs;
    for (int j = 0; j < 5; ++j) {
      std::vector<TokenId> ids(1 + rng() % 10);
      for (auto& t : ids) t = static_cast<TokenId>(rng() % u);
      docs.push_back(doc_of(ids));
    }
    auto rows = build_doc_token(omm, docs);
    for (std::size_t j = 0; j < docs.size(); ++j) {
      auto dense = oracles::dense_tfidf_row(omm, docs[j].token_ids);
      std::vector<double> sparse(u, 0.0);
      for (auto& [t, w] : rows[j]) sparse[t] = w;
      for (std::size_t t = 0; t < u; ++t)
        require(std::abs(dense[t] - sparse[t]) < 1e-9,
                "TF-IDF diverged from the dense oracle");
    }
  }

  // Explicit edge cases: zero co-occurrence and the idf clamp boundary.
  OmmState edge(3);
  std::vector<SentenceTokens> docs{{{0}}, {{1}}};
  omm_update(edge, docs);  // s=2, c=[1,1,0], no pairs
  require(build_ppmi(edge).nnz() == 3, "zero counts must stay unstored");
  auto rows = build_doc_token(
      edge, std::vector<TokenizedDocument>{doc_of({0, 1, 2})});
  // c[0]+1 = s -> idf = 0 -> clamped away; token 2 has c=0 -> idf = log 2.
  std::vector<double> dense(3, 0.0);
  for (auto& [t, w] : rows[0]) dense[t] = w;
  require(dense[0] == 0.0 && dense[1] == 0.0,
          "idf clamp boundary must give weight 0");
  require(std::abs(dense[2] - std::log(2.0) / 3.0) < 1e-12,
          "unseen-token idf wrong");
  require(now_s() - t0 < 5.0, "runtime exceeded 5 s");
}

// ---------------------------------------------------------------------------
// 3. Symmetric normalization vs dense oracle up to dim 200, 1e-10.
void criterion_normalize_oracle() {
  std::mt19937_64 rng(1003);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    std::vector<SparseMatrix::Entry> entries;
    for (std::size_t i = 0; i < n; ++i)
      entries.push_back({static_cast<std::uint32_t>(i),
                         static_cast<std::uint32_t>(i), 1.0});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng() % 5 == 0) {
          const double v = static_cast<double>(1 + rng() % 200) / 40.0;
          entries.push_back({static_cast<std::uint32_t>(i),
                             static_cast<std::uint32_t>(j), v});
          entries.push_back({static_cast<std::uint32_t>(j),
                             static_cast<std::uint32_t>(i), v});
        }
    SparseMatrix a = SparseMatrix::from_triplets(n, std::move(entries));
    SparseMatrix tilde = normalize(a);
    require(tilde.is_symmetric(1e-14), "normalized output not symmetric");

    Matrix dense(n, n);
    a.for_each([&](std::size_t r, std::size_t c, double v) {
      dense(r, c) = v;
    });
    Matrix expect = oracles::dense_normalize(dense);
    Matrix got(n, n);
    tilde.for_each([&](std::size_t r, std::size_t c, double v) {
      got(r, c) = v;
    });
    require(oracles::max_abs_diff(expect, got) < 1e-10,
            "normalization diverged from the dense oracle");
  }
}

// ---------------------------------------------------------------------------
// 4. Analytic gradients vs central finite differences at u=20, b=3, d=8,
//    h=2, relative error < 1e-4, for every parameter group.
struct GradWorld {
  OmmState omm{20};
  PpmiCache cache;
  DocumentBatch batch;
  std::vector<std::int32_t> labels;
  ModelParams model;
  PipelineOpts opts;

  explicit GradWorld(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    omm_update(omm, random_docs(20, 40, rng));
    std::vector<TokenizedDocument> docs;
    for (int j = 0; j < 3; ++j) {
      std::vector<TokenId> ids(3 + rng() % 4);
      for (auto& t : ids) t = static_cast<TokenId>(rng() % 20);
      docs.push_back(doc_of(ids));
    }
    batch = assemble_batch(std::move(docs));
    labels = {0, 1, 0};
    model = init_model(20, 8, 2, 2, rng);
    opts.lambda = 0.07;
  }

  double loss(bool with_cls, bool with_aic) {
    BatchForward fwd = forward_batch(model, {}, cache, omm, batch, opts,
                                     with_aic, false);
    auto [losses, g] =
        batch_losses(model, fwd, labels, opts.lambda, with_cls, with_aic);
    return losses.total;
  }

  ModelGrads analytic(bool with_cls, bool with_aic) {
    BatchForward fwd = forward_batch(model, {}, cache, omm, batch, opts,
                                     with_aic, true);
    auto [losses, ograds] =
        batch_losses(model, fwd, labels, opts.lambda, with_cls, with_aic);
    return backward_batch(model, batch, fwd, ograds, opts.lambda, true);
  }
};

void criterion_gradient_integrity() {
  const double t0 = now_s();
  GradWorld w(1004);
  const struct {
    bool cls, aic;
    const char* what;
  } objectives[] = {{true, false, "L_cls"},
                    {false, true, "L_aic"},
                    {true, true, "L_cls + lambda*L_aic"}};
  for (const auto& obj : objectives) {
    ModelGrads grads = w.analytic(obj.cls, obj.aic);
    auto loss = [&] { return w.loss(obj.cls, obj.aic); };
    std::vector<std::pair<Matrix*, Matrix*>> tensors;
    w.model.visit([&](const std::string&, Matrix& m, ParamGroup) {
      tensors.push_back({&m, nullptr});
    });
    std::size_t slot = 0;
    grads.visit([&](const std::string&, Matrix& g, ParamGroup) {
      tensors[slot++].second = &g;
    });
    for (auto [param, grad] : tensors)
      for (std::size_t i = 0; i < param->size(); ++i) {
        const double fd = oracles::central_diff(param->data()[i], loss);
        if (oracles::rel_err(grad->data()[i], fd) >= 1e-4) {
          std::ostringstream os;
          os << obj.what << ": entry " << i << " analytic "
             << grad->data()[i] << " vs fd " << fd;
          throw Failure(os.str());
        }
      }
  }
  require(now_s() - t0 < 30.0, "runtime exceeded 30 s");
}

// ---------------------------------------------------------------------------
// 5. Contrastive identities and the poisoned-label canary.
void criterion_contrastive_identities() {
  // b = 1: exactly zero through the real pipeline.
  GradWorld w(1005);
  DocumentBatch single = assemble_batch({w.batch.docs[0]});
  BatchForward fwd = forward_batch(w.model, {}, w.cache, w.omm, single,
                                   w.opts, true, false);
  auto [losses, g] = batch_losses(w.model, fwd, {}, w.opts.lambda, false,
                                  true);
  require(losses.aic == 0.0, "b=1 contrastive loss must be exactly 0");

  // Permutation invariance through the pipeline.
  std::mt19937_64 rng(1006);
  OmmState omm(30);
  omm_update(omm, random_docs(30, 50, rng));
  PpmiCache cache;
  ModelParams model = init_model(30, 8, 2, 2, rng);
  std::vector<TokenizedDocument> docs;
  for (int j = 0; j < 5; ++j) {
    std::vector<TokenId> ids(2 + rng() % 6);
    for (auto& t : ids) t = static_cast<TokenId>(rng() % 30);
    docs.push_back(doc_of(ids));
  }
  PipelineOpts opts;
  auto aic_of = [&](const std::vector<TokenizedDocument>& order) {
    DocumentBatch batch = assemble_batch(order);
    BatchForward f =
        forward_batch(model, {}, cache, omm, batch, opts, true, false);
    auto [l, gg] = batch_losses(model, f, {}, opts.lambda, false, true);
    return l.aic;
  };
  const double base = aic_of(docs);
  std::vector<TokenizedDocument> perm{docs[3], docs[0], docs[4], docs[1],
                                      docs[2]};
  require(std::abs(aic_of(perm) - base) < 1e-9,
          "contrastive loss changed under batch permutation");

  // Canary: corrupting every update-set label must not move a single bit.
  synthetic::TempDir tmp("accept5");
  synthetic::Spec spec;
  spec.vocab = 40;
  spec.docs = 60;
  synthetic::write_vocab_file(tmp.file("v.txt"), spec.vocab);
  Vocabulary vocab = load_vocabulary(tmp.file("v.txt"));
  DatasetFile ds = synthetic::make_dataset(spec);
  TrainConfig config;
  config.d = 8;
  config.h = 2;
  config.batch_size = 16;
  config.update_epochs = 2;
  config.lr_encoder = 0.05;
  config.lr_gcn = 0.01;
  config.seed = 3;

  TokenizedDataset clean = tokenize_dataset(vocab, ds, config.max_len);
  TokenizedDataset poisoned = clean;
  for (auto& doc : poisoned.docs)
    doc.label = doc.label ? (1 - *doc.label) : 0;

  std::mt19937_64 mrng(9);
  ModelParams m1 = init_model(vocab.size(), config.d, config.h, 2, mrng);
  ModelParams m2 = m1;
  OmmState o1(vocab.size()), o2(vocab.size());
  omm_update_with(o1, clean);
  o2 = o1;
  PpmiCache c1, c2;
  stage3_label_free_update(m1, config, clean, o1, c1);
  stage3_label_free_update(m2, config, poisoned, o2, c2);
  require(m1 == m2, "stage 3 outputs changed when labels were poisoned");
  require(o1 == o2, "stage 3 memory changed when labels were poisoned");
}

// ---------------------------------------------------------------------------
// 6. Isolation: unjammed output of document j is bit-identical when every
//    other batch document is replaced, over 20 random batches.
void criterion_isolation() {
  std::mt19937_64 rng(1007);
  OmmState omm(50);
  omm_update(omm, random_docs(50, 80, rng));
  PpmiCache cache;
  ModelParams model = init_model(50, 8, 3, 2, rng);
  PipelineOpts opts;

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = 2 + rng() % 5;
    auto make_doc = [&] {
      std::vector<TokenId> ids(1 + rng() % 7);
      for (auto& t : ids) t = static_cast<TokenId>(rng() % 50);
      return doc_of(ids);
    };
    const std::size_t pin = rng() % b;
    std::vector<TokenizedDocument> docs_a, docs_b;
    for (std::size_t j = 0; j < b; ++j) {
      TokenizedDocument d = make_doc();
      docs_a.push_back(d);
      docs_b.push_back(j == pin ? d : make_doc());  // replace all others
    }
    BatchForward fa = forward_batch(model, {}, cache, omm,
                                    assemble_batch(docs_a), opts, false,
                                    false);
    BatchForward fb = forward_batch(model, {}, cache, omm,
                                    assemble_batch(docs_b), opts, false,
                                    false);
    for (std::size_t k = 0; k < 8; ++k)
      require(fa.outputs.z(pin, k) == fb.outputs.z(pin, k),
              "unjammed output depended on batch mates");
  }
}

// ---------------------------------------------------------------------------
// Shared trainer for the end-to-end criteria.
struct TrainedRun {
  Vocabulary vocab;
  OmmState omm;
  ModelParams model;
  PpmiCache cache;
  TrainConfig config;
};

TrainConfig desk_config(std::uint64_t seed) {
  TrainConfig config;
  config.d = 16;
  config.h = 2;
  config.batch_size = 32;
  config.epochs = 30;
  config.stage1_epochs = 5;
  config.update_epochs = 3;
  config.lr_encoder = 0.05;
  config.lr_gcn = 0.01;
  config.lambda = 0.03;
  config.patience = 5;
  config.val_fraction = 0.1;
  config.seed = seed;
  return config;
}

TrainedRun train_on(const Vocabulary& vocab, const DatasetFile& train_ds,
                    TrainConfig config) {
  TrainedRun run{vocab, OmmState(vocab.size()), ModelParams{}, {}, config};
  auto tv = split_dataset(train_ds,
                          {1.0 - config.val_fraction, config.val_fraction},
                          detail::sub_seed(config.seed, 11));
  TokenizedDataset train_all = tokenize_dataset(vocab, train_ds,
                                                config.max_len);
  TokenizedDataset train = tokenize_dataset(vocab, tv[0], config.max_len);
  TokenizedDataset val = tokenize_dataset(vocab, tv[1], config.max_len);
  omm_update_with(run.omm, train_all);
  std::mt19937_64 rng(detail::sub_seed(config.seed, 12));
  run.model = init_model(vocab.size(), config.d, config.h,
                         train_ds.class_count(), rng);
  stage1_post_pretrain(run.model, config, train);
  stage2_train(run.model, config, train, val.size() ? &val : nullptr,
               run.omm, run.cache);
  return run;
}

// 7. End-to-end learning on the synthetic corpus: >= 95% test accuracy
//    within 30 epochs and < 3 minutes; beats the majority class by >= 40.
void criterion_end_to_end() {
  const double t0 = now_s();
  synthetic::TempDir tmp("accept7");
  synthetic::Spec spec;
  spec.vocab = 200;
  spec.docs = 500;
  spec.seed = 21;
  synthetic::write_vocab_file(tmp.file("v.txt"), spec.vocab);
  Vocabulary vocab = load_vocabulary(tmp.file("v.txt"));
  DatasetFile train_ds = synthetic::make_dataset(spec, "tr");

  synthetic::Spec test_spec = spec;
  test_spec.docs = 200;
  test_spec.seed = 22;
  DatasetFile test_ds = synthetic::make_dataset(test_spec, "te");

  TrainedRun run = train_on(vocab, train_ds, desk_config(5));
  TokenizedDataset test = tokenize_dataset(vocab, test_ds,
                                           run.config.max_len);
  const double acc = evaluate(run.model, run.cache, run.omm, test,
                              run.config);

  std::size_t majority = 0;
  std::vector<std::size_t> counts(test_ds.class_count(), 0);
  for (const auto& rec : test_ds.records)
    majority = std::max(majority,
                        ++counts[static_cast<std::size_t>(*rec.label)]);
  const double majority_acc =
      static_cast<double>(majority) / static_cast<double>(test_ds.size());

  const double elapsed = now_s() - t0;
  std::printf("      test accuracy %.4f, majority %.4f, %.1f s\n", acc,
              majority_acc, elapsed);
  require(acc >= 0.95, "test accuracy below 0.95");
  require(acc - majority_acc >= 0.40,
          "margin over the majority class below 40 points");
  require(elapsed < 180.0, "runtime exceeded 3 minutes");
}

// ---------------------------------------------------------------------------
// 8. Ablation direction: label-free updating on a distribution-shifted
//    update set must not lose to the frozen model by more than 1 point.
void criterion_ablation_direction() {
  synthetic::TempDir tmp("accept8");
  synthetic::Spec base;
  base.vocab = 120;
  base.span = 96;  // tokens [96, 120) stay unseen until the drift
  base.docs = 240;
  synthetic::write_vocab_file(tmp.file("v.txt"), base.vocab);
  Vocabulary vocab = load_vocabulary(tmp.file("v.txt"));

  double lum_sum = 0.0, static_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    synthetic::Spec train_spec = base;
    train_spec.seed = 100 + seed;
    DatasetFile train_ds = synthetic::make_dataset(train_spec, "tr");

    synthetic::Spec shifted = base;
    shifted.novel_frac = 0.6;  // drift into previously unseen tokens
    shifted.seed = 200 + seed;
    shifted.docs = 150;
    DatasetFile update_ds = synthetic::make_dataset(shifted, "up");
    synthetic::Spec shifted_test = shifted;
    shifted_test.seed = 300 + seed;
    shifted_test.docs = 120;
    DatasetFile test_ds = synthetic::make_dataset(shifted_test, "te");

    TrainConfig config = desk_config(seed);
    config.d = 12;
    config.epochs = 12;
    TrainedRun run = train_on(vocab, train_ds, config);
    TokenizedDataset test = tokenize_dataset(vocab, test_ds,
                                             config.max_len);

    const double acc_static =
        evaluate(run.model, run.cache, run.omm, test, run.config);

    // The online update runs at the default fine-tuning rates.
    run.config.lr_encoder = 1e-5;
    run.config.lr_gcn = 5e-4;
    run.config.update_epochs = 3;
    TokenizedDataset update = tokenize_dataset(vocab, update_ds,
                                               config.max_len);
    stage3_label_free_update(run.model, run.config, update, run.omm,
                             run.cache);
    const double acc_lum =
        evaluate(run.model, run.cache, run.omm, test, run.config);
    lum_sum += acc_lum;
    static_sum += acc_static;
  }
  const double lum = lum_sum / 5.0 * 100.0;
  const double frozen = static_sum / 5.0 * 100.0;
  std::printf("      mean accuracy: with LUM %.2f%%, without updating "
              "%.2f%%\n", lum, frozen);
  require(lum >= frozen - 1.0,
          "label-free updating lost to the frozen model by > 1 point");
}

// ---------------------------------------------------------------------------
// 9. Online-session harness through the CLI: 2:2:6 split, 6 sessions,
//    7 accuracy rows, flat per-session wall time.
void criterion_online_harness() {
  synthetic::TempDir tmp("accept9");
  synthetic::Spec spec;
  spec.vocab = 200;
  spec.docs = 600;
  spec.seed = 31;
  synthetic::write_vocab_file(tmp.file("v.txt"), spec.vocab);
  synthetic::write_corpus_file(tmp.file("corpus.txt"), spec, 50);
  synthetic::write_tsv(synthetic::make_dataset(spec), tmp.file("all.tsv"));

  auto run_cli = [&](const std::string& args, const std::string& out) {
    const std::string cmd = std::string(CONTGCN_CLI_PATH) + " " + args +
                            " > " + tmp.file(out) + " 2> " +
                            tmp.file("err.txt");
    return std::system(cmd.c_str());
  };
  require(run_cli("omm init --vocab " + tmp.file("v.txt") + " --corpus " +
                      tmp.file("corpus.txt") + " --out " + tmp.file("s.omm"),
                  "init.txt") == 0,
          "omm init failed");
  require(
      run_cli("online --vocab " + tmp.file("v.txt") + " --omm " +
                  tmp.file("s.omm") + " --data " + tmp.file("all.tsv") +
                  " --ratios 2:2:6 --sessions 6 --dim 16 --layers 2"
                  " --epochs 6 --stage1-epochs 3 --update-epochs 3"
                  " --batch 16 --lr-encoder 0.05 --lr-gcn 0.01 --seed 13",
              "online.txt") == 0,
      "online command failed");

  std::ifstream in(tmp.file("online.txt"));
  std::string line;
  std::getline(in, line);
  require(line == "session,accuracy,seconds", "missing csv header");
  std::vector<double> accs, secs;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    std::getline(ss, cell, ',');
    accs.push_back(std::stod(cell));
    std::getline(ss, cell, ',');
    secs.push_back(std::stod(cell));
  }
  require(accs.size() == 7, "expected 7 accuracy rows, got " +
                                std::to_string(accs.size()));
  for (double a : accs)
    require(a >= 0.0 && a <= 1.0 && !std::isnan(a), "bad accuracy value");
  // Sessions 1..6 stay within 1.5x of session 1 (session 0 is training).
  for (std::size_t s = 2; s < secs.size(); ++s) {
    std::printf("      session %zu: %.3f s (ratio %.2f)\n", s, secs[s],
                secs[s] / secs[1]);
    require(secs[s] <= 1.5 * secs[1],
            "session wall time exceeded 1.5x the first session");
  }
}

// ---------------------------------------------------------------------------
// 10. Lambda sweep through the CLI: relative accuracy of lambda=0 is
//     exactly 0 and nothing is NaN.
void criterion_lambda_sweep() {
  synthetic::TempDir tmp("accept10");
  synthetic::Spec spec;
  spec.vocab = 100;
  spec.docs = 200;
  spec.seed = 41;
  synthetic::write_vocab_file(tmp.file("v.txt"), spec.vocab);
  synthetic::write_corpus_file(tmp.file("corpus.txt"), spec, 30);
  synthetic::write_tsv(synthetic::make_dataset(spec, "tr"),
                       tmp.file("train.tsv"));
  synthetic::Spec test_spec = spec;
  test_spec.seed = 42;
  test_spec.docs = 80;
  synthetic::write_tsv(synthetic::make_dataset(test_spec, "te"),
                       tmp.file("test.tsv"));

  auto run_cli = [&](const std::string& args, const std::string& out) {
    const std::string cmd = std::string(CONTGCN_CLI_PATH) + " " + args +
                            " > " + tmp.file(out) + " 2> " +
                            tmp.file("err.txt");
    return std::system(cmd.c_str());
  };
  require(run_cli("omm init --vocab " + tmp.file("v.txt") + " --corpus " +
                      tmp.file("corpus.txt") + " --out " + tmp.file("s.omm"),
                  "init.txt") == 0,
          "omm init failed");
  require(run_cli("sweep-lambda --vocab " + tmp.file("v.txt") + " --omm " +
                      tmp.file("s.omm") + " --train " + tmp.file("train.tsv") +
                      " --test " + tmp.file("test.tsv") +
                      " --lambdas 0 0.01 0.03 0.1 0.5 --dim 12 --layers 2"
                      " --epochs 5 --stage1-epochs 2 --batch 16"
                      " --lr-encoder 0.05 --lr-gcn 0.01 --val-frac 0"
                      " --seed 17",
                  "sweep.txt") == 0,
          "sweep-lambda command failed");

  std::ifstream in(tmp.file("sweep.txt"));
  std::string line;
  std::getline(in, line);
  require(line == "lambda,accuracy_pct,relative_pct", "missing csv header");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    const double lambda = std::stod(cell);
    std::getline(ss, cell, ',');
    const double acc = std::stod(cell);
    std::getline(ss, cell, ',');
    const double rel = std::stod(cell);
    require(!std::isnan(acc) && !std::isnan(rel), "NaN in the sweep table");
    if (lambda == 0.0)
      require(rel == 0.0, "lambda=0 relative accuracy must be exactly 0");
    ++rows;
  }
  require(rows == 5, "expected 5 sweep rows");
}

}  // namespace

int main() {
  unsetenv("CONTGCN_THREADS");  // the time-budgeted runs are single-threaded
  const std::vector<Check> checks = {
      {"1. OMM incremental updates equal brute-force recounts",
       criterion_omm_oracle},
      {"2. PPMI and TF-IDF match independent oracles",
       criterion_ppmi_tfidf_oracle},
      {"3. normalization matches the dense oracle",
       criterion_normalize_oracle},
      {"4. analytic gradients match finite differences",
       criterion_gradient_integrity},
      {"5. contrastive identities and poisoned-label canary",
       criterion_contrastive_identities},
      {"6. unjammed outputs are isolated from batch mates",
       criterion_isolation},
      {"7. end-to-end training reaches 95% on the synthetic corpus",
       criterion_end_to_end},
      {"8. label-free updating does not lose to a frozen model",
       criterion_ablation_direction},
      {"9. online harness emits 7 rows with flat session times",
       criterion_online_harness},
      {"10. lambda sweep table is well-formed with a zero baseline",
       criterion_lambda_sweep},
  };

  int failed = 0;
  for (const auto& check : checks) {
    const double t0 = now_s();
    try {
      check.fn();
      std::printf("[PASS] %s (%.1f s)\n", check.name.c_str(), now_s() - t0);
    } catch (const std::exception& e) {
      std::printf("[FAIL] %s: %s\n", check.name.c_str(), e.what());
      ++failed;
    }
    std::fflush(stdout);
  }
  if (failed) std::printf("%d criterion(s) failed\n", failed);
  return failed ? 1 : 0;
}
