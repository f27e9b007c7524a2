// Command-line surface of the continual GCN text-classification engine.
//
// Subcommands: omm init|update|stats, train, update, eval, classify,
// online, sweep-lambda. Exit codes: 0 success, 1 usage error, 2 data
// error, 3 numerical error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "contgcn/contgcn.hpp"

namespace {

using namespace contgcn;

struct CliState {
  RunConfig cfg;
  std::string save_config_path;
  std::vector<double> lambdas{0.0, 0.01, 0.03, 0.1, 0.5};
  std::string classify_input;
  std::string omm_out;
  std::string model_out;
  bool no_omm_update = false;
  bool labeled_sessions = false;
  std::string stage1_epochs_note;
};

EncoderRuntime make_encoder_runtime(const RunConfig& cfg,
                                    std::optional<ExternalEmbeddings>& slot) {
  if (cfg.encoder_mode == "tiny") return {};
  const std::string prefix = "external:";
  if (cfg.encoder_mode.rfind(prefix, 0) != 0)
    throw data_error(ErrorCode::BadConfig,
                     "encoder must be 'tiny' or 'external:<path>', got '" +
                         cfg.encoder_mode + "'");
  slot = ExternalEmbeddings::load(cfg.encoder_mode.substr(prefix.size()));
  return EncoderRuntime{&*slot};
}

void add_train_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--lambda", cfg.train.lambda,
                  "contrastive loss weight");
  cmd->add_option("--lr-encoder", cfg.train.lr_encoder,
                  "encoder learning rate");
  cmd->add_option("--lr-gcn", cfg.train.lr_gcn,
                  "GCN/classifier learning rate");
  cmd->add_option("--epochs", cfg.train.epochs, "training epochs");
  cmd->add_option("--batch", cfg.train.batch_size, "batch size");
  cmd->add_option("--seed", cfg.train.seed, "RNG seed");
  cmd->add_option("--dim", cfg.train.d, "embedding dimension");
  cmd->add_option("--layers", cfg.train.h, "graph convolution layers");
  cmd->add_option("--max-len", cfg.train.max_len, "maximum document length");
  cmd->add_option("--val-frac", cfg.train.val_fraction,
                  "validation holdout fraction");
  cmd->add_option("--patience", cfg.train.patience, "early-stop patience");
  cmd->add_option("--stage1-epochs", cfg.train.stage1_epochs,
                  "post-pretraining epochs");
  cmd->add_option("--update-epochs", cfg.train.update_epochs,
                  "label-free update epochs");
  cmd->add_option("--dropout", cfg.train.dropout, "dropout rate (default 0)");
  cmd->add_flag("--khop-project", cfg.train.khop_project,
                "restrict graphs to tokens within h hops of the batch");
  cmd->add_option("--encoder", cfg.encoder_mode,
                  "document encoder: tiny | external:<path>");
}

// Shared "load model + omm + vocab" preamble for inference-style commands.
struct LoadedModel {
  Vocabulary vocab;
  OmmState omm;
  Checkpoint ckpt;
  TrainConfig config;
};

LoadedModel load_model_state(const RunConfig& cfg) {
  if (cfg.vocab_path.empty() || cfg.omm_path.empty() ||
      cfg.model_path.empty())
    throw usage_error(ErrorCode::BadConfig,
                      "--vocab, --omm and --model are required");
  LoadedModel lm{load_vocabulary(cfg.vocab_path), omm_load(cfg.omm_path),
                 load_checkpoint(cfg.model_path), cfg.train};
  if (lm.ckpt.meta.u != lm.vocab.size())
    throw data_error(ErrorCode::DimMismatch,
                     "checkpoint vocabulary size does not match --vocab");
  lm.config.d = lm.ckpt.meta.d;
  lm.config.h = lm.ckpt.meta.h;
  lm.config.max_len = lm.ckpt.meta.max_len;
  return lm;
}

CheckpointMeta make_meta(const RunConfig& cfg, std::size_t u,
                         std::vector<std::string> label_names) {
  CheckpointMeta meta;
  meta.u = u;
  meta.d = cfg.train.d;
  meta.h = cfg.train.h;
  meta.c = static_cast<std::uint32_t>(label_names.size());
  meta.max_len = cfg.train.max_len;
  meta.lambda = cfg.train.lambda;
  meta.lr_encoder = cfg.train.lr_encoder;
  meta.lr_gcn = cfg.train.lr_gcn;
  meta.epochs = cfg.train.epochs;
  meta.batch_size = cfg.train.batch_size;
  meta.seed = cfg.train.seed;
  meta.stage = stage_name(cfg.train.stage);
  meta.encoder_mode = cfg.encoder_mode;
  meta.label_names = std::move(label_names);
  return meta;
}

int cmd_omm_init(const CliState& st) {
  const auto& cfg = st.cfg;
  if (cfg.vocab_path.empty() || cfg.corpus_path.empty())
    throw usage_error(ErrorCode::BadConfig, "--vocab and --corpus required");
  const std::string out = st.omm_out.empty() ? cfg.omm_path : st.omm_out;
  if (out.empty())
    throw usage_error(ErrorCode::BadConfig, "--out required");
  Vocabulary vocab = load_vocabulary(cfg.vocab_path);
  OmmState omm(vocab.size());
  omm_merge_from_corpus(omm, vocab, cfg.corpus_path);
  omm_save(omm, out);
  std::printf("initialized omm: u=%llu s=%llu pairs=%zu -> %s\n",
              static_cast<unsigned long long>(omm.u),
              static_cast<unsigned long long>(omm.s), omm.C.size(),
              out.c_str());
  return 0;
}

int cmd_omm_update(const CliState& st) {
  const auto& cfg = st.cfg;
  if (cfg.vocab_path.empty() || cfg.omm_path.empty() ||
      cfg.update_path.empty())
    throw usage_error(ErrorCode::BadConfig,
                      "--vocab, --state and --data required");
  Vocabulary vocab = load_vocabulary(cfg.vocab_path);
  OmmState omm = omm_load(cfg.omm_path);
  if (omm.u != vocab.size())
    throw data_error(ErrorCode::DimMismatch,
                     "snapshot vocabulary size does not match --vocab");
  DatasetFile ds = ingest_dataset(cfg.update_path);
  std::vector<SentenceTokens> docs;
  docs.reserve(ds.size());
  for (const auto& rec : ds.records)
    docs.push_back(tokenize_sentences(vocab, rec.text));
  omm_update(omm, docs);
  const std::string out = st.omm_out.empty() ? cfg.omm_path : st.omm_out;
  omm_save(omm, out);
  std::printf("updated omm: +%zu docs, s=%llu version=%llu -> %s\n",
              ds.size(), static_cast<unsigned long long>(omm.s),
              static_cast<unsigned long long>(omm.version), out.c_str());
  return 0;
}

int cmd_omm_stats(const CliState& st) {
  if (st.cfg.omm_path.empty())
    throw usage_error(ErrorCode::BadConfig, "--state required");
  OmmState omm = omm_load(st.cfg.omm_path);
  std::uint64_t c_nonzero = 0, c_total = 0;
  for (auto x : omm.c) {
    c_nonzero += x > 0;
    c_total += x;
  }
  std::printf("u: %llu\n", static_cast<unsigned long long>(omm.u));
  std::printf("documents (s): %llu\n",
              static_cast<unsigned long long>(omm.s));
  std::printf("version: %llu\n", static_cast<unsigned long long>(omm.version));
  std::printf("tokens with nonzero c: %llu\n",
              static_cast<unsigned long long>(c_nonzero));
  std::printf("total sentence-presence mass: %llu\n",
              static_cast<unsigned long long>(c_total));
  std::printf("co-occurring pairs: %zu\n", omm.C.size());
  return 0;
}

int cmd_train(const CliState& st) {
  const auto& cfg = st.cfg;
  if (cfg.vocab_path.empty() || cfg.omm_path.empty() ||
      cfg.train_path.empty() || cfg.model_path.empty())
    throw usage_error(ErrorCode::BadConfig,
                      "--vocab, --omm, --train and --out required");
  Vocabulary vocab = load_vocabulary(cfg.vocab_path);
  OmmState omm = omm_load(cfg.omm_path);
  if (omm.u != vocab.size())
    throw data_error(ErrorCode::DimMismatch,
                     "snapshot vocabulary size does not match --vocab");
  DatasetFile train_ds = ingest_dataset(cfg.train_path);
  if (train_ds.label_names.empty())
    throw data_error(ErrorCode::InvalidLabel, "training data has no labels");
  std::printf("dataset: %zu docs, %zu classes, avg length %.1f words\n",
              train_ds.size(), train_ds.class_count(),
              train_ds.average_word_length());

  std::optional<ExternalEmbeddings> ext;
  EncoderRuntime rt = make_encoder_runtime(cfg, ext);

  std::vector<double> val_split{1.0 - cfg.train.val_fraction,
                                cfg.train.val_fraction};
  auto tv = split_dataset(train_ds, val_split,
                          detail::sub_seed(cfg.train.seed, 11));
  TokenizedDataset train_all =
      tokenize_dataset(vocab, train_ds, cfg.train.max_len);
  TokenizedDataset train = tokenize_dataset(vocab, tv[0], cfg.train.max_len);
  TokenizedDataset val = tokenize_dataset(vocab, tv[1], cfg.train.max_len);

  if (!st.no_omm_update) omm_update_with(omm, train_all);

  std::optional<TokenizedDataset> test;
  if (!cfg.test_path.empty()) {
    DatasetFile test_ds = ingest_dataset(cfg.test_path);
    remap_labels(test_ds, train_ds.label_names);
    test = tokenize_dataset(vocab, test_ds, cfg.train.max_len);
  }

  std::mt19937_64 rng(detail::sub_seed(cfg.train.seed, 12));
  ModelParams model = init_model(vocab.size(), cfg.train.d, cfg.train.h,
                                 train_ds.class_count(), rng);
  MetricsSink metrics;
  PpmiCache cache;
  stage1_post_pretrain(model, cfg.train, train, &metrics, 0, rt);
  stage2_train(model, cfg.train, train, val.size() ? &val : nullptr, omm,
               cache, &metrics, test ? &*test : nullptr, 0, rt);

  if (!cfg.dump_adjacency_path.empty()) {
    const std::size_t n =
        std::min<std::size_t>(cfg.train.batch_size, train.size());
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    DocumentBatch batch = detail::gather_batch(train, idx);
    auto graphs = build_batch_graphs(cache, omm, batch, cfg.train.h, false);
    dump_adjacency(graphs.bundle.composed, cfg.dump_adjacency_path);
  }

  save_checkpoint(cfg.model_path, model,
                  make_meta(cfg, vocab.size(), train_ds.label_names));
  if (!st.no_omm_update) {
    const std::string omm_out =
        st.omm_out.empty() ? cfg.omm_path : st.omm_out;
    omm_save(omm, omm_out);
  }
  if (!cfg.metrics_path.empty()) metrics.write_csv(cfg.metrics_path);

  const double train_acc = evaluate(model, cache, omm, train, cfg.train, rt);
  std::printf("final training accuracy: %.4f\n", train_acc);
  if (test) {
    const double test_acc = evaluate(model, cache, omm, *test, cfg.train, rt);
    std::printf("test accuracy: %.4f\n", test_acc);
  }
  std::printf("saved model -> %s\n", cfg.model_path.c_str());
  return 0;
}

int cmd_update(const CliState& st) {
  const auto& cfg = st.cfg;
  if (cfg.update_path.empty())
    throw usage_error(ErrorCode::BadConfig, "--data required");
  LoadedModel lm = load_model_state(cfg);
  lm.config.lambda = cfg.train.lambda;
  lm.config.update_epochs = cfg.train.update_epochs;
  lm.config.batch_size = cfg.train.batch_size;
  lm.config.seed = cfg.train.seed;
  lm.config.lr_encoder = cfg.train.lr_encoder;
  lm.config.lr_gcn = cfg.train.lr_gcn;

  DatasetFile ds = ingest_dataset(cfg.update_path);
  if (ds.labeled_count() > 0)
    std::fprintf(stderr,
                 "warning: update data carries labels; the label-free "
                 "update ignores them\n");
  if (ds.size() == 0) {
    std::fprintf(stderr, "warning: empty update set, nothing to do\n");
    return 0;
  }
  TokenizedDataset update = tokenize_dataset(lm.vocab, ds, lm.config.max_len);

  std::optional<ExternalEmbeddings> ext;
  EncoderRuntime rt = make_encoder_runtime(cfg, ext);

  MetricsSink metrics;
  PpmiCache cache;
  stage3_label_free_update(lm.ckpt.model, lm.config, update, lm.omm, cache,
                           &metrics, 0, rt);

  const std::string model_out =
      st.model_out.empty() ? cfg.model_path : st.model_out;
  const std::string omm_out = st.omm_out.empty() ? cfg.omm_path : st.omm_out;
  lm.ckpt.meta.stage = stage_name(Stage::LabelFreeUpdate);
  save_checkpoint(model_out, lm.ckpt.model, lm.ckpt.meta);
  omm_save(lm.omm, omm_out);
  if (!cfg.metrics_path.empty()) metrics.write_csv(cfg.metrics_path);
  std::printf("label-free update done: %zu docs, omm s=%llu -> %s\n",
              ds.size(), static_cast<unsigned long long>(lm.omm.s),
              model_out.c_str());
  return 0;
}

int cmd_eval(const CliState& st) {
  const auto& cfg = st.cfg;
  if (cfg.test_path.empty())
    throw usage_error(ErrorCode::BadConfig, "--data required");
  LoadedModel lm = load_model_state(cfg);
  DatasetFile ds = ingest_dataset(cfg.test_path);
  remap_labels(ds, lm.ckpt.meta.label_names);
  TokenizedDataset data = tokenize_dataset(lm.vocab, ds, lm.config.max_len);
  std::optional<ExternalEmbeddings> ext;
  EncoderRuntime rt = make_encoder_runtime(cfg, ext);
  PpmiCache cache;
  const double acc =
      evaluate(lm.ckpt.model, cache, lm.omm, data, lm.config, rt);
  std::printf("accuracy: %.6f\n", acc);
  return 0;
}

int cmd_classify(const CliState& st) {
  const auto& cfg = st.cfg;
  LoadedModel lm = load_model_state(cfg);
  std::optional<ExternalEmbeddings> ext;
  EncoderRuntime rt = make_encoder_runtime(cfg, ext);
  PpmiCache cache;
  PipelineOpts opts{lm.config.lambda, lm.config.khop_project, 0.0};

  std::istream* in = &std::cin;
  std::ifstream file;
  if (!st.classify_input.empty()) {
    file.open(st.classify_input);
    if (!file)
      throw data_error(ErrorCode::Io,
                       "cannot open input: " + st.classify_input);
    in = &file;
  }
  std::string line;
  std::size_t idx = 0;
  while (std::getline(*in, line)) {
    TokenizedDocument doc = tokenize(lm.vocab, line, lm.config.max_len);
    if (doc.token_ids.empty()) {
      std::fprintf(stderr, "warning: line %zu has no tokens, skipped\n", idx);
      ++idx;
      continue;
    }
    DocumentBatch batch =
        assemble_batch({std::move(doc)}, {std::to_string(idx)});
    Matrix probs =
        predict_probs(lm.ckpt.model, rt, cache, lm.omm, batch, opts);
    std::size_t argmax = 0;
    for (std::size_t c = 1; c < probs.cols(); ++c)
      if (probs(0, c) > probs(0, argmax)) argmax = c;
    std::printf("%zu\t%zu\t%s", idx, argmax,
                lm.ckpt.meta.label_names[argmax].c_str());
    for (std::size_t c = 0; c < probs.cols(); ++c)
      std::printf("%c%.6f", c == 0 ? '\t' : ' ', probs(0, c));
    std::printf("\n");
    ++idx;
  }
  return 0;
}

int cmd_online(const CliState& st) {
  const auto& cfg = st.cfg;
  if (cfg.vocab_path.empty() || cfg.omm_path.empty() ||
      cfg.train_path.empty())
    throw usage_error(ErrorCode::BadConfig,
                      "--vocab, --omm and --data required");
  Vocabulary vocab = load_vocabulary(cfg.vocab_path);
  OmmState omm = omm_load(cfg.omm_path);
  if (omm.u != vocab.size())
    throw data_error(ErrorCode::DimMismatch,
                     "snapshot vocabulary size does not match --vocab");
  DatasetFile ds = ingest_dataset(cfg.train_path);
  OnlineSpec spec;
  spec.ratios = parse_ratios(cfg.ratios);
  spec.sessions = cfg.sessions;
  spec.labeled_sessions = st.labeled_sessions;

  std::mt19937_64 rng(detail::sub_seed(cfg.train.seed, 12));
  ModelParams model = init_model(vocab.size(), cfg.train.d, cfg.train.h,
                                 ds.class_count(), rng);
  MetricsSink metrics;
  auto rows = run_online_sessions(cfg.train, spec, vocab, ds, std::move(omm),
                                  model, &metrics);
  std::printf("session,accuracy,seconds\n");
  for (const auto& r : rows)
    std::printf("%d,%.6f,%.3f\n", r.session, r.accuracy, r.seconds);
  if (!cfg.metrics_path.empty()) metrics.write_csv(cfg.metrics_path);
  if (!cfg.model_path.empty())
    save_checkpoint(cfg.model_path, model,
                    make_meta(cfg, vocab.size(), ds.label_names));
  return 0;
}

int cmd_sweep_lambda(const CliState& st) {
  const auto& cfg = st.cfg;
  if (cfg.vocab_path.empty() || cfg.omm_path.empty() ||
      cfg.train_path.empty() || cfg.test_path.empty())
    throw usage_error(ErrorCode::BadConfig,
                      "--vocab, --omm, --train and --test required");
  Vocabulary vocab = load_vocabulary(cfg.vocab_path);
  OmmState omm = omm_load(cfg.omm_path);
  if (omm.u != vocab.size())
    throw data_error(ErrorCode::DimMismatch,
                     "snapshot vocabulary size does not match --vocab");
  DatasetFile train_ds = ingest_dataset(cfg.train_path);
  DatasetFile test_ds = ingest_dataset(cfg.test_path);
  auto rows = sweep_lambda(cfg.train, st.lambdas, vocab, train_ds, test_ds,
                           omm, nullptr);
  std::printf("lambda,accuracy_pct,relative_pct\n");
  for (const auto& r : rows)
    std::printf("%g,%.4f,%.4f\n", r.lambda, r.accuracy_pct, r.relative_pct);
  return 0;
}

// --config is applied before flag parsing so explicit flags win.
std::string prescan_config_path(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") return argv[i + 1];
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CliState st;
  const std::string config_path = prescan_config_path(argc, argv);
  try {
    if (!config_path.empty()) st.cfg = load_run_config(config_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.kind());
  }

  CLI::App app{"continual graph-convolutional text classifier"};
  app.require_subcommand(1);
  std::string config_dummy;
  app.add_option("--config", config_dummy, "JSON config file");
  app.add_option("--save-config", st.save_config_path,
                 "write the effective config to a JSON file");

  auto* omm_cmd = app.add_subcommand("omm", "occurrence memory operations");
  omm_cmd->require_subcommand(1);
  auto* omm_init = omm_cmd->add_subcommand("init", "build from a corpus");
  omm_init->add_option("--vocab", st.cfg.vocab_path, "vocabulary file");
  omm_init->add_option("--corpus", st.cfg.corpus_path,
                       "plain-text corpus, one document per line");
  omm_init->add_option("--out", st.omm_out, "snapshot output path");
  auto* omm_update_cmd =
      omm_cmd->add_subcommand("update", "fold a dataset into a snapshot");
  omm_update_cmd->add_option("--vocab", st.cfg.vocab_path, "vocabulary file");
  omm_update_cmd->add_option("--state", st.cfg.omm_path, "snapshot path");
  omm_update_cmd->add_option("--data", st.cfg.update_path, "dataset TSV");
  omm_update_cmd->add_option("--out", st.omm_out,
                             "output path (default: in place)");
  auto* omm_stats =
      omm_cmd->add_subcommand("stats", "print snapshot statistics");
  omm_stats->add_option("--state", st.cfg.omm_path, "snapshot path");

  auto* train = app.add_subcommand("train", "stages 1-2: post-pretrain and "
                                            "multi-task training");
  train->add_option("--vocab", st.cfg.vocab_path, "vocabulary file");
  train->add_option("--omm", st.cfg.omm_path, "occurrence memory snapshot");
  train->add_option("--train", st.cfg.train_path, "training TSV");
  train->add_option("--test", st.cfg.test_path, "optional test TSV");
  train->add_option("--out", st.cfg.model_path, "checkpoint output");
  train->add_option("--omm-out", st.omm_out,
                    "updated snapshot output (default: in place)");
  train->add_option("--metrics", st.cfg.metrics_path, "metrics CSV output");
  train->add_option("--dump-adjacency", st.cfg.dump_adjacency_path,
                    "write the first batch adjacency as 'row col weight'");
  train->add_flag("--no-omm-update", st.no_omm_update,
                  "skip folding the training data into the memory");
  add_train_flags(train, st.cfg);

  auto* update = app.add_subcommand(
      "update", "stage 3: label-free update on unlabeled data");
  update->add_option("--vocab", st.cfg.vocab_path, "vocabulary file");
  update->add_option("--omm", st.cfg.omm_path, "occurrence memory snapshot");
  update->add_option("--model", st.cfg.model_path, "checkpoint to update");
  update->add_option("--data", st.cfg.update_path, "unlabeled dataset TSV");
  update->add_option("--out", st.model_out,
                     "checkpoint output (default: in place)");
  update->add_option("--omm-out", st.omm_out,
                     "snapshot output (default: in place)");
  update->add_option("--metrics", st.cfg.metrics_path, "metrics CSV output");
  add_train_flags(update, st.cfg);

  auto* eval = app.add_subcommand("eval", "accuracy on a labeled dataset");
  eval->add_option("--vocab", st.cfg.vocab_path, "vocabulary file");
  eval->add_option("--omm", st.cfg.omm_path, "occurrence memory snapshot");
  eval->add_option("--model", st.cfg.model_path, "checkpoint");
  eval->add_option("--data", st.cfg.test_path, "labeled dataset TSV");
  eval->add_option("--encoder", st.cfg.encoder_mode,
                   "document encoder: tiny | external:<path>");
  eval->add_option("--batch", st.cfg.train.batch_size, "batch size");

  auto* classify =
      app.add_subcommand("classify", "classify raw text lines");
  classify->add_option("--vocab", st.cfg.vocab_path, "vocabulary file");
  classify->add_option("--omm", st.cfg.omm_path, "occurrence memory snapshot");
  classify->add_option("--model", st.cfg.model_path, "checkpoint");
  classify->add_option("--input", st.classify_input,
                       "input file (default: stdin)");
  classify->add_option("--encoder", st.cfg.encoder_mode,
                       "document encoder: tiny | external:<path>");

  auto* online = app.add_subcommand(
      "online", "split one dataset and run incremental update sessions");
  online->add_option("--vocab", st.cfg.vocab_path, "vocabulary file");
  online->add_option("--omm", st.cfg.omm_path, "occurrence memory snapshot");
  online->add_option("--data", st.cfg.train_path, "full dataset TSV");
  online->add_option("--ratios", st.cfg.ratios, "train:test:update ratios");
  online->add_option("--sessions", st.cfg.sessions, "update session count");
  online->add_flag("--labeled-sessions", st.labeled_sessions,
                   "update with labels (stage 2) instead of label-free");
  online->add_option("--metrics", st.cfg.metrics_path, "metrics CSV output");
  online->add_option("--out", st.cfg.model_path,
                     "optional final checkpoint output");
  add_train_flags(online, st.cfg);

  auto* sweep = app.add_subcommand(
      "sweep-lambda", "repeat training over a lambda grid");
  sweep->add_option("--vocab", st.cfg.vocab_path, "vocabulary file");
  sweep->add_option("--omm", st.cfg.omm_path, "occurrence memory snapshot");
  sweep->add_option("--train", st.cfg.train_path, "training TSV");
  sweep->add_option("--test", st.cfg.test_path, "test TSV");
  sweep->add_option("--lambdas", st.lambdas, "lambda grid");
  add_train_flags(sweep, st.cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (!st.save_config_path.empty()) save_run_config(st.cfg,
                                                      st.save_config_path);
    if (omm_init->parsed()) return cmd_omm_init(st);
    if (omm_update_cmd->parsed()) return cmd_omm_update(st);
    if (omm_stats->parsed()) return cmd_omm_stats(st);
    if (train->parsed()) return cmd_train(st);
    if (update->parsed()) return cmd_update(st);
    if (eval->parsed()) return cmd_eval(st);
    if (classify->parsed()) return cmd_classify(st);
    if (online->parsed()) return cmd_online(st);
    if (sweep->parsed()) return cmd_sweep_lambda(st);
    throw usage_error(ErrorCode::BadConfig, "no subcommand given");
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
