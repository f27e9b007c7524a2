#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "contgcn/errors.hpp"
#include "contgcn/train.hpp"

namespace contgcn {

// Operational configuration shared by the CLI subcommands. Round-trips
// losslessly through JSON.
struct RunConfig {
  std::string vocab_path;
  std::string corpus_path;
  std::string omm_path;
  std::string train_path;
  std::string test_path;
  std::string update_path;
  std::string model_path;
  std::string metrics_path;
  std::string dump_adjacency_path;
  std::string encoder_mode = "tiny";  // "tiny" or "external:<path>"
  std::string ratios = "2:2:6";
  std::uint32_t sessions = 6;
  TrainConfig train;

  bool operator==(const RunConfig& o) const {
    return vocab_path == o.vocab_path && corpus_path == o.corpus_path &&
           omm_path == o.omm_path && train_path == o.train_path &&
           test_path == o.test_path && update_path == o.update_path &&
           model_path == o.model_path && metrics_path == o.metrics_path &&
           dump_adjacency_path == o.dump_adjacency_path &&
           encoder_mode == o.encoder_mode && ratios == o.ratios &&
           sessions == o.sessions && train.lambda == o.train.lambda &&
           train.lr_encoder == o.train.lr_encoder &&
           train.lr_gcn == o.train.lr_gcn && train.epochs == o.train.epochs &&
           train.batch_size == o.train.batch_size &&
           train.seed == o.train.seed && train.stage == o.train.stage &&
           train.d == o.train.d && train.h == o.train.h &&
           train.max_len == o.train.max_len &&
           train.val_fraction == o.train.val_fraction &&
           train.patience == o.train.patience &&
           train.stage1_epochs == o.train.stage1_epochs &&
           train.update_epochs == o.train.update_epochs &&
           train.dropout == o.train.dropout &&
           train.khop_project == o.train.khop_project;
  }
};

inline Stage stage_from_name(const std::string& name) {
  if (name == "post_pretrain") return Stage::PostPretrain;
  if (name == "train") return Stage::Train;
  if (name == "label_free_update") return Stage::LabelFreeUpdate;
  throw data_error(ErrorCode::BadConfig, "unknown stage '" + name + "'");
}

inline nlohmann::json to_json(const RunConfig& cfg) {
  return nlohmann::json{
      {"vocab", cfg.vocab_path},
      {"corpus", cfg.corpus_path},
      {"omm", cfg.omm_path},
      {"train_data", cfg.train_path},
      {"test_data", cfg.test_path},
      {"update_data", cfg.update_path},
      {"model", cfg.model_path},
      {"metrics", cfg.metrics_path},
      {"dump_adjacency", cfg.dump_adjacency_path},
      {"encoder", cfg.encoder_mode},
      {"ratios", cfg.ratios},
      {"sessions", cfg.sessions},
      {"training",
       {{"lambda", cfg.train.lambda},
        {"lr_encoder", cfg.train.lr_encoder},
        {"lr_gcn", cfg.train.lr_gcn},
        {"epochs", cfg.train.epochs},
        {"batch_size", cfg.train.batch_size},
        {"seed", cfg.train.seed},
        {"stage", stage_name(cfg.train.stage)},
        {"d", cfg.train.d},
        {"h", cfg.train.h},
        {"max_len", cfg.train.max_len},
        {"val_fraction", cfg.train.val_fraction},
        {"patience", cfg.train.patience},
        {"stage1_epochs", cfg.train.stage1_epochs},
        {"update_epochs", cfg.train.update_epochs},
        {"dropout", cfg.train.dropout},
        {"khop_project", cfg.train.khop_project}}}};
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    cfg.vocab_path = j.value("vocab", "");
    cfg.corpus_path = j.value("corpus", "");
    cfg.omm_path = j.value("omm", "");
    cfg.train_path = j.value("train_data", "");
    cfg.test_path = j.value("test_data", "");
    cfg.update_path = j.value("update_data", "");
    cfg.model_path = j.value("model", "");
    cfg.metrics_path = j.value("metrics", "");
    cfg.dump_adjacency_path = j.value("dump_adjacency", "");
    cfg.encoder_mode = j.value("encoder", "tiny");
    cfg.ratios = j.value("ratios", "2:2:6");
    cfg.sessions = j.value("sessions", 6u);
    if (j.contains("training")) {
      const auto& t = j.at("training");
      cfg.train.lambda = t.value("lambda", cfg.train.lambda);
      cfg.train.lr_encoder = t.value("lr_encoder", cfg.train.lr_encoder);
      cfg.train.lr_gcn = t.value("lr_gcn", cfg.train.lr_gcn);
      cfg.train.epochs = t.value("epochs", cfg.train.epochs);
      cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
      cfg.train.seed = t.value("seed", cfg.train.seed);
      cfg.train.stage =
          stage_from_name(t.value("stage", stage_name(cfg.train.stage)));
      cfg.train.d = t.value("d", cfg.train.d);
      cfg.train.h = t.value("h", cfg.train.h);
      cfg.train.max_len = t.value("max_len", cfg.train.max_len);
      cfg.train.val_fraction = t.value("val_fraction", cfg.train.val_fraction);
      cfg.train.patience = t.value("patience", cfg.train.patience);
      cfg.train.stage1_epochs =
          t.value("stage1_epochs", cfg.train.stage1_epochs);
      cfg.train.update_epochs =
          t.value("update_epochs", cfg.train.update_epochs);
      cfg.train.dropout = t.value("dropout", cfg.train.dropout);
      cfg.train.khop_project = t.value("khop_project", cfg.train.khop_project);
    }
  } catch (const nlohmann::json::exception& e) {
    throw data_error(ErrorCode::BadConfig,
                     std::string("bad config: ") + e.what());
  }
  return cfg;
}

inline void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error(ErrorCode::Io, "cannot open: " + path);
  out << to_json(cfg).dump(2) << '\n';
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error(ErrorCode::Io, "cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error(ErrorCode::BadConfig,
                     std::string("bad config json: ") + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace contgcn
