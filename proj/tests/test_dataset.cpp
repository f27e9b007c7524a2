#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "contgcn/config.hpp"
#include "contgcn/dataset.hpp"
#include "support/synthetic.hpp"

using namespace contgcn;

namespace {

synthetic::TempDir& tmp() {
  static synthetic::TempDir dir("dataset");
  return dir;
}

std::string write_file(const std::string& name, const std::string& body) {
  const std::string path = tmp().file(name);
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("ingest assigns class ids by first appearance") {
  const auto path = write_file("a.tsv",
                               "d1\tspam\thello world\n"
                               "d2\tham\tnice to meet you\n"
                               "d3\tspam\tbuy now\n");
  DatasetFile ds = ingest_dataset(path);
  REQUIRE(ds.size() == 3);
  REQUIRE(ds.class_count() == 2);
  REQUIRE(ds.label_names == std::vector<std::string>{"spam", "ham"});
  REQUIRE(ds.records[0].label.value() == 0);
  REQUIRE(ds.records[1].label.value() == 1);
  REQUIRE(ds.records[2].label.value() == 0);
}

TEST_CASE("dash labels are unlabeled records") {
  const auto path = write_file("b.tsv", "d1\t-\tno label here\n");
  DatasetFile ds = ingest_dataset(path);
  REQUIRE_FALSE(ds.records[0].label.has_value());
  REQUIRE(ds.class_count() == 0);
  REQUIRE(ds.labeled_count() == 0);
}

TEST_CASE("malformed rows and duplicate ids are rejected") {
  const auto two_cols = write_file("c.tsv", "d1\tonly-two-columns\n");
  try {
    ingest_dataset(two_cols);
    FAIL("expected MalformedRow");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::MalformedRow);
  }

  const auto four_cols = write_file("d.tsv", "d1\tx\ttext\textra\n");
  try {
    ingest_dataset(four_cols);
    FAIL("expected MalformedRow");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::MalformedRow);
  }

  const auto dup = write_file("e.tsv", "d1\tx\ta\nd1\ty\tb\n");
  try {
    ingest_dataset(dup);
    FAIL("expected DuplicateId");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::DuplicateId);
  }
}

TEST_CASE("movie-review-sized export reports its statistics") {
  const std::string path = tmp().file("mr.tsv");
  {
    std::ofstream out(path);
    for (int i = 0; i < 10662; ++i)
      out << "mr" << i << '\t' << (i % 2 ? "pos" : "neg")
          << "\ta short review text\n";
  }
  DatasetFile ds = ingest_dataset(path);
  REQUIRE(ds.size() == 10662);
  REQUIRE(ds.class_count() == 2);
  REQUIRE_THAT(ds.average_word_length(),
               Catch::Matchers::WithinAbs(4.0, 1e-9));
}

TEST_CASE("ratio parsing accepts weights and checked fractions") {
  auto r = parse_ratios("2:2:6");
  REQUIRE(r.size() == 3);
  REQUIRE_THAT(r[0], Catch::Matchers::WithinAbs(0.2, 1e-12));
  REQUIRE_THAT(r[2], Catch::Matchers::WithinAbs(0.6, 1e-12));

  auto f = parse_ratios("0.25:0.25:0.5");
  REQUIRE_THAT(f[2], Catch::Matchers::WithinAbs(0.5, 1e-12));

  try {
    parse_ratios("0.2:0.2:0.2");  // fractions must sum to 1
    FAIL("expected BadRatio");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::BadRatio);
  }
  REQUIRE_THROWS_AS(parse_ratios("1:x"), Error);
  REQUIRE_THROWS_AS(parse_ratios("5"), Error);
}

TEST_CASE("splits partition the dataset deterministically") {
  synthetic::Spec spec;
  spec.docs = 100;
  spec.vocab = 30;
  DatasetFile ds = synthetic::make_dataset(spec);
  auto parts = split_dataset(ds, parse_ratios("2:2:6"), 99);
  REQUIRE(parts.size() == 3);
  REQUIRE(parts[0].size() == 20);
  REQUIRE(parts[1].size() == 20);
  REQUIRE(parts[2].size() == 60);

  auto again = split_dataset(ds, parse_ratios("2:2:6"), 99);
  for (int k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < parts[k].size(); ++i)
      REQUIRE(parts[k].records[i].id == again[k].records[i].id);

  std::set<std::string> ids;
  for (const auto& p : parts)
    for (const auto& r : p.records) ids.insert(r.id);
  REQUIRE(ids.size() == ds.size());

  auto equal = split_equal_parts(parts[2], 6);
  std::size_t total = 0;
  for (const auto& p : equal) {
    REQUIRE(p.size() == 10);
    total += p.size();
  }
  REQUIRE(total == 60);
}

TEST_CASE("label remapping aligns ids across files") {
  const auto a = write_file("r1.tsv", "x1\tb\tsome\nx2\ta\ttext\n");
  DatasetFile ds = ingest_dataset(a);  // b -> 0, a -> 1
  remap_labels(ds, {"a", "b"});
  REQUIRE(ds.records[0].label.value() == 1);
  REQUIRE(ds.records[1].label.value() == 0);

  DatasetFile bad = ingest_dataset(write_file("r2.tsv", "y\tz\ttext\n"));
  try {
    remap_labels(bad, {"a", "b"});
    FAIL("expected InvalidLabel");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::InvalidLabel);
  }
}

TEST_CASE("run config round-trips through json losslessly") {
  RunConfig cfg;
  cfg.vocab_path = "v.txt";
  cfg.corpus_path = "c.txt";
  cfg.omm_path = "m.omm";
  cfg.train_path = "tr.tsv";
  cfg.test_path = "te.tsv";
  cfg.update_path = "up.tsv";
  cfg.model_path = "m.ckpt";
  cfg.metrics_path = "metrics.csv";
  cfg.encoder_mode = "external:emb.bin";
  cfg.ratios = "1:1:8";
  cfg.sessions = 4;
  cfg.train.lambda = 0.125;
  cfg.train.lr_encoder = 3e-4;
  cfg.train.lr_gcn = 1e-3;
  cfg.train.epochs = 17;
  cfg.train.batch_size = 9;
  cfg.train.seed = 424242;
  cfg.train.stage = Stage::LabelFreeUpdate;
  cfg.train.d = 24;
  cfg.train.h = 2;
  cfg.train.max_len = 96;
  cfg.train.val_fraction = 0.2;
  cfg.train.patience = 3;
  cfg.train.stage1_epochs = 4;
  cfg.train.update_epochs = 6;
  cfg.train.khop_project = true;

  const std::string path = tmp().file("cfg.json");
  save_run_config(cfg, path);
  RunConfig loaded = load_run_config(path);
  REQUIRE(loaded == cfg);
}

TEST_CASE("dataset writer round-trips records") {
  synthetic::Spec spec;
  spec.docs = 12;
  spec.vocab = 10;
  DatasetFile ds = synthetic::make_dataset(spec);
  const std::string path = tmp().file("rt.tsv");
  write_dataset(ds, path);
  DatasetFile loaded = ingest_dataset(path);
  REQUIRE(loaded.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    REQUIRE(loaded.records[i].id == ds.records[i].id);
    REQUIRE(loaded.records[i].text == ds.records[i].text);
    REQUIRE(loaded.label_names[static_cast<std::size_t>(
                *loaded.records[i].label)] ==
            ds.label_names[static_cast<std::size_t>(*ds.records[i].label)]);
  }
}
