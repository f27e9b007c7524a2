#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "contgcn/errors.hpp"
#include "contgcn/vocab.hpp"

namespace contgcn {

struct DatasetRecord {
  std::string id;
  std::optional<std::int32_t> label;
  std::string text;
};

// A labeled-or-not document collection. Class ids are assigned by first
// appearance order of the label strings; "-" marks an unlabeled record.
struct DatasetFile {
  std::vector<DatasetRecord> records;
  std::vector<std::string> label_names;

  std::size_t size() const { return records.size(); }
  std::size_t class_count() const { return label_names.size(); }

  std::size_t labeled_count() const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.label.has_value();
    return n;
  }

  double average_word_length() const {
    if (records.empty()) return 0.0;
    std::size_t words = 0;
    for (const auto& r : records) words += detail::split_words(r.text).size();
    return static_cast<double>(words) / static_cast<double>(records.size());
  }
};

// UTF-8 TSV with exactly three columns: id, label ("-" when absent), text.
inline DatasetFile ingest_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error(ErrorCode::Io, "cannot open dataset: " + path);
  DatasetFile ds;
  std::unordered_map<std::string, std::int32_t> label_ids;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab1 = line.find('\t');
    const std::size_t tab2 =
        tab1 == std::string::npos ? std::string::npos
                                  : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos ||
        line.find('\t', tab2 + 1) != std::string::npos)
      throw data_error(ErrorCode::MalformedRow,
                       "line " + std::to_string(lineno) +
                           ": expected 3 tab-separated columns");
    DatasetRecord rec;
    rec.id = line.substr(0, tab1);
    const std::string label = line.substr(tab1 + 1, tab2 - tab1 - 1);
    rec.text = line.substr(tab2 + 1);
    if (!ids.insert(rec.id).second)
      throw data_error(ErrorCode::DuplicateId,
                       "duplicate document id '" + rec.id + "'");
    if (label != "-") {
      auto it = label_ids.find(label);
      if (it == label_ids.end()) {
        it = label_ids
                 .emplace(label,
                          static_cast<std::int32_t>(ds.label_names.size()))
                 .first;
        ds.label_names.push_back(label);
      }
      rec.label = it->second;
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

inline void write_dataset(const DatasetFile& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error(ErrorCode::Io, "cannot open for write: " + path);
  for (const auto& r : ds.records) {
    const std::string label =
        r.label ? ds.label_names[static_cast<std::size_t>(*r.label)] : "-";
    out << r.id << '\t' << label << '\t' << r.text << '\n';
  }
}

// Rewrite label ids against a target label-name list (e.g. the one a model
// was trained with). Unseen label names are an error.
inline void remap_labels(DatasetFile& ds,
                         const std::vector<std::string>& target_names) {
  std::unordered_map<std::string, std::int32_t> target;
  for (std::size_t i = 0; i < target_names.size(); ++i)
    target.emplace(target_names[i], static_cast<std::int32_t>(i));
  for (auto& rec : ds.records) {
    if (!rec.label) continue;
    const std::string& name =
        ds.label_names[static_cast<std::size_t>(*rec.label)];
    auto it = target.find(name);
    if (it == target.end())
      throw data_error(ErrorCode::InvalidLabel,
                       "label '" + name + "' unknown to the model");
    rec.label = it->second;
  }
  ds.label_names = target_names;
}

// Weighted ratio spec like "2:2:6" or "0.2:0.2:0.6". Fractional specs must
// sum to 1; integer specs are treated as weights.
inline std::vector<double> parse_ratios(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  bool fractional = false;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size() || v < 0.0) throw std::invalid_argument(item);
      if (item.find('.') != std::string::npos) fractional = true;
      parts.push_back(v);
    } catch (const std::exception&) {
      throw data_error(ErrorCode::BadRatio, "bad ratio component '" + item +
                                                "' in '" + spec + "'");
    }
  }
  if (parts.size() < 2)
    throw data_error(ErrorCode::BadRatio, "need at least 2 ratio parts");
  const double sum = std::accumulate(parts.begin(), parts.end(), 0.0);
  if (sum <= 0.0)
    throw data_error(ErrorCode::BadRatio, "ratios sum to zero");
  if (fractional && std::abs(sum - 1.0) > 1e-6)
    throw data_error(ErrorCode::BadRatio,
                     "fractional ratios must sum to 1, got " +
                         std::to_string(sum));
  for (double& p : parts) p /= sum;
  return parts;
}

// Seeded shuffle split into |ratios| parts; sizes are rounded down with the
// remainder going to the last part.
inline std::vector<DatasetFile> split_dataset(const DatasetFile& ds,
                                              const std::vector<double>& ratios,
                                              std::uint64_t seed) {
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<DatasetFile> parts(ratios.size());
  for (auto& p : parts) p.label_names = ds.label_names;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    std::size_t count =
        k + 1 == ratios.size()
            ? ds.size() - offset
            : static_cast<std::size_t>(ratios[k] *
                                       static_cast<double>(ds.size()));
    count = std::min(count, ds.size() - offset);
    for (std::size_t i = 0; i < count; ++i)
      parts[k].records.push_back(ds.records[order[offset + i]]);
    offset += count;
  }
  return parts;
}

// Split into `n` near-equal chunks preserving record order.
inline std::vector<DatasetFile> split_equal_parts(const DatasetFile& ds,
                                                  std::size_t n) {
  std::vector<DatasetFile> parts(n);
  for (auto& p : parts) p.label_names = ds.label_names;
  if (n == 0 || ds.size() == 0) return parts;
  for (std::size_t i = 0; i < ds.size(); ++i)
    parts[i * n / ds.size()].records.push_back(ds.records[i]);
  return parts;
}

}  // namespace contgcn
