#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "contgcn/errors.hpp"
#include "contgcn/io.hpp"
#include "contgcn/vocab.hpp"

namespace contgcn {

// Symmetric pair counts stored once per unordered pair (i < j). The diagonal
// is never stored.
class PairCounts {
 public:
  static std::uint64_t key(std::uint32_t i, std::uint32_t j) {
    if (i > j) std::swap(i, j);
    return (static_cast<std::uint64_t>(i) << 32) | j;
  }

  void inc(std::uint32_t i, std::uint32_t j, std::uint64_t by = 1) {
    counts_[key(i, j)] += by;
  }

  std::uint64_t at(std::uint32_t i, std::uint32_t j) const {
    auto it = counts_.find(key(i, j));
    return it == counts_.end() ? 0 : it->second;
  }

  std::size_t size() const { return counts_.size(); }

  struct Triple {
    std::uint32_t i, j;
    std::uint64_t count;
  };

  // Sorted (i, j, count) with i < j; the deterministic iteration order for
  // PPMI construction and snapshots.
  std::vector<Triple> sorted_triples() const {
    std::vector<Triple> out;
    out.reserve(counts_.size());
    for (const auto& [k, v] : counts_)
      out.push_back({static_cast<std::uint32_t>(k >> 32),
                     static_cast<std::uint32_t>(k & 0xffffffffu), v});
    std::sort(out.begin(), out.end(), [](const Triple& a, const Triple& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    return out;
  }

  bool operator==(const PairCounts& o) const { return counts_ == o.counts_; }

 private:
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
};

// The corpus memory: document counter s, per-token sentence-presence counts
// c, and per-sentence co-occurrence counts C. Counters only ever grow; every
// mutation bumps `version` so downstream caches can pin a snapshot.
struct OmmState {
  std::uint64_t u = 0;
  std::uint64_t s = 0;
  std::vector<std::uint64_t> c;
  PairCounts C;
  std::uint64_t version = 0;

  explicit OmmState(std::uint64_t vocab_size = 0)
      : u(vocab_size), c(vocab_size, 0) {}

  bool operator==(const OmmState& o) const {
    return u == o.u && s == o.s && c == o.c && C == o.C &&
           version == o.version;
  }
};

namespace detail {

// Counting core shared by omm_update and the streaming corpus merge.
// Each sentence contributes once per distinct token type and once per
// unordered pair of distinct co-present types.
inline void count_document(OmmState& state, const SentenceTokens& sentences) {
  std::vector<std::uint32_t> types;
  for (const auto& sent : sentences) {
    types.clear();
    for (TokenId t : sent) {
      if (t < 0 || static_cast<std::uint64_t>(t) >= state.u)
        throw data_error(ErrorCode::TokenOutOfRange,
                         "token id " + std::to_string(t) +
                             " out of range for u=" + std::to_string(state.u));
      types.push_back(static_cast<std::uint32_t>(t));
    }
    std::sort(types.begin(), types.end());
    types.erase(std::unique(types.begin(), types.end()), types.end());
    for (std::uint32_t t : types) state.c[t] += 1;
    for (std::size_t a = 0; a < types.size(); ++a)
      for (std::size_t b = a + 1; b < types.size(); ++b)
        state.C.inc(types[a], types[b]);
  }
}

}  // namespace detail

// Continual update over a list of documents with sentence structure.
inline void omm_update(OmmState& state,
                       std::span<const SentenceTokens> docs) {
  state.s += docs.size();
  for (const auto& doc : docs) detail::count_document(state, doc);
  state.version += 1;
}

// Streaming equivalent of tokenizing every line of a plain-text corpus (one
// document per line) and folding a single omm_update over all of them.
inline void omm_merge_from_corpus(OmmState& state, const Vocabulary& vocab,
                                  const std::string& corpus_path) {
  std::ifstream in(corpus_path);
  if (!in)
    throw data_error(ErrorCode::Io, "cannot open corpus: " + corpus_path);
  std::string line;
  std::uint64_t ndocs = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    detail::count_document(state, tokenize_sentences(vocab, line));
    ++ndocs;
  }
  state.s += ndocs;
  state.version += 1;
}

namespace detail {
inline constexpr char kOmmMagic[8] = {'C', 'G', 'C', 'N', 'O', 'M', 'M', '1'};
inline constexpr std::uint32_t kOmmFormatVersion = 1;
}  // namespace detail

inline void omm_save(const OmmState& state, const std::string& path) {
  ByteWriter w;
  w.put_bytes(detail::kOmmMagic, 8);
  w.put_u32(detail::kOmmFormatVersion);
  w.put_u64(state.u);
  w.put_u64(state.s);
  w.put_u64(state.version);
  for (std::uint64_t x : state.c) w.put_u64(x);
  const auto triples = state.C.sorted_triples();
  w.put_u64(triples.size());
  for (const auto& t : triples) {
    w.put_u32(t.i);
    w.put_u32(t.j);
    w.put_u64(t.count);
  }
  w.finalize();
  w.write_atomic(path);
}

inline OmmState omm_load(const std::string& path) {
  ByteReader r = ByteReader::from_file(path);
  r.verify_checksum();
  char magic[8];
  r.get_bytes(magic, 8);
  if (std::memcmp(magic, detail::kOmmMagic, 8) != 0)
    throw data_error(ErrorCode::BadFormat, "not an OMM snapshot: " + path);
  if (r.get_u32() != detail::kOmmFormatVersion)
    throw data_error(ErrorCode::BadFormat, "unsupported OMM format version");
  OmmState state(r.get_u64());
  state.s = r.get_u64();
  state.version = r.get_u64();
  for (auto& x : state.c) x = r.get_u64();
  const std::uint64_t npairs = r.get_u64();
  for (std::uint64_t k = 0; k < npairs; ++k) {
    const std::uint32_t i = r.get_u32();
    const std::uint32_t j = r.get_u32();
    const std::uint64_t cnt = r.get_u64();
    if (i >= state.u || j >= state.u || i >= j)
      throw data_error(ErrorCode::BadFormat, "bad pair entry in snapshot");
    state.C.inc(i, j, cnt);
  }
  if (!r.at_payload_end())
    throw data_error(ErrorCode::BadFormat, "trailing bytes in OMM snapshot");
  return state;
}

}  // namespace contgcn
