#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "contgcn/errors.hpp"

namespace contgcn {

using TokenId = std::int32_t;

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kUnkToken = "<unk>";

struct TokenizedDocument {
  std::vector<TokenId> token_ids;
  std::string raw_text;
  std::optional<std::int32_t> label;
};

// The global token set. Ids are dense line indices of the vocabulary file;
// immutable after load and safe to share across threads.
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> tokens, TokenId pad, TokenId unk)
      : tokens_(std::move(tokens)), pad_id_(pad), unk_id_(unk) {
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      index_.emplace(tokens_[i], static_cast<TokenId>(i));
      max_token_len_ = std::max(max_token_len_, tokens_[i].size());
    }
  }

  std::size_t size() const { return tokens_.size(); }
  TokenId pad_id() const { return pad_id_; }
  TokenId unk_id() const { return unk_id_; }

  const std::string& token(TokenId id) const {
    return tokens_.at(static_cast<std::size_t>(id));
  }

  std::optional<TokenId> id(std::string_view tok) const {
    auto it = index_.find(std::string(tok));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Longest vocabulary token that is a prefix of `rest`. The pad token never
  // matches (pad ids must not appear inside token streams).
  std::optional<TokenId> longest_prefix(std::string_view rest) const {
    const std::size_t cap = std::min(rest.size(), max_token_len_);
    for (std::size_t len = cap; len >= 1; --len) {
      auto it = index_.find(std::string(rest.substr(0, len)));
      if (it != index_.end() && it->second != pad_id_) return it->second;
    }
    return std::nullopt;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId pad_id_ = -1;
  TokenId unk_id_ = -1;
  std::size_t max_token_len_ = 0;
};

// One token per line; line index = token id. Must contain the <pad> and
// <unk> strings and at least two tokens total.
inline Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error(ErrorCode::Io, "cannot open vocabulary: " + path);
  std::vector<std::string> tokens;
  std::unordered_map<std::string, TokenId> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (seen.count(line))
      throw data_error(ErrorCode::DuplicateToken,
                       "duplicate token in vocabulary: '" + line + "'");
    seen.emplace(line, static_cast<TokenId>(tokens.size()));
    tokens.push_back(line);
  }
  if (tokens.size() < 2)
    throw data_error(ErrorCode::EmptyVocabulary,
                     "vocabulary needs at least 2 tokens, got " +
                         std::to_string(tokens.size()));
  auto pad = seen.find(kPadToken);
  auto unk = seen.find(kUnkToken);
  if (pad == seen.end() || unk == seen.end())
    throw data_error(ErrorCode::MissingSpecialToken,
                     std::string("vocabulary must contain ") + kPadToken +
                         " and " + kUnkToken);
  return Vocabulary(std::move(tokens), pad->second, unk->second);
}

namespace detail {

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    std::size_t j = i;
    while (j < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[j])))
      ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

// Greedy longest-prefix subword matching of one lowercased word. A position
// with no matchable prefix absorbs the word's remainder into a single unk.
inline void match_word(const Vocabulary& v, std::string_view word,
                       std::vector<TokenId>& out) {
  std::size_t pos = 0;
  while (pos < word.size()) {
    auto id = v.longest_prefix(word.substr(pos));
    if (!id) {
      out.push_back(v.unk_id());
      return;
    }
    out.push_back(*id);
    pos += v.token(*id).size();
  }
}

}  // namespace detail

// Deterministic subword tokenization; truncates to max_len tokens.
inline TokenizedDocument tokenize(const Vocabulary& v, std::string_view text,
                                  std::size_t max_len = 128) {
  TokenizedDocument doc;
  doc.raw_text = std::string(text);
  const std::string lowered = detail::to_lower_ascii(text);
  for (const auto& word : detail::split_words(lowered)) {
    if (doc.token_ids.size() >= max_len) break;
    detail::match_word(v, word, doc.token_ids);
  }
  if (doc.token_ids.size() > max_len) doc.token_ids.resize(max_len);
  return doc;
}

// Splits on '.', '!', '?' and newline; trims; drops empty segments. Text
// without any terminator yields a single sentence.
inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::size_t a = 0, b = cur.size();
    while (a < b && std::isspace(static_cast<unsigned char>(cur[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(cur[b - 1]))) --b;
    if (b > a) out.push_back(cur.substr(a, b - a));
    cur.clear();
  };
  for (char ch : text) {
    if (ch == '.' || ch == '!' || ch == '?' || ch == '\n')
      flush();
    else
      cur.push_back(ch);
  }
  flush();
  return out;
}

// A document as per-sentence token lists, the unit of occurrence counting.
using SentenceTokens = std::vector<std::vector<TokenId>>;

inline SentenceTokens tokenize_sentences(const Vocabulary& v,
                                         std::string_view text) {
  SentenceTokens sents;
  for (const auto& s : split_sentences(text)) {
    const std::string lowered = detail::to_lower_ascii(s);
    std::vector<TokenId> ids;
    for (const auto& word : detail::split_words(lowered))
      detail::match_word(v, word, ids);
    if (!ids.empty()) sents.push_back(std::move(ids));
  }
  return sents;
}

}  // namespace contgcn
