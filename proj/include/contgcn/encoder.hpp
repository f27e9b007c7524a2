#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "contgcn/errors.hpp"
#include "contgcn/io.hpp"
#include "contgcn/matrix.hpp"
#include "contgcn/vocab.hpp"

namespace contgcn {

// A batch of tokenized documents padded to a common length. Documents are
// kept unpadded; padded_len records the alignment target.
struct DocumentBatch {
  std::vector<TokenizedDocument> docs;
  std::vector<std::string> keys;  // stable document ids (external encoder)
  std::size_t padded_len = 0;

  std::size_t size() const { return docs.size(); }
};

inline DocumentBatch assemble_batch(std::vector<TokenizedDocument> docs,
                                    std::vector<std::string> keys = {}) {
  if (docs.empty())
    throw data_error(ErrorCode::ZeroLengthDocument, "empty batch");
  DocumentBatch batch;
  batch.padded_len = 1;
  for (const auto& d : docs) {
    if (d.token_ids.empty())
      throw data_error(ErrorCode::ZeroLengthDocument,
                       "document of length 0 in batch");
    batch.padded_len = std::max(batch.padded_len, d.token_ids.size());
  }
  batch.docs = std::move(docs);
  batch.keys = std::move(keys);
  return batch;
}

// Per-document contextual token states plus pooled document embeddings.
// token_states[j] holds only the real (non-pad) positions of document j; the
// pad mask is implicit in its row count.
struct EncodedBatch {
  std::vector<Matrix> token_states;  // b matrices, len_j x d
  Matrix doc_embeddings;             // b x d, masked mean of token states
};

struct EncoderParams {
  Matrix table;  // u x d trainable embedding table

  std::size_t u() const { return table.rows(); }
  std::size_t d() const { return table.cols(); }
};

inline EncoderParams init_encoder(std::size_t u, std::size_t d,
                                  std::mt19937_64& rng) {
  return EncoderParams{uniform_matrix(u, d, -0.1, 0.1, rng)};
}

// Frozen per-document token states keyed by stable document id.
class ExternalEmbeddings {
 public:
  static constexpr char kMagic[8] = {'C', 'G', 'C', 'N', 'E', 'M', 'B', '1'};

  static ExternalEmbeddings load(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    r.verify_checksum();
    char magic[8];
    r.get_bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0)
      throw data_error(ErrorCode::BadFormat,
                       "not an embedding file: " + path);
    if (r.get_u32() != 1)
      throw data_error(ErrorCode::BadFormat, "unsupported embedding format");
    ExternalEmbeddings ext;
    ext.d_ = r.get_u32();
    const std::uint64_t ndocs = r.get_u64();
    for (std::uint64_t k = 0; k < ndocs; ++k) {
      std::string key = r.get_string();
      const std::uint32_t rows = r.get_u32();
      Matrix m(rows, ext.d_);
      for (std::size_t i = 0; i < m.size(); ++i) {
        float f;
        r.get_bytes(&f, 4);
        m.data()[i] = static_cast<double>(f);
      }
      ext.by_key_.emplace(std::move(key), std::move(m));
    }
    return ext;
  }

  static void save(const std::string& path, std::uint32_t d,
                   const std::vector<std::pair<std::string, Matrix>>& docs) {
    ByteWriter w;
    w.put_bytes(kMagic, 8);
    w.put_u32(1);
    w.put_u32(d);
    w.put_u64(docs.size());
    for (const auto& [key, m] : docs) {
      if (m.cols() != d)
        throw data_error(ErrorCode::DimMismatch,
                         "embedding width mismatch for key " + key);
      w.put_string(key);
      w.put_u32(static_cast<std::uint32_t>(m.rows()));
      for (std::size_t i = 0; i < m.size(); ++i) {
        const float f = static_cast<float>(m.data()[i]);
        w.put_bytes(&f, 4);
      }
    }
    w.finalize();
    w.write_atomic(path);
  }

  std::size_t d() const { return d_; }

  const Matrix& states_for(const std::string& key,
                           std::size_t expected_rows) const {
    auto it = by_key_.find(key);
    if (it == by_key_.end())
      throw data_error(ErrorCode::MissingDocumentKey,
                       "no embeddings for document '" + key + "'");
    if (it->second.rows() != expected_rows)
      throw data_error(ErrorCode::DimMismatch,
                       "embedding rows for '" + key + "' do not match the " +
                           "tokenized length");
    return it->second;
  }

 private:
  std::uint32_t d_ = 0;
  std::unordered_map<std::string, Matrix> by_key_;
};

// Tiny trainable document encoder: per-position table lookup plus masked
// mean pooling. Stands in for the PLM of the full-scale system.
inline EncodedBatch encode_documents(const EncoderParams& params,
                                     const DocumentBatch& batch) {
  const std::size_t d = params.d();
  EncodedBatch enc;
  enc.token_states.reserve(batch.size());
  enc.doc_embeddings = Matrix(batch.size(), d);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& ids = batch.docs[j].token_ids;
    Matrix states(ids.size(), d);
    double* emb = enc.doc_embeddings.row(j);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const auto id = static_cast<std::size_t>(ids[k]);
      if (id >= params.u())
        throw data_error(ErrorCode::TokenOutOfRange,
                         "token id out of range in batch");
      std::copy_n(params.table.row(id), d, states.row(k));
      axpy(1.0, states.row(k), emb, d);
    }
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (std::size_t i = 0; i < d; ++i) emb[i] *= inv;
    enc.token_states.push_back(std::move(states));
  }
  check_finite(enc.doc_embeddings, "document embeddings");
  return enc;
}

// External (frozen) encoder path; states come from the file, pooling is the
// same masked mean.
inline EncodedBatch encode_documents(const ExternalEmbeddings& ext,
                                     const DocumentBatch& batch) {
  if (batch.keys.size() != batch.size())
    throw data_error(ErrorCode::MissingDocumentKey,
                     "external encoding needs per-document keys");
  const std::size_t d = ext.d();
  EncodedBatch enc;
  enc.token_states.reserve(batch.size());
  enc.doc_embeddings = Matrix(batch.size(), d);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& ids = batch.docs[j].token_ids;
    Matrix states = ext.states_for(batch.keys[j], ids.size());
    double* emb = enc.doc_embeddings.row(j);
    for (std::size_t k = 0; k < ids.size(); ++k)
      axpy(1.0, states.row(k), emb, d);
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (std::size_t i = 0; i < d; ++i) emb[i] *= inv;
    enc.token_states.push_back(std::move(states));
  }
  check_finite(enc.doc_embeddings, "document embeddings");
  return enc;
}

// Batch-wise node embedding: token rows zero, row u+j holds document j.
inline Matrix assemble_jammed(const EncodedBatch& enc, std::size_t u) {
  const std::size_t b = enc.doc_embeddings.rows();
  const std::size_t d = enc.doc_embeddings.cols();
  Matrix x(u + b, d);
  for (std::size_t j = 0; j < b; ++j)
    std::copy_n(enc.doc_embeddings.row(j), d, x.row(u + j));
  return x;
}

// Distinct tokens of a document with their occurrence positions, the shape
// shared by unjammed assembly and its backward pass.
struct DocTokenOccurrences {
  std::vector<std::uint32_t> tokens;               // sorted distinct ids
  std::vector<std::vector<std::uint32_t>> positions;
};

inline DocTokenOccurrences doc_token_occurrences(
    const TokenizedDocument& doc) {
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> map;
  for (std::size_t k = 0; k < doc.token_ids.size(); ++k)
    map[static_cast<std::uint32_t>(doc.token_ids[k])].push_back(
        static_cast<std::uint32_t>(k));
  DocTokenOccurrences occ;
  occ.tokens.reserve(map.size());
  for (const auto& [t, _] : map) occ.tokens.push_back(t);
  std::sort(occ.tokens.begin(), occ.tokens.end());
  occ.positions.reserve(occ.tokens.size());
  for (std::uint32_t t : occ.tokens) occ.positions.push_back(map[t]);
  return occ;
}

// Sample-specific node embedding of document j over u+b nodes: token row i
// averages the contextual states of i's occurrences, row u+j holds the
// document embedding, everything else is zero.
inline Matrix assemble_unjammed(const EncodedBatch& enc,
                                const DocumentBatch& batch, std::size_t j,
                                std::size_t u) {
  const std::size_t b = enc.doc_embeddings.rows();
  const std::size_t d = enc.doc_embeddings.cols();
  Matrix x(u + b, d);
  const auto occ = doc_token_occurrences(batch.docs[j]);
  const Matrix& states = enc.token_states[j];
  for (std::size_t q = 0; q < occ.tokens.size(); ++q) {
    double* row = x.row(occ.tokens[q]);
    for (std::uint32_t pos : occ.positions[q])
      axpy(1.0, states.row(pos), row, d);
    const double inv = 1.0 / static_cast<double>(occ.positions[q].size());
    for (std::size_t i = 0; i < d; ++i) row[i] *= inv;
  }
  std::copy_n(enc.doc_embeddings.row(j), d, x.row(u + j));
  return x;
}

}  // namespace contgcn
