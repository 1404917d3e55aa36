#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "sentigraph/parser.hpp"

// Embedding source: either the model's trainable table, or a read-only binary
// file of precomputed per-token vectors keyed by (sent_id, token index). The
// file stands in for a contextual encoder: magic "SGPE", u32 version, u32
// dim, u64 record count, then records of (u32 sent_id length, sent_id bytes,
// u32 1-based token index, dim little-endian float32 values).

namespace sentigraph {

struct EmbeddingRecord {
  std::string sent_id;
  int token_index = 0;  // 1-based
  Vector value;
};

class EmbeddingProvider {
 public:
  static EmbeddingProvider trainable() { return EmbeddingProvider(); }
  static EmbeddingProvider from_bytes(std::string_view bytes);
  static EmbeddingProvider from_file(const std::string& path);

  bool external() const { return external_; }
  int dim() const { return dim_; }

  // n x dim matrix for the sentence's tokens; throws MISSING_VECTOR when the
  // file does not cover some (sent_id, index).
  Matrix vectors_for(const Sentence& s) const;

 private:
  EmbeddingProvider() = default;

  bool external_ = false;
  int dim_ = 0;
  std::unordered_map<std::string, std::vector<std::pair<int, Vector>>> table_;
};

std::string write_embedding_bytes(int dim,
                                  const std::vector<EmbeddingRecord>& records);

SentenceInput make_input(const Model& model, const Sentence& s,
                         const EmbeddingProvider& provider);

std::vector<DepGraph> predict_treebank(const Model& model, const Treebank& t,
                                       const EmbeddingProvider& provider,
                                       Exec exec = Exec::OpenMP);

}  // namespace sentigraph
