#include "sentigraph/embeddings.hpp"

#include <algorithm>
#include <cstring>

#include "sentigraph/checkpoint.hpp"

namespace sentigraph {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'P', 'E'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view data, std::size_t& pos) {
  if (pos + 4 > data.size())
    throw Error(Errc::SHAPE_MISMATCH, "embedding file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i]))
         << (8 * i);
  pos += 4;
  return v;
}

std::uint64_t get_u64(std::string_view data, std::size_t& pos) {
  if (pos + 8 > data.size())
    throw Error(Errc::SHAPE_MISMATCH, "embedding file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + i]))
         << (8 * i);
  pos += 8;
  return v;
}

}  // namespace

EmbeddingProvider EmbeddingProvider::from_bytes(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(Errc::BAD_MAGIC, "not an embedding file");
  std::size_t pos = 4;
  const std::uint32_t version = get_u32(bytes, pos);
  if (version != kVersion)
    throw Error(Errc::VERSION_UNSUPPORTED,
                "embedding file version " + std::to_string(version));
  EmbeddingProvider p;
  p.external_ = true;
  p.dim_ = static_cast<int>(get_u32(bytes, pos));
  if (p.dim_ < 1)
    throw Error(Errc::SHAPE_MISMATCH, "embedding dimension must be >= 1");
  const std::uint64_t count = get_u64(bytes, pos);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t id_len = get_u32(bytes, pos);
    if (pos + id_len > bytes.size())
      throw Error(Errc::SHAPE_MISMATCH, "embedding file truncated");
    std::string sent_id(bytes.substr(pos, id_len));
    pos += id_len;
    const int index = static_cast<int>(get_u32(bytes, pos));
    Vector v(p.dim_);
    for (int d = 0; d < p.dim_; ++d) {
      const std::uint32_t bits = get_u32(bytes, pos);
      float f;
      std::memcpy(&f, &bits, 4);
      v(d) = static_cast<double>(f);
    }
    p.table_[sent_id].emplace_back(index, std::move(v));
  }
  return p;
}

EmbeddingProvider EmbeddingProvider::from_file(const std::string& path) {
  return from_bytes(read_file(path));
}

Matrix EmbeddingProvider::vectors_for(const Sentence& s) const {
  if (!external_)
    throw Error(Errc::MISSING_VECTOR, "provider has no vector file");
  const auto it = table_.find(s.sent_id);
  const int n = static_cast<int>(s.tokens.size());
  Matrix m(n, dim_);
  for (int i = 1; i <= n; ++i) {
    const std::pair<int, Vector>* found = nullptr;
    if (it != table_.end())
      for (const auto& rec : it->second)
        if (rec.first == i) found = &rec;
    if (!found)
      throw Error(Errc::MISSING_VECTOR, "no vector for sentence '" + s.sent_id +
                                            "' token " + std::to_string(i));
    m.row(i - 1) = found->second.transpose();
  }
  return m;
}

std::string write_embedding_bytes(int dim,
                                  const std::vector<EmbeddingRecord>& records) {
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(dim));
  put_u64(out, records.size());
  for (const auto& rec : records) {
    put_u32(out, static_cast<std::uint32_t>(rec.sent_id.size()));
    out += rec.sent_id;
    put_u32(out, static_cast<std::uint32_t>(rec.token_index));
    for (int d = 0; d < dim; ++d) {
      const float f = static_cast<float>(rec.value(d));
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  }
  return out;
}

SentenceInput make_input(const Model& model, const Sentence& s,
                         const EmbeddingProvider& provider) {
  if (model.external_embeddings()) {
    if (!provider.external())
      throw Error(Errc::MISSING_VECTOR,
                  "model was trained with an external embedding file; pass one");
    SentenceInput input;
    input.external = provider.vectors_for(s);
    return input;
  }
  return model.make_input(s);
}

std::vector<DepGraph> predict_treebank(const Model& model, const Treebank& t,
                                       const EmbeddingProvider& provider,
                                       Exec exec) {
  std::vector<DepGraph> graphs(t.sentences.size());
  std::vector<std::string> errors(t.sentences.size());
  for_each_index(static_cast<std::int64_t>(t.sentences.size()), exec,
                 [&](std::int64_t i) {
                   try {
                     graphs[i] = model.predict(
                         make_input(model, t.sentences[i], provider));
                   } catch (const Error& e) {
                     errors[i] = e.what();
                   }
                 });
  for (const auto& e : errors)
    if (!e.empty()) throw Error(Errc::MISSING_VECTOR, e);
  return graphs;
}

}  // namespace sentigraph
