#include "sentigraph/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace sentigraph {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'S', 'G', 'P', 'H'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  void need(std::size_t n) const {
    if (pos_ + n > data_.size())
      throw Error(Errc::SHAPE_MISMATCH, "checkpoint truncated");
  }

  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(
               static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    pos_ += 8;
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto v = data_.substr(pos_, n);
    pos_ += n;
    return v;
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

ordered_json hyperparams_to_json(const Hyperparams& hp) {
  ordered_json j;
  j["embedding_dim"] = hp.embedding_dim;
  j["recurrent_hidden_dim"] = hp.recurrent_hidden_dim;
  j["recurrent_layers"] = hp.recurrent_layers;
  j["projection_dim_edge"] = hp.projection_dim_edge;
  j["projection_dim_label"] = hp.projection_dim_label;
  j["dropout_rate"] = hp.dropout_rate;
  j["learning_rate"] = hp.learning_rate;
  j["max_epochs"] = hp.max_epochs;
  j["patience"] = hp.patience;
  j["batch_size"] = hp.batch_size;
  j["seed"] = hp.seed;
  j["edge_threshold"] = hp.edge_threshold;
  return j;
}

Hyperparams hyperparams_from_json(const ordered_json& j) {
  Hyperparams hp;
  try {
    hp.embedding_dim = j.at("embedding_dim").get<int>();
    hp.recurrent_hidden_dim = j.at("recurrent_hidden_dim").get<int>();
    hp.recurrent_layers = j.at("recurrent_layers").get<int>();
    hp.projection_dim_edge = j.at("projection_dim_edge").get<int>();
    hp.projection_dim_label = j.at("projection_dim_label").get<int>();
    hp.dropout_rate = j.at("dropout_rate").get<double>();
    hp.learning_rate = j.at("learning_rate").get<double>();
    hp.max_epochs = j.at("max_epochs").get<int>();
    hp.patience = j.at("patience").get<int>();
    hp.batch_size = j.at("batch_size").get<int>();
    hp.seed = j.at("seed").get<std::uint64_t>();
    hp.edge_threshold = j.at("edge_threshold").get<double>();
  } catch (const ordered_json::exception& e) {
    throw Error(Errc::SHAPE_MISMATCH,
                std::string("bad hyperparameter header: ") + e.what());
  }
  return hp;
}

}  // namespace

std::string save_checkpoint(const Model& model) {
  ordered_json header;
  header["hyperparams"] = hyperparams_to_json(model.hp());
  header["embedding_source"] = model.external_embeddings() ? "file" : "table";
  header["vocabulary"] = model.vocab().words;
  header["labels"] = label_set();

  ordered_json tensors = ordered_json::array();
  std::string data;
  // for_each_tensor is non-const by design; serialization does not mutate.
  auto& params = const_cast<Model&>(model).params();
  for_each_tensor(params, [&](const std::string& name, auto& tensor) {
    ordered_json t;
    t["name"] = name;
    t["rows"] = static_cast<std::int64_t>(tensor.rows());
    t["cols"] = static_cast<std::int64_t>(tensor.cols());
    tensors.push_back(std::move(t));
    for (Eigen::Index r = 0; r < tensor.rows(); ++r) {
      for (Eigen::Index c = 0; c < tensor.cols(); ++c) {
        const float f = static_cast<float>(tensor(r, c));
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(data, bits);
      }
    }
  });
  header["tensors"] = std::move(tensors);

  const std::string header_str = header.dump();
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, header_str.size());
  out += header_str;
  out += data;
  return out;
}

Model load_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw Error(Errc::BAD_MAGIC, "not a checkpoint file");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw Error(Errc::VERSION_UNSUPPORTED,
                "checkpoint version " + std::to_string(version));
  const std::uint64_t header_len = r.u64();
  ordered_json header;
  try {
    header = ordered_json::parse(r.take(header_len));
  } catch (const ordered_json::parse_error& e) {
    throw Error(Errc::SHAPE_MISMATCH,
                std::string("bad checkpoint header: ") + e.what());
  }

  Hyperparams hp = hyperparams_from_json(header.at("hyperparams"));
  Vocabulary vocab;
  try {
    vocab.words = header.at("vocabulary").get<std::vector<std::string>>();
    if (header.at("labels").get<std::vector<std::string>>() != label_set())
      throw Error(Errc::VERSION_UNSUPPORTED, "label inventory differs");
  } catch (const ordered_json::exception& e) {
    throw Error(Errc::SHAPE_MISMATCH,
                std::string("bad checkpoint header: ") + e.what());
  }
  vocab.word_ids.clear();
  for (std::size_t i = 0; i < vocab.words.size(); ++i)
    vocab.word_ids[vocab.words[i]] = static_cast<int>(i);
  if (vocab.size() < 3)
    throw Error(Errc::SHAPE_MISMATCH, "vocabulary misses reserved entries");

  const bool external = header.value("embedding_source", "table") == "file";
  Model model(hp, std::move(vocab), external);

  const auto& tensor_list = header.at("tensors");
  std::size_t next = 0;
  for_each_tensor(model.params(), [&](const std::string& name, auto& tensor) {
    if (next >= tensor_list.size())
      throw Error(Errc::SHAPE_MISMATCH, "missing tensor " + name);
    const auto& t = tensor_list[next++];
    if (t.at("name").get<std::string>() != name ||
        t.at("rows").get<std::int64_t>() != tensor.rows() ||
        t.at("cols").get<std::int64_t>() != tensor.cols())
      throw Error(Errc::SHAPE_MISMATCH,
                  "tensor " + name + " has unexpected shape");
    for (Eigen::Index row = 0; row < tensor.rows(); ++row) {
      for (Eigen::Index col = 0; col < tensor.cols(); ++col) {
        const std::uint32_t bits = r.u32();
        float f;
        std::memcpy(&f, &bits, 4);
        tensor(row, col) = static_cast<double>(f);
      }
    }
  });
  if (next != tensor_list.size())
    throw Error(Errc::SHAPE_MISMATCH, "extra tensors in header");
  return model;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IO_ERROR, "cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::IO_ERROR, "cannot read " + path);
  return content;
}

void write_file_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IO_ERROR, "cannot open " + tmp.string());
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(Errc::IO_ERROR, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(Errc::IO_ERROR, "cannot move " + tmp.string() + " into place");
  }
}

void save_checkpoint_file(const Model& model, const std::string& path) {
  write_file_atomic(path, save_checkpoint(model));
}

Model load_checkpoint_file(const std::string& path) {
  return load_checkpoint(read_file(path));
}

}  // namespace sentigraph
