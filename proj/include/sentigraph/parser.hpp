#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentigraph/codec.hpp"
#include "sentigraph/core.hpp"
#include "sentigraph/rng.hpp"

// The biaffine semantic dependency parser. Tokens (plus a virtual root at
// position 0) are embedded, contextualized by a bidirectional LSTM, projected
// into head/dependent spaces, and scored by biaffine forms: one for edge
// existence, one per label. All math is double precision; forward, loss and
// reverse-mode gradients are implemented by hand.

namespace sentigraph {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Hyperparams {
  int embedding_dim = 100;
  int recurrent_hidden_dim = 200;
  int recurrent_layers = 2;
  int projection_dim_edge = 300;
  int projection_dim_label = 150;
  double dropout_rate = 0.33;
  double learning_rate = 1e-3;  // 5e-5 when fine-tuning external vectors
  int max_epochs = 100;
  int patience = 10;
  int batch_size = 16;
  std::uint64_t seed = 1;
  double edge_threshold = 0.5;

  void validate() const;  // throws DIM_MISMATCH on out-of-range values
};

// Word ids with reserved entries; labels use the fixed closed label_set().
struct Vocabulary {
  static constexpr int kUnknown = 0;
  static constexpr int kPadding = 1;
  static constexpr int kRoot = 2;

  std::vector<std::string> words = {"<unk>", "<pad>", "<root>"};
  std::unordered_map<std::string, int> word_ids = {
      {"<unk>", 0}, {"<pad>", 1}, {"<root>", 2}};

  // First-occurrence order over the training treebank.
  static Vocabulary build(const Treebank& train);
  static Vocabulary reserved_only() { return Vocabulary{}; }

  int add(const std::string& form);
  int id(const std::string& form) const;
  int size() const { return static_cast<int>(words.size()); }
};

struct LstmDirection {
  Matrix w_in;   // 4H x in_dim, gate order i, f, g, o
  Matrix w_rec;  // 4H x H
  Vector bias;   // 4H
};

struct LstmLayer {
  LstmDirection fwd;
  LstmDirection bwd;
};

struct Projection {
  Matrix w;  // out_dim x 2H
  Vector b;  // out_dim
};

struct ModelParams {
  Matrix embeddings;  // V x De; row kRoot is the learned root embedding
  std::vector<LstmLayer> lstm;
  Projection edge_head, edge_dep, label_head, label_dep;
  Matrix edge_biaffine;               // (de+1) x (de+1), augmented with ones
  std::vector<Matrix> label_biaffine;  // one (dl+1) x (dl+1) per label

  static ModelParams allocate(const Hyperparams& hp, int vocab_size);
  void set_zero();
};

// Visits every tensor in a fixed, documented order; this order defines both
// the checkpoint layout and the initialization draw order.
template <typename F>
void for_each_tensor(ModelParams& p, F&& f) {
  f("embeddings", p.embeddings);
  for (std::size_t l = 0; l < p.lstm.size(); ++l) {
    const std::string base = "lstm" + std::to_string(l);
    f(base + ".fwd.w_in", p.lstm[l].fwd.w_in);
    f(base + ".fwd.w_rec", p.lstm[l].fwd.w_rec);
    f(base + ".fwd.bias", p.lstm[l].fwd.bias);
    f(base + ".bwd.w_in", p.lstm[l].bwd.w_in);
    f(base + ".bwd.w_rec", p.lstm[l].bwd.w_rec);
    f(base + ".bwd.bias", p.lstm[l].bwd.bias);
  }
  f("edge_head.w", p.edge_head.w);
  f("edge_head.b", p.edge_head.b);
  f("edge_dep.w", p.edge_dep.w);
  f("edge_dep.b", p.edge_dep.b);
  f("label_head.w", p.label_head.w);
  f("label_head.b", p.label_head.b);
  f("label_dep.w", p.label_dep.w);
  f("label_dep.b", p.label_dep.b);
  f("edge_biaffine", p.edge_biaffine);
  for (std::size_t k = 0; k < p.label_biaffine.size(); ++k)
    f("label_biaffine" + std::to_string(k), p.label_biaffine[k]);
}

// One sentence as the network sees it: word ids for the trainable table, or
// per-token rows when an external vector file supplies the embeddings.
struct SentenceInput {
  std::vector<int> word_ids;  // n entries, positions 1..n
  Matrix external;            // n x De when external_embeddings, else empty
};

struct Scores {
  Matrix edge;                // (n+1) x (n+1); [head][dep]; masked = -inf
  std::vector<Matrix> label;  // one (n+1) x (n+1) matrix per label
};

// Activations kept by forward for the backward pass. Sequences are stored as
// (n+1)-row matrices, position 0 being the virtual root.
struct LstmTrace {
  Matrix inputs;                      // N x in_dim, after dropout
  Matrix i, f, g, o, c, tanh_c, h;    // N x H each
};

struct ForwardCache {
  std::vector<Matrix> dropout;        // per layer: N x in_dim mask, or empty
  std::vector<LstmTrace> fwd, bwd;    // per layer
  Matrix encoded;                     // N x 2H, final layer output
  Matrix edge_head, edge_dep, label_head, label_dep;  // tanh outputs
};

class Model {
 public:
  Model() = default;
  Model(Hyperparams hp, Vocabulary vocab, bool external_embeddings);

  const Hyperparams& hp() const { return hp_; }
  const Vocabulary& vocab() const { return vocab_; }
  bool external_embeddings() const { return external_embeddings_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  void init_params(Rng& rng);

  // Deterministic given the checkpoint and input. When training, a dropout
  // rng draws per-position input masks; pass nullptr for evaluation.
  Scores forward(const SentenceInput& input, ForwardCache* cache = nullptr,
                 Rng* dropout_rng = nullptr) const;

  // Mean edge BCE over valid (h, d) pairs plus mean label cross-entropy over
  // gold edges. Throws NONFINITE_LOSS when an unmasked logit is not finite.
  double loss(const Scores& scores, const DepGraph& gold) const;

  // Accumulates exact reverse-mode gradients of loss into grad.
  void backward(const SentenceInput& input, const ForwardCache& cache,
                const Scores& scores, const DepGraph& gold,
                ModelParams& grad) const;

  // Edges with sigmoid(edge score) > threshold; labels are the constrained
  // argmax (root edges over exp:<Polarity>, others over exp/targ/hold), which
  // guarantees decodable graphs.
  DepGraph predict(const SentenceInput& input) const;

  SentenceInput make_input(const Sentence& s) const;

 private:
  Hyperparams hp_;
  Vocabulary vocab_;
  bool external_embeddings_ = false;
  ModelParams params_;
};

// The thresholding and label-repair step of predict, separated out so the
// decision rule can be exercised on hand-built scores.
DepGraph scores_to_graph(const Scores& scores, double edge_threshold);

}  // namespace sentigraph
