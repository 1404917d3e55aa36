#pragma once

// Finite-difference gradient checking against the hand-written backward pass.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sentigraph/codec.hpp"
#include "sentigraph/parser.hpp"
#include "sentigraph/rng.hpp"

namespace sentigraph::testing {

inline Hyperparams tiny_hp(int emb = 6, int hidden = 5, int layers = 2,
                           int pe = 4, int pl = 3) {
  Hyperparams hp;
  hp.embedding_dim = emb;
  hp.recurrent_hidden_dim = hidden;
  hp.recurrent_layers = layers;
  hp.projection_dim_edge = pe;
  hp.projection_dim_label = pl;
  hp.dropout_rate = 0.0;
  return hp;
}

inline Model random_model(const Hyperparams& hp, int extra_words, Rng& rng) {
  Vocabulary vocab;
  for (int i = 0; i < extra_words; ++i) vocab.add("w" + std::to_string(i));
  Model model(hp, vocab, false);
  for_each_tensor(model.params(), [&](const std::string&, auto& t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c)
        t(r, c) = rng.uniform(-0.4, 0.4);
  });
  return model;
}

inline SentenceInput random_input(const Model& model, int n, Rng& rng) {
  SentenceInput input;
  for (int i = 0; i < n; ++i)
    input.word_ids.push_back(static_cast<int>(rng.below(model.vocab().size())));
  return input;
}

inline DepGraph random_gold(int n, Rng& rng) {
  DepGraph g;
  g.n = n;
  for (int h = 0; h <= n; ++h) {
    for (int d = 1; d <= n; ++d) {
      if (h == d || rng.below(4) != 0) continue;
      const std::string label =
          h == 0 ? label_set()[rng.below(3)] : label_set()[3 + rng.below(3)];
      g.edges.push_back({h, d, label});
    }
  }
  return g;
}

struct NamedView {
  std::string name;
  double* data;
  std::ptrdiff_t size;
};

inline std::vector<NamedView> named_views(ModelParams& p) {
  std::vector<NamedView> v;
  for_each_tensor(p, [&](const std::string& name, auto& t) {
    v.push_back({name, t.data(), t.size()});
  });
  return v;
}

// Central differences with step 1e-5 in double precision; returns the maximum
// relative error across every parameter of every tensor.
inline double gradient_check(Model& model, const SentenceInput& input,
                             const DepGraph& gold,
                             std::uint64_t dropout_seed = 0) {
  const bool use_dropout = dropout_seed != 0;
  auto eval_loss = [&]() {
    if (use_dropout) {
      Rng r(dropout_seed);  // identical masks on every evaluation
      return model.loss(model.forward(input, nullptr, &r), gold);
    }
    return model.loss(model.forward(input), gold);
  };

  ModelParams grads = ModelParams::allocate(model.hp(), model.vocab().size());
  ForwardCache cache;
  Rng dropout_rng(dropout_seed);
  const Scores scores =
      model.forward(input, &cache, use_dropout ? &dropout_rng : nullptr);
  model.backward(input, cache, scores, gold, grads);

  const double h = 1e-5;
  double max_rel = 0.0;
  auto params = named_views(model.params());
  auto grad_views = named_views(grads);
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::ptrdiff_t i = 0; i < params[k].size; ++i) {
      double& value = params[k].data[i];
      const double saved = value;
      value = saved + h;
      const double up = eval_loss();
      value = saved - h;
      const double down = eval_loss();
      value = saved;
      const double fd = (up - down) / (2 * h);
      const double analytic = grad_views[k].data[i];
      const double rel = std::abs(analytic - fd) /
                         std::max({std::abs(analytic), std::abs(fd), 1e-5});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace sentigraph::testing
