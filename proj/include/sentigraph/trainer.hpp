#pragma once

#include <vector>

#include "sentigraph/embeddings.hpp"
#include "sentigraph/metrics.hpp"
#include "sentigraph/parser.hpp"

// Mini-batch Adam training with per-epoch model selection on the development
// set. Everything is deterministic under a fixed seed: parameter init, batch
// order and dropout masks come from seeded xoshiro streams, and per-sentence
// gradients are reduced in sentence order regardless of thread count.

namespace sentigraph {

struct TrainOptions {
  Mode mode = Mode::HeadFinal;
  // Dev score used for model selection; labeled edge micro-F1 is the default,
  // sentiment graph F1 is exposed as the alternative reading.
  enum class Select { LabeledEdgeF1, SentimentGraphF1 };
  Select select = Select::LabeledEdgeF1;
  bool log_timing = true;  // false under --deterministic
  Exec exec = Exec::OpenMP;
};

struct EpochLog {
  int epoch = 0;            // 1-based
  double train_loss = 0;    // mean per-sentence loss
  double dev_precision = 0;
  double dev_recall = 0;
  double dev_f1 = 0;
  double elapsed_sec = 0;   // only meaningful when log_timing
};

struct TrainResult {
  Model model;  // best dev checkpoint
  std::vector<EpochLog> log;
  bool converged = false;  // best dev F1 >= 0.01
  int best_epoch = 0;
  double best_f1 = 0;
};

// Adam constants: beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
TrainResult train(const Treebank& train_tb, const Treebank& dev_tb,
                  const Hyperparams& hp, const EmbeddingProvider& provider,
                  const TrainOptions& opts = {});

}  // namespace sentigraph
