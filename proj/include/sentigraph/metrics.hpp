#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sentigraph/codec.hpp"
#include "sentigraph/core.hpp"
#include "sentigraph/parallel.hpp"
#include "sentigraph/rational.hpp"

namespace sentigraph {

struct Prf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct EvalReport {
  Prf overall;
  // Span-level breakdown, populated by sentiment_graph_f1 and span_f1.
  Prf holder;
  Prf target;
  Prf expression;
  std::int64_t predicted_count = 0;
  std::int64_t gold_count = 0;
  double weighted_tp_precision = 0;  // sum of matched precision weights
  double weighted_tp_recall = 0;     // sum of matched recall weights
};

enum class SpanElement { Holder, Target, Expression };

// Token-overlap weights for matching pred against gold, or nullopt when the
// pair is unmatchable: polarities differ (if required), or some element is
// empty on one side only, or some element has disjoint token sets.
// p = mean over the three elements of |pred∩gold|/|pred| (1 when both empty),
// r = the same with |gold| in the denominator.
std::optional<std::pair<Rational, Rational>> tuple_weight(
    const Opinion& pred, const Opinion& gold, const Sentence& sentence,
    bool require_polarity);

// The ranking metric: per sentence, a maximum one-to-one matching over tuple
// weights (ties broken toward lower gold index, then lower pred index);
// precision divides matched precision weight by the number of predicted
// tuples, recall by the number of gold tuples, micro-aggregated exactly.
EvalReport sentiment_graph_f1(const Treebank& pred, const Treebank& gold,
                              bool require_polarity = true,
                              Exec exec = Exec::OpenMP);

EvalReport edge_micro_f1(const std::vector<DepGraph>& pred,
                         const std::vector<DepGraph>& gold, bool labeled = true,
                         Exec exec = Exec::OpenMP);

// Weighted overlap for a single element over opinions with that element
// non-empty, matched one-to-one per sentence like tuple_weight.
EvalReport span_f1(const Treebank& pred, const Treebank& gold,
                   SpanElement element, Exec exec = Exec::OpenMP);

}  // namespace sentigraph
