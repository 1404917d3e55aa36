#pragma once

// Shared fixtures for the test suites: the running example sentence, fuzz
// generators, and a brute-force matching oracle kept independent of the
// library's assignment algorithm.

#include <Eigen/Core>
#include <algorithm>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "sentigraph/codec.hpp"
#include "sentigraph/core.hpp"
#include "sentigraph/metrics.hpp"
#include "sentigraph/rng.hpp"
#include "sentigraph/text.hpp"

namespace sentigraph::testing {

inline bool bitwise_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

// "I got an upgrade to Executive suite at no cost": holder "I", target
// "an upgrade to Executive suite", expression "got" + "at no cost", Positive.
inline Sentence fig1_sentence() {
  Sentence s =
      make_sentence("fig1", "I got an upgrade to Executive suite at no cost");
  Opinion op;
  op.holder.fragments = {{"I", 0, 1}};
  op.target.fragments = {{"an upgrade to Executive suite", 6, 35}};
  op.expression.fragments = {{"got", 2, 5}, {"at no cost", 36, 46}};
  op.polarity = Polarity::Positive;
  s.opinions.push_back(op);
  return s;
}

inline std::vector<DepEdge> fig1_head_final_edges() {
  return {{0, 10, "exp:Positive"}, {10, 2, "exp"},  {10, 8, "exp"},
          {10, 9, "exp"},          {10, 7, "targ"}, {7, 3, "targ"},
          {7, 4, "targ"},          {7, 5, "targ"},  {7, 6, "targ"},
          {10, 1, "hold"}};
}

inline bool same_edges(const DepGraph& g, std::vector<DepEdge> expected) {
  auto key = [](const DepEdge& e) { return std::tie(e.head, e.dep, e.label); };
  std::sort(expected.begin(), expected.end(),
            [&](const DepEdge& a, const DepEdge& b) { return key(a) < key(b); });
  if (g.edges.size() != expected.size()) return false;
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (key(g.edges[i]) != key(expected[i])) return false;
  return true;
}

// --- fuzz generators ---

inline Polarity random_polarity(Rng& rng) {
  switch (rng.below(3)) {
    case 0: return Polarity::Positive;
    case 1: return Polarity::Negative;
    default: return Polarity::Neutral;
  }
}

inline std::string random_word(Rng& rng) {
  static const char* kWords[] = {"la",    "casa",  "hotel", "νίκη", "gela",
                                 "oso",   "ona",   "zen",   "très", "bon",
                                 "fin",   "mar",   "sol",   "rooma"};
  return kWords[rng.below(std::size(kWords))];
}

// Span over the contiguous token index run [first, last] (1-based).
inline SpanFragment run_fragment(const Sentence& s, int first, int last) {
  const Token& a = s.tokens[static_cast<std::size_t>(first) - 1];
  const Token& b = s.tokens[static_cast<std::size_t>(last) - 1];
  return {text::cp_slice(s.text, a.start, b.end), a.start, b.end};
}

// Span over an arbitrary sorted token index set: one fragment per run.
inline Span span_over(const Sentence& s, std::vector<int> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  Span span;
  std::size_t i = 0;
  while (i < indices.size()) {
    std::size_t j = i;
    while (j + 1 < indices.size() && indices[j + 1] == indices[j] + 1) ++j;
    span.fragments.push_back(run_fragment(s, indices[i], indices[j]));
    i = j + 1;
  }
  return span;
}

// A self-consistent sentence whose opinions use pairwise-disjoint token sets,
// i.e. within the class where encode/decode round-trips exactly.
inline Sentence random_roundtrip_sentence(Rng& rng, const std::string& id,
                                          int max_tokens = 14) {
  const int n = 3 + static_cast<int>(rng.below(max_tokens - 2));
  std::string text;
  for (int i = 0; i < n; ++i) {
    if (i) text += rng.below(8) == 0 ? "  " : " ";  // occasional double space
    text += random_word(rng);
  }
  Sentence s = make_sentence(id, text);

  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i + 1;
  rng.shuffle(pool);
  std::size_t cursor = 0;
  auto draw = [&](std::size_t count) {
    std::vector<int> out;
    for (std::size_t i = 0; i < count && cursor < pool.size(); ++i)
      out.push_back(pool[cursor++]);
    return out;
  };

  const int n_opinions = static_cast<int>(rng.below(3));
  for (int k = 0; k < n_opinions; ++k) {
    const auto expr = draw(1 + rng.below(3));
    if (expr.empty()) break;
    Opinion op;
    op.expression = span_over(s, expr);
    op.target = span_over(s, draw(rng.below(3)));
    op.holder = span_over(s, draw(rng.below(2)));
    op.polarity = random_polarity(rng);
    s.opinions.push_back(std::move(op));
  }
  return s;
}

inline Treebank random_roundtrip_treebank(Rng& rng, const std::string& name,
                                          int n_sentences) {
  Treebank t;
  t.name = name;
  for (int i = 0; i < n_sentences; ++i)
    t.sentences.push_back(
        random_roundtrip_sentence(rng, name + "-" + std::to_string(i)));
  return t;
}

// Arbitrary (possibly overlapping) opinions over a sentence's tokens, for
// metric fuzzing.
inline Opinion random_opinion(const Sentence& s, Rng& rng) {
  const int n = static_cast<int>(s.tokens.size());
  auto random_set = [&](bool allow_empty) {
    std::vector<int> v;
    for (int i = 1; i <= n; ++i)
      if (rng.below(4) == 0) v.push_back(i);
    if (v.empty() && !allow_empty)
      v.push_back(1 + static_cast<int>(rng.below(n)));
    return v;
  };
  Opinion op;
  op.expression = span_over(s, random_set(false));
  op.target = span_over(s, random_set(true));
  op.holder = span_over(s, random_set(true));
  op.polarity = random_polarity(rng);
  return op;
}

struct MetricInstance {
  Treebank pred;
  Treebank gold;
};

inline MetricInstance random_metric_instance(Rng& rng, int n_sentences,
                                             int max_tokens = 12,
                                             int max_tuples = 4) {
  MetricInstance inst;
  inst.pred.name = "pred";
  inst.gold.name = "gold";
  for (int i = 0; i < n_sentences; ++i) {
    const int n = 2 + static_cast<int>(rng.below(max_tokens - 1));
    std::string text;
    for (int k = 0; k < n; ++k) {
      if (k) text += ' ';
      text += random_word(rng);
    }
    Sentence pred_s = make_sentence("m" + std::to_string(i), text);
    Sentence gold_s = pred_s;
    const auto n_pred = rng.below(max_tuples + 1);
    const auto n_gold = rng.below(max_tuples + 1);
    for (std::uint64_t k = 0; k < n_pred; ++k)
      pred_s.opinions.push_back(random_opinion(pred_s, rng));
    for (std::uint64_t k = 0; k < n_gold; ++k)
      gold_s.opinions.push_back(random_opinion(gold_s, rng));
    inst.pred.sentences.push_back(std::move(pred_s));
    inst.gold.sentences.push_back(std::move(gold_s));
  }
  return inst;
}

// --- brute-force oracle ---

// Exhaustive enumeration of one-to-one matchings. Among matchings maximizing
// the total (p+r) weight it takes the best precision mass and the best recall
// mass, mirroring the metric's contract but through a different algorithm.
struct OracleScore {
  Rational sum_p;
  Rational sum_r;
  std::int64_t predicted = 0;
  std::int64_t gold = 0;
};

inline void oracle_enumerate(
    const std::vector<std::vector<std::optional<std::pair<Rational, Rational>>>>& w,
    std::size_t i, std::vector<bool>& used, Rational total, Rational sum_p,
    Rational sum_r, Rational& best_total, Rational& best_p, Rational& best_r) {
  if (i == w.size()) {
    if (best_total < total) {
      best_total = total;
      best_p = sum_p;
      best_r = sum_r;
    } else if (total == best_total) {
      if (best_p < sum_p) best_p = sum_p;
      if (best_r < sum_r) best_r = sum_r;
    }
    return;
  }
  oracle_enumerate(w, i + 1, used, total, sum_p, sum_r, best_total, best_p,
                   best_r);
  for (std::size_t j = 0; j < used.size(); ++j) {
    if (used[j] || !w[i][j]) continue;
    used[j] = true;
    oracle_enumerate(w, i + 1, used, total + w[i][j]->first + w[i][j]->second,
                     sum_p + w[i][j]->first, sum_r + w[i][j]->second,
                     best_total, best_p, best_r);
    used[j] = false;
  }
}

// The oracle's own span-to-token-set conversion and pair weighting, written
// from the metric definition rather than shared with the implementation.
inline std::vector<int> oracle_token_set(const Span& span, const Sentence& s) {
  std::vector<int> out;
  for (const auto& tok : s.tokens)
    for (const auto& frag : span.fragments)
      if (frag.start <= tok.start && tok.end <= frag.end) {
        out.push_back(tok.index);
        break;
      }
  return out;
}

inline std::optional<std::pair<Rational, Rational>> oracle_weight(
    const Opinion& pred, const Opinion& gold, const Sentence& s,
    bool require_polarity) {
  if (require_polarity && pred.polarity != gold.polarity) return std::nullopt;
  Rational p_sum, r_sum;
  const Span* pred_spans[3] = {&pred.holder, &pred.target, &pred.expression};
  const Span* gold_spans[3] = {&gold.holder, &gold.target, &gold.expression};
  for (int e = 0; e < 3; ++e) {
    const auto pe = oracle_token_set(*pred_spans[e], s);
    const auto ge = oracle_token_set(*gold_spans[e], s);
    if (pe.empty() && ge.empty()) {
      p_sum += 1;
      r_sum += 1;
      continue;
    }
    long long inter = 0;
    for (int a : pe)
      for (int b : ge)
        if (a == b) ++inter;
    if (inter == 0) return std::nullopt;
    p_sum += Rational(inter, static_cast<long long>(pe.size()));
    r_sum += Rational(inter, static_cast<long long>(ge.size()));
  }
  return std::pair{p_sum / 3, r_sum / 3};
}

inline OracleScore oracle_sentence(const Sentence& pred, const Sentence& gold,
                                   bool require_polarity) {
  OracleScore out;
  out.predicted = static_cast<std::int64_t>(pred.opinions.size());
  out.gold = static_cast<std::int64_t>(gold.opinions.size());
  if (pred.opinions.empty() || gold.opinions.empty()) return out;
  std::vector<std::vector<std::optional<std::pair<Rational, Rational>>>> w(
      pred.opinions.size(),
      std::vector<std::optional<std::pair<Rational, Rational>>>(
          gold.opinions.size()));
  for (std::size_t i = 0; i < pred.opinions.size(); ++i)
    for (std::size_t j = 0; j < gold.opinions.size(); ++j)
      w[i][j] = oracle_weight(pred.opinions[i], gold.opinions[j], pred,
                              require_polarity);
  std::vector<bool> used(gold.opinions.size(), false);
  Rational best_total(-1), best_p, best_r;
  oracle_enumerate(w, 0, used, Rational(0), Rational(0), Rational(0),
                   best_total, best_p, best_r);
  out.sum_p = best_p;
  out.sum_r = best_r;
  return out;
}

struct OraclePrf {
  double precision = 0, recall = 0, f1 = 0;
};

inline OraclePrf oracle_sentiment_graph_f1(const Treebank& pred,
                                           const Treebank& gold,
                                           bool require_polarity) {
  Rational sum_p, sum_r;
  std::int64_t n_pred = 0, n_gold = 0;
  for (std::size_t i = 0; i < pred.sentences.size(); ++i) {
    const OracleScore s =
        oracle_sentence(pred.sentences[i], gold.sentences[i], require_polarity);
    sum_p += s.sum_p;
    sum_r += s.sum_r;
    n_pred += s.predicted;
    n_gold += s.gold;
  }
  const Rational precision =
      n_pred == 0 ? Rational(n_gold == 0 ? 1 : 0) : sum_p / Rational(n_pred);
  const Rational recall =
      n_gold == 0 ? Rational(n_pred == 0 ? 1 : 0) : sum_r / Rational(n_gold);
  const Rational denom = precision + recall;
  const Rational f1 = denom == Rational(0)
                          ? Rational(0)
                          : Rational(2) * precision * recall / denom;
  return {precision.to_double(), recall.to_double(), f1.to_double()};
}

}  // namespace sentigraph::testing
