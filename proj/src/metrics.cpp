#include "sentigraph/metrics.hpp"

#include <algorithm>
#include <array>

namespace sentigraph {

namespace {

constexpr int kHolder = 0;
constexpr int kTarget = 1;
constexpr int kExpression = 2;

struct AlignedTuple {
  std::array<std::vector<int>, 3> elems;  // holder, target, expression
  Polarity polarity = Polarity::Neutral;
};

AlignedTuple align_tuple(const Opinion& op, const Sentence& s) {
  AlignedTuple t;
  t.elems[kHolder] = align_span_to_tokens(op.holder, s);
  t.elems[kTarget] = align_span_to_tokens(op.target, s);
  t.elems[kExpression] = align_span_to_tokens(op.expression, s);
  t.polarity = op.polarity;
  return t;
}

int intersection_size(const std::vector<int>& a, const std::vector<int>& b) {
  int n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) ++ia;
    else if (*ib < *ia) ++ib;
    else { ++n; ++ia; ++ib; }
  }
  return n;
}

std::optional<std::pair<Rational, Rational>> weigh(const AlignedTuple& pred,
                                                   const AlignedTuple& gold,
                                                   bool require_polarity) {
  if (require_polarity && pred.polarity != gold.polarity) return std::nullopt;
  Rational p_sum, r_sum;
  for (int e = 0; e < 3; ++e) {
    const auto& pe = pred.elems[e];
    const auto& ge = gold.elems[e];
    if (pe.empty() && ge.empty()) {
      p_sum += 1;
      r_sum += 1;
      continue;
    }
    const int inter = intersection_size(pe, ge);
    if (inter == 0) return std::nullopt;  // covers the one-side-empty case
    p_sum += Rational(inter, static_cast<long long>(pe.size()));
    r_sum += Rational(inter, static_cast<long long>(ge.size()));
  }
  return std::pair{p_sum / 3, r_sum / 3};
}

struct MatchValue {
  Rational total;
  Rational secondary;

  bool operator>(const MatchValue& o) const {
    if (total != o.total) return o.total < total;
    return o.secondary < secondary;
  }
};

// Maximum total weight over one-to-one matchings, and among the maximizers the
// maximum achievable secondary mass. Reporting the best precision mass and the
// best recall mass separately keeps precision(pred,gold) == recall(gold,pred)
// exact even when several matchings tie on total weight.
MatchValue best_assignment(
    std::size_t n_rows, std::size_t n_cols,
    const std::vector<std::vector<std::optional<std::pair<Rational, Rational>>>>&
        weights,
    bool secondary_is_precision) {
  const bool mask_cols = n_cols <= n_rows;
  const std::size_t iter_n = mask_cols ? n_rows : n_cols;
  const std::size_t mask_n = mask_cols ? n_cols : n_rows;
  if (mask_n > 24 || (iter_n + 1) * (1ull << mask_n) > (1ull << 24))
    throw Error(Errc::TREEBANK_MISMATCH,
                "too many opinions in one sentence for exact matching");

  auto weight_at = [&](std::size_t it, std::size_t mk)
      -> const std::optional<std::pair<Rational, Rational>>& {
    return mask_cols ? weights[it][mk] : weights[mk][it];
  };

  const std::size_t n_masks = 1ull << mask_n;
  std::vector<std::vector<MatchValue>> dp(iter_n + 1,
                                          std::vector<MatchValue>(n_masks));
  for (std::size_t i = iter_n; i-- > 0;) {
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      MatchValue best = dp[i + 1][mask];  // leave row i unmatched
      for (std::size_t s = 0; s < mask_n; ++s) {
        if (mask & (1ull << s)) continue;
        const auto& w = weight_at(i, s);
        if (!w) continue;
        MatchValue cand = dp[i + 1][mask | (1ull << s)];
        cand.total += w->first + w->second;
        cand.secondary += secondary_is_precision ? w->first : w->second;
        if (cand > best) best = cand;
      }
      dp[i][mask] = std::move(best);
    }
  }
  return dp[0][0];
}

struct SentencePartial {
  Rational sum_p;
  Rational sum_r;
  std::int64_t predicted = 0;
  std::int64_t gold = 0;
};

void check_aligned(const Treebank& pred, const Treebank& gold) {
  if (pred.sentences.size() != gold.sentences.size())
    throw Error(Errc::TREEBANK_MISMATCH,
                "sentence counts differ: " +
                    std::to_string(pred.sentences.size()) + " vs " +
                    std::to_string(gold.sentences.size()));
  for (std::size_t i = 0; i < pred.sentences.size(); ++i) {
    const auto& p = pred.sentences[i];
    const auto& g = gold.sentences[i];
    if (p.sent_id != g.sent_id)
      throw Error(Errc::TREEBANK_MISMATCH,
                  "sentence " + std::to_string(i) + ": sent_id '" + p.sent_id +
                      "' vs '" + g.sent_id + "'");
    if (p.tokens.size() != g.tokens.size())
      throw Error(Errc::TREEBANK_MISMATCH,
                  "sentence " + p.sent_id + ": token counts differ");
  }
}

Prf finalize(const Rational& sum_p, const Rational& sum_r,
             std::int64_t predicted, std::int64_t gold) {
  Rational precision = predicted == 0 ? Rational(gold == 0 ? 1 : 0)
                                      : sum_p / Rational(predicted);
  Rational recall =
      gold == 0 ? Rational(predicted == 0 ? 1 : 0) : sum_r / Rational(gold);
  Rational denom = precision + recall;
  Rational f1 = denom == Rational(0)
                    ? Rational(0)
                    : Rational(2) * precision * recall / denom;
  return {precision.to_double(), recall.to_double(), f1.to_double()};
}

SentencePartial score_sentence_tuples(const Sentence& pred,
                                      const Sentence& gold,
                                      bool require_polarity) {
  SentencePartial out;
  out.predicted = static_cast<std::int64_t>(pred.opinions.size());
  out.gold = static_cast<std::int64_t>(gold.opinions.size());
  if (pred.opinions.empty() || gold.opinions.empty()) return out;

  std::vector<AlignedTuple> ps, gs;
  for (const auto& op : pred.opinions) ps.push_back(align_tuple(op, pred));
  for (const auto& op : gold.opinions) gs.push_back(align_tuple(op, gold));

  std::vector<std::vector<std::optional<std::pair<Rational, Rational>>>> w(
      ps.size(),
      std::vector<std::optional<std::pair<Rational, Rational>>>(gs.size()));
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = 0; j < gs.size(); ++j)
      w[i][j] = weigh(ps[i], gs[j], require_polarity);

  out.sum_p = best_assignment(ps.size(), gs.size(), w, true).secondary;
  out.sum_r = best_assignment(ps.size(), gs.size(), w, false).secondary;
  return out;
}

SentencePartial score_sentence_element(const Sentence& pred,
                                       const Sentence& gold, int element) {
  SentencePartial out;
  std::vector<std::vector<int>> ps, gs;
  for (const auto& op : pred.opinions) {
    auto t = align_tuple(op, pred);
    if (!t.elems[element].empty()) ps.push_back(std::move(t.elems[element]));
  }
  for (const auto& op : gold.opinions) {
    auto t = align_tuple(op, gold);
    if (!t.elems[element].empty()) gs.push_back(std::move(t.elems[element]));
  }
  out.predicted = static_cast<std::int64_t>(ps.size());
  out.gold = static_cast<std::int64_t>(gs.size());
  if (ps.empty() || gs.empty()) return out;

  std::vector<std::vector<std::optional<std::pair<Rational, Rational>>>> w(
      ps.size(),
      std::vector<std::optional<std::pair<Rational, Rational>>>(gs.size()));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = 0; j < gs.size(); ++j) {
      const int inter = intersection_size(ps[i], gs[j]);
      if (inter == 0) continue;
      w[i][j] = std::pair{Rational(inter, static_cast<long long>(ps[i].size())),
                          Rational(inter, static_cast<long long>(gs[j].size()))};
    }
  }
  out.sum_p = best_assignment(ps.size(), gs.size(), w, true).secondary;
  out.sum_r = best_assignment(ps.size(), gs.size(), w, false).secondary;
  return out;
}

Prf aggregate(const std::vector<SentencePartial>& partials) {
  Rational sum_p, sum_r;
  std::int64_t predicted = 0, gold = 0;
  for (const auto& part : partials) {
    sum_p += part.sum_p;
    sum_r += part.sum_r;
    predicted += part.predicted;
    gold += part.gold;
  }
  return finalize(sum_p, sum_r, predicted, gold);
}

}  // namespace

std::optional<std::pair<Rational, Rational>> tuple_weight(
    const Opinion& pred, const Opinion& gold, const Sentence& sentence,
    bool require_polarity) {
  return weigh(align_tuple(pred, sentence), align_tuple(gold, sentence),
               require_polarity);
}

EvalReport sentiment_graph_f1(const Treebank& pred, const Treebank& gold,
                              bool require_polarity, Exec exec) {
  check_aligned(pred, gold);
  const std::int64_t n = static_cast<std::int64_t>(pred.sentences.size());
  std::vector<SentencePartial> tuples(n);
  std::array<std::vector<SentencePartial>, 3> elements;
  for (auto& v : elements) v.resize(n);

  std::vector<std::string> errors(n);
  for_each_index(n, exec, [&](std::int64_t i) {
    try {
      tuples[i] = score_sentence_tuples(pred.sentences[i], gold.sentences[i],
                                        require_polarity);
      for (int e = 0; e < 3; ++e)
        elements[e][i] =
            score_sentence_element(pred.sentences[i], gold.sentences[i], e);
    } catch (const Error& err) {
      errors[i] = err.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw Error(Errc::TREEBANK_MISMATCH, e);

  EvalReport report;
  Rational sum_p, sum_r;
  for (const auto& part : tuples) {
    sum_p += part.sum_p;
    sum_r += part.sum_r;
    report.predicted_count += part.predicted;
    report.gold_count += part.gold;
  }
  report.overall =
      finalize(sum_p, sum_r, report.predicted_count, report.gold_count);
  report.weighted_tp_precision = sum_p.to_double();
  report.weighted_tp_recall = sum_r.to_double();
  report.holder = aggregate(elements[kHolder]);
  report.target = aggregate(elements[kTarget]);
  report.expression = aggregate(elements[kExpression]);
  return report;
}

EvalReport edge_micro_f1(const std::vector<DepGraph>& pred,
                         const std::vector<DepGraph>& gold, bool labeled,
                         Exec exec) {
  if (pred.size() != gold.size())
    throw Error(Errc::TREEBANK_MISMATCH, "graph list lengths differ");
  const std::int64_t n = static_cast<std::int64_t>(pred.size());
  std::vector<std::array<std::int64_t, 3>> partial(n);  // inter, #pred, #gold
  std::vector<std::string> errors(n);
  for_each_index(n, exec, [&](std::int64_t i) {
    if (pred[i].n != gold[i].n) {
      errors[i] = "sentence " + std::to_string(i) + ": token counts differ";
      return;
    }
    auto items = [&](const DepGraph& g) {
      std::vector<std::tuple<int, int, std::string>> v;
      v.reserve(g.edges.size());
      for (const auto& e : g.edges)
        v.emplace_back(e.head, e.dep, labeled ? e.label : std::string());
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      return v;
    };
    const auto a = items(pred[i]);
    const auto b = items(gold[i]);
    std::vector<std::tuple<int, int, std::string>> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::back_inserter(inter));
    partial[i] = {static_cast<std::int64_t>(inter.size()),
                  static_cast<std::int64_t>(a.size()),
                  static_cast<std::int64_t>(b.size())};
  });
  for (const auto& e : errors)
    if (!e.empty()) throw Error(Errc::TREEBANK_MISMATCH, e);

  EvalReport report;
  std::int64_t inter = 0;
  for (const auto& part : partial) {
    inter += part[0];
    report.predicted_count += part[1];
    report.gold_count += part[2];
  }
  report.overall = finalize(Rational(inter), Rational(inter),
                            report.predicted_count, report.gold_count);
  report.weighted_tp_precision = static_cast<double>(inter);
  report.weighted_tp_recall = static_cast<double>(inter);
  return report;
}

EvalReport span_f1(const Treebank& pred, const Treebank& gold,
                   SpanElement element, Exec exec) {
  check_aligned(pred, gold);
  const int e = element == SpanElement::Holder   ? kHolder
                : element == SpanElement::Target ? kTarget
                                                 : kExpression;
  const std::int64_t n = static_cast<std::int64_t>(pred.sentences.size());
  std::vector<SentencePartial> partials(n);
  std::vector<std::string> errors(n);
  for_each_index(n, exec, [&](std::int64_t i) {
    try {
      partials[i] =
          score_sentence_element(pred.sentences[i], gold.sentences[i], e);
    } catch (const Error& err) {
      errors[i] = err.what();
    }
  });
  for (const auto& msg : errors)
    if (!msg.empty()) throw Error(Errc::TREEBANK_MISMATCH, msg);

  EvalReport report;
  Rational sum_p, sum_r;
  for (const auto& part : partials) {
    sum_p += part.sum_p;
    sum_r += part.sum_r;
    report.predicted_count += part.predicted;
    report.gold_count += part.gold;
  }
  report.overall =
      finalize(sum_p, sum_r, report.predicted_count, report.gold_count);
  report.weighted_tp_precision = sum_p.to_double();
  report.weighted_tp_recall = sum_r.to_double();
  Prf& slot = element == SpanElement::Holder   ? report.holder
              : element == SpanElement::Target ? report.target
                                               : report.expression;
  slot = report.overall;
  return report;
}

}  // namespace sentigraph
