#include <doctest.h>

#include <cmath>

#include "sentigraph/metrics.hpp"
#include "support/fixtures.hpp"

using namespace sentigraph;
namespace tt = sentigraph::testing;

namespace {

Treebank single(const Sentence& s, const char* name) {
  Treebank t;
  t.name = name;
  t.sentences.push_back(s);
  return t;
}

}  // namespace

TEST_CASE("tuple_weight") {
  const Sentence s = make_sentence("w", "a b c d e f g h");

  SUBCASE("identical opinions weigh (1, 1)") {
    Opinion op;
    op.holder = tt::span_over(s, {1});
    op.target = tt::span_over(s, {2, 3});
    op.expression = tt::span_over(s, {4, 5});
    op.polarity = Polarity::Positive;
    const auto w = tuple_weight(op, op, s, true);
    REQUIRE(w.has_value());
    CHECK(w->first == Rational(1));
    CHECK(w->second == Rational(1));
  }

  SUBCASE("partial expression overlap: p = 1, r = 5/6") {
    Opinion gold;
    gold.holder = tt::span_over(s, {1});
    gold.target = tt::span_over(s, {2, 3});
    gold.expression = tt::span_over(s, {4, 5});
    gold.polarity = Polarity::Negative;
    Opinion pred = gold;
    pred.expression = tt::span_over(s, {4});  // 1 of gold's 2 tokens
    const auto w = tuple_weight(pred, gold, s, true);
    REQUIRE(w.has_value());
    CHECK(w->first == Rational(1));
    CHECK(w->second == Rational(5, 6));
  }

  SUBCASE("polarity mismatch blocks the pair when required") {
    Opinion a;
    a.expression = tt::span_over(s, {1});
    a.polarity = Polarity::Positive;
    Opinion b = a;
    b.polarity = Polarity::Negative;
    CHECK(!tuple_weight(a, b, s, true).has_value());
    CHECK(tuple_weight(a, b, s, false).has_value());
  }

  SUBCASE("one-side-empty element blocks the pair") {
    Opinion a;
    a.expression = tt::span_over(s, {1});
    a.holder = tt::span_over(s, {2});
    a.polarity = Polarity::Neutral;
    Opinion b = a;
    b.holder = Span{};
    CHECK(!tuple_weight(a, b, s, true).has_value());
  }
}

TEST_CASE("sentiment_graph_f1 basics") {
  Rng rng(21);
  SUBCASE("identical treebanks score 1 everywhere") {
    const auto t = tt::random_roundtrip_treebank(rng, "id", 30);
    const EvalReport r = sentiment_graph_f1(t, t);
    CHECK(r.overall.precision == 1.0);
    CHECK(r.overall.recall == 1.0);
    CHECK(r.overall.f1 == 1.0);
  }
  SUBCASE("empty predictions against non-empty gold score 0") {
    auto gold = tt::random_roundtrip_treebank(rng, "g", 20);
    bool has_opinions = false;
    for (const auto& s : gold.sentences)
      has_opinions = has_opinions || !s.opinions.empty();
    if (!has_opinions) {
      Sentence s = make_sentence("extra", "x y");
      Opinion op;
      op.expression = tt::span_over(s, {2});
      s.opinions.push_back(op);
      gold.sentences.push_back(s);
    }
    Treebank pred = gold;
    for (auto& s : pred.sentences) s.opinions.clear();
    const EvalReport r = sentiment_graph_f1(pred, gold);
    CHECK(r.overall.precision == 0.0);
    CHECK(r.overall.recall == 0.0);
    CHECK(r.overall.f1 == 0.0);
  }
  SUBCASE("both empty scores 1 by convention") {
    Treebank t = single(make_sentence("e", "a b"), "e");
    const EvalReport r = sentiment_graph_f1(t, t);
    CHECK(r.overall.precision == 1.0);
    CHECK(r.overall.recall == 1.0);
    CHECK(r.overall.f1 == 1.0);
  }
  SUBCASE("mismatched treebanks are rejected") {
    const Treebank a = single(make_sentence("x", "a b"), "a");
    const Treebank b = single(make_sentence("y", "a b"), "b");
    CHECK_THROWS_AS(sentiment_graph_f1(a, b), Error);
  }
}

TEST_CASE("sentiment_graph_f1 equals the brute-force oracle") {
  Rng rng(31);
  for (int round = 0; round < 300; ++round) {
    const auto inst = tt::random_metric_instance(rng, 1);
    for (const bool require_polarity : {true, false}) {
      const EvalReport impl =
          sentiment_graph_f1(inst.pred, inst.gold, require_polarity);
      const tt::OraclePrf oracle =
          tt::oracle_sentiment_graph_f1(inst.pred, inst.gold, require_polarity);
      CHECK(std::abs(impl.overall.precision - oracle.precision) <= 1e-9);
      CHECK(std::abs(impl.overall.recall - oracle.recall) <= 1e-9);
      CHECK(std::abs(impl.overall.f1 - oracle.f1) <= 1e-9);
    }
  }
}

TEST_CASE("duality: precision(pred, gold) == recall(gold, pred)") {
  Rng rng(41);
  for (int round = 0; round < 200; ++round) {
    const auto inst = tt::random_metric_instance(rng, 2);
    const EvalReport ab = sentiment_graph_f1(inst.pred, inst.gold);
    const EvalReport ba = sentiment_graph_f1(inst.gold, inst.pred);
    CHECK(ab.overall.precision == ba.overall.recall);
    CHECK(ab.overall.recall == ba.overall.precision);
  }
}

TEST_CASE("adding an unmatchable prediction never raises precision") {
  Rng rng(51);
  for (int round = 0; round < 100; ++round) {
    auto inst = tt::random_metric_instance(rng, 1, 10, 3);
    const double before =
        sentiment_graph_f1(inst.pred, inst.gold).overall.precision;
    // The spurious tuple's expression overlaps no gold expression.
    Sentence& ps = inst.pred.sentences[0];
    std::vector<bool> used(ps.tokens.size() + 1, false);
    for (const auto& op : inst.gold.sentences[0].opinions)
      for (int idx : align_span_to_tokens(op.expression, inst.gold.sentences[0]))
        used[static_cast<std::size_t>(idx)] = true;
    int free_token = 0;
    for (std::size_t i = 1; i < used.size(); ++i)
      if (!used[i]) free_token = static_cast<int>(i);
    if (free_token == 0) continue;
    Opinion spurious;
    spurious.expression = tt::span_over(ps, {free_token});
    spurious.polarity = Polarity::Neutral;
    ps.opinions.push_back(spurious);
    const double after =
        sentiment_graph_f1(inst.pred, inst.gold).overall.precision;
    CHECK(after <= before + 1e-12);
  }
}

TEST_CASE("reported values stay in range") {
  Rng rng(61);
  for (int round = 0; round < 100; ++round) {
    const auto inst = tt::random_metric_instance(rng, 3);
    const EvalReport r = sentiment_graph_f1(inst.pred, inst.gold);
    for (const Prf* p : {&r.overall, &r.holder, &r.target, &r.expression}) {
      CHECK(p->precision >= 0.0);
      CHECK(p->precision <= 1.0);
      CHECK(p->recall >= 0.0);
      CHECK(p->recall <= 1.0);
      CHECK(p->f1 >= 0.0);
      CHECK(p->f1 <= 1.0);
      if (p->f1 > 0.0) {
        CHECK(p->f1 >= std::min(p->precision, p->recall) - 1e-12);
        CHECK(p->f1 <= std::max(p->precision, p->recall) + 1e-12);
      }
    }
  }
}

TEST_CASE("edge_micro_f1") {
  SUBCASE("identical graphs score 1") {
    DepGraph g;
    g.n = 3;
    g.edges = {{0, 2, "exp:Positive"}, {2, 1, "hold"}};
    const EvalReport r = edge_micro_f1({g}, {g});
    CHECK(r.overall.precision == 1.0);
    CHECK(r.overall.recall == 1.0);
    CHECK(r.overall.f1 == 1.0);
  }
  SUBCASE("two spurious edges halve precision") {
    DepGraph gold;
    gold.n = 5;
    gold.edges = {{0, 2, "exp:Positive"}, {2, 1, "hold"}};
    DepGraph pred = gold;
    pred.edges.push_back({2, 3, "targ"});
    pred.edges.push_back({2, 4, "targ"});
    const EvalReport r = edge_micro_f1({pred}, {gold});
    CHECK(r.overall.precision == 0.5);
    CHECK(r.overall.recall == 1.0);
    CHECK(r.overall.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("unlabeled scoring forgives wrong labels") {
    DepGraph gold;
    gold.n = 3;
    gold.edges = {{0, 1, "exp:Positive"}, {1, 2, "targ"}};
    DepGraph pred = gold;
    pred.edges[1].label = "hold";
    CHECK(edge_micro_f1({pred}, {gold}, true).overall.f1 == 0.5);
    CHECK(edge_micro_f1({pred}, {gold}, false).overall.f1 == 1.0);
  }
  SUBCASE("unlabeled F1 dominates labeled F1 on fuzzed graphs") {
    Rng rng(71);
    for (int round = 0; round < 100; ++round) {
      const auto inst = tt::random_metric_instance(rng, 2);
      std::vector<DepGraph> pred, gold;
      for (std::size_t i = 0; i < inst.pred.sentences.size(); ++i) {
        pred.push_back(encode(inst.pred.sentences[i], Mode::HeadFinal, {true}));
        gold.push_back(encode(inst.gold.sentences[i], Mode::HeadFinal, {true}));
      }
      const double labeled = edge_micro_f1(pred, gold, true).overall.f1;
      const double unlabeled = edge_micro_f1(pred, gold, false).overall.f1;
      CHECK(unlabeled >= labeled - 1e-12);
    }
  }
  SUBCASE("duality holds for edges too") {
    Rng rng(81);
    const auto inst = tt::random_metric_instance(rng, 5);
    std::vector<DepGraph> pred, gold;
    for (std::size_t i = 0; i < inst.pred.sentences.size(); ++i) {
      pred.push_back(encode(inst.pred.sentences[i], Mode::HeadFinal, {true}));
      gold.push_back(encode(inst.gold.sentences[i], Mode::HeadFinal, {true}));
    }
    const EvalReport ab = edge_micro_f1(pred, gold);
    const EvalReport ba = edge_micro_f1(gold, pred);
    CHECK(ab.overall.precision == ba.overall.recall);
    CHECK(ab.overall.recall == ba.overall.precision);
  }
}

TEST_CASE("span_f1") {
  const Sentence base = make_sentence("s", "a b c d e f");

  SUBCASE("identical treebanks score 1") {
    Sentence s = base;
    Opinion op;
    op.expression = tt::span_over(s, {1});
    op.holder = tt::span_over(s, {2});
    op.target = tt::span_over(s, {3, 4});
    s.opinions.push_back(op);
    const Treebank t = single(s, "t");
    for (const auto element : {SpanElement::Holder, SpanElement::Target,
                               SpanElement::Expression}) {
      const EvalReport r = span_f1(t, t, element);
      CHECK(r.overall.f1 == 1.0);
    }
  }

  SUBCASE("missing holders give zero recall") {
    Sentence gold_s = base;
    Opinion op;
    op.expression = tt::span_over(gold_s, {1});
    op.holder = tt::span_over(gold_s, {2});
    gold_s.opinions.push_back(op);
    Sentence pred_s = gold_s;
    pred_s.opinions[0].holder = Span{};
    const EvalReport r =
        span_f1(single(pred_s, "p"), single(gold_s, "g"), SpanElement::Holder);
    CHECK(r.overall.recall == 0.0);
  }

  SUBCASE("half overlap halves precision") {
    Sentence gold_s = base;
    Opinion op;
    op.expression = tt::span_over(gold_s, {5});
    op.target = tt::span_over(gold_s, {1, 2});
    gold_s.opinions.push_back(op);
    Sentence pred_s = gold_s;
    pred_s.opinions[0].target = tt::span_over(pred_s, {2, 3});
    const EvalReport r =
        span_f1(single(pred_s, "p"), single(gold_s, "g"), SpanElement::Target);
    CHECK(r.overall.precision == 0.5);
    CHECK(r.overall.recall == 0.5);
  }
}

TEST_CASE("metric kernels: serial and openmp agree bitwise") {
  Rng rng(91);
  const auto inst = tt::random_metric_instance(rng, 120);
  const EvalReport a = sentiment_graph_f1(inst.pred, inst.gold, true, Exec::Serial);
  const EvalReport b = sentiment_graph_f1(inst.pred, inst.gold, true, Exec::OpenMP);
  CHECK(a.overall.precision == b.overall.precision);
  CHECK(a.overall.recall == b.overall.recall);
  CHECK(a.overall.f1 == b.overall.f1);
  CHECK(a.holder.f1 == b.holder.f1);
  CHECK(a.target.f1 == b.target.f1);
  CHECK(a.expression.f1 == b.expression.f1);
}
