// Times the serial reference path against the OpenMP path of each
// per-sentence kernel on a synthetic treebank, checking that both produce
// identical results while reporting the speedup.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "sentigraph/codec.hpp"
#include "sentigraph/embeddings.hpp"
#include "sentigraph/metrics.hpp"
#include "sentigraph/rng.hpp"
#include "sentigraph/trainer.hpp"
#include "sentigraph/treebank_ops.hpp"

namespace sg = sentigraph;

namespace {

sg::Treebank synthetic_treebank(int n_sentences, sg::Rng& rng) {
  static const char* kWords[] = {"the",   "hotel", "room",    "staff", "was",
                                 "very",  "clean", "friendly", "awful", "loved",
                                 "hated", "we",    "they",    "nice",  "price"};
  sg::Treebank t;
  t.name = "bench";
  for (int i = 0; i < n_sentences; ++i) {
    const int n_tokens = 6 + static_cast<int>(rng.below(10));
    std::string text;
    for (int k = 0; k < n_tokens; ++k) {
      if (k) text += ' ';
      text += kWords[rng.below(std::size(kWords))];
    }
    sg::Sentence s = sg::make_sentence("b" + std::to_string(i), text);

    // One or two expression-rooted opinions over disjoint token ranges.
    const int n_ops = 1 + static_cast<int>(rng.below(2));
    int cursor = 0;
    for (int k = 0; k < n_ops && cursor + 3 <= n_tokens; ++k) {
      sg::Opinion op;
      const auto frag = [&](int a, int b) {
        sg::Span sp;
        const auto& ta = s.tokens[a];
        const auto& tz = s.tokens[b];
        // ASCII data: byte offsets equal code point offsets.
        sp.fragments.push_back(
            {text.substr(ta.start, tz.end - ta.start), ta.start, tz.end});
        return sp;
      };
      op.expression = frag(cursor, cursor);
      op.target = frag(cursor + 1, cursor + 2);
      op.polarity = rng.below(2) ? sg::Polarity::Positive : sg::Polarity::Negative;
      s.opinions.push_back(op);
      cursor += 3;
    }
    t.sentences.push_back(std::move(s));
  }
  return t;
}

double time_of(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void row(const char* name, double serial, double openmp, bool identical) {
  std::printf("%-24s %10.3fs %10.3fs %8.2fx   %s\n", name, serial, openmp,
              serial / openmp, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int n_sentences = argc > 1 ? std::atoi(argv[1]) : 20000;
  sg::Rng rng(7);
  const sg::Treebank tb = synthetic_treebank(n_sentences, rng);
  std::printf("synthetic treebank: %zu sentences, %d threads\n",
              tb.sentences.size(), omp_get_max_threads());
  std::printf("%-24s %11s %11s %9s\n", "kernel", "serial", "openmp", "speedup");

  std::vector<sg::DepGraph> graphs_serial, graphs_omp;
  const double enc_s = time_of([&] {
    graphs_serial = sg::encode_treebank(tb, sg::Mode::HeadFinal, {}, sg::Exec::Serial);
  });
  const double enc_p = time_of([&] {
    graphs_omp = sg::encode_treebank(tb, sg::Mode::HeadFinal, {}, sg::Exec::OpenMP);
  });
  bool same = graphs_serial.size() == graphs_omp.size();
  for (std::size_t i = 0; same && i < graphs_serial.size(); ++i)
    same = graphs_serial[i].edges.size() == graphs_omp[i].edges.size();
  row("encode", enc_s, enc_p, same);

  sg::EvalReport eval_serial, eval_omp;
  const double ev_s = time_of(
      [&] { eval_serial = sg::sentiment_graph_f1(tb, tb, true, sg::Exec::Serial); });
  const double ev_p = time_of(
      [&] { eval_omp = sg::sentiment_graph_f1(tb, tb, true, sg::Exec::OpenMP); });
  row("sentiment_graph_f1", ev_s, ev_p,
      eval_serial.overall.f1 == eval_omp.overall.f1);

  sg::LexiconLoad lex = sg::load_lexicon("hotel\thotela\nroom\tgela\n", false);
  sg::TranslationResult tr_serial, tr_omp;
  const double tl_s = time_of(
      [&] { tr_serial = sg::translate_word_level(tb, lex.lexicon, sg::Exec::Serial); });
  const double tl_p = time_of(
      [&] { tr_omp = sg::translate_word_level(tb, lex.lexicon, sg::Exec::OpenMP); });
  row("translate", tl_s, tl_p, tr_serial.translated == tr_omp.translated);

  // A small trained model over a slice, then batch prediction.
  sg::Treebank small;
  small.name = tb.name;
  small.sentences.assign(tb.sentences.begin(), tb.sentences.begin() + 16);
  sg::Hyperparams hp;
  hp.embedding_dim = 32;
  hp.recurrent_hidden_dim = 48;
  hp.recurrent_layers = 1;
  hp.projection_dim_edge = 48;
  hp.projection_dim_label = 24;
  hp.dropout_rate = 0.0;
  hp.max_epochs = 30;
  hp.patience = 30;
  const auto provider = sg::EmbeddingProvider::trainable();
  const auto trained = sg::train(small, small, hp, provider);

  std::vector<sg::DepGraph> pred_serial, pred_omp;
  const double pd_s = time_of([&] {
    pred_serial = sg::predict_treebank(trained.model, tb, provider, sg::Exec::Serial);
  });
  const double pd_p = time_of([&] {
    pred_omp = sg::predict_treebank(trained.model, tb, provider, sg::Exec::OpenMP);
  });
  same = pred_serial.size() == pred_omp.size();
  for (std::size_t i = 0; same && i < pred_serial.size(); ++i) {
    same = pred_serial[i].edges.size() == pred_omp[i].edges.size();
    for (std::size_t k = 0; same && k < pred_serial[i].edges.size(); ++k) {
      const auto& a = pred_serial[i].edges[k];
      const auto& b = pred_omp[i].edges[k];
      same = a.head == b.head && a.dep == b.dep && a.label == b.label;
    }
  }
  row("predict", pd_s, pd_p, same);
  return 0;
}
