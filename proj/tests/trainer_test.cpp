#include <doctest.h>

#include "sentigraph/checkpoint.hpp"
#include "sentigraph/trainer.hpp"
#include "support/fixtures.hpp"

using namespace sentigraph;
namespace tt = sentigraph::testing;

namespace {

// Eight tiny sentences with consistent word roles; enough to overfit fast.
Treebank mini_treebank() {
  struct Row {
    const char* text;
    int holder;      // token index or 0
    int target_a, target_b;
    int expr;
    Polarity pol;
  };
  const Row rows[] = {
      {"I loved the room", 1, 3, 4, 2, Polarity::Positive},
      {"we hated the pool", 1, 3, 4, 2, Polarity::Negative},
      {"they liked the staff", 1, 3, 4, 2, Polarity::Positive},
      {"I hated the breakfast", 1, 3, 4, 2, Polarity::Negative},
      {"we loved the view", 1, 3, 4, 2, Polarity::Positive},
      {"the service was fine", 0, 1, 2, 4, Polarity::Neutral},
      {"the price was awful", 0, 1, 2, 4, Polarity::Negative},
      {"I liked the garden", 1, 3, 4, 2, Polarity::Positive},
  };
  Treebank t;
  t.name = "mini";
  int i = 0;
  for (const Row& row : rows) {
    Sentence s = make_sentence("mini-" + std::to_string(i++), row.text);
    Opinion op;
    if (row.holder) op.holder = tt::span_over(s, {row.holder});
    op.target = tt::span_over(s, {row.target_a, row.target_b});
    op.expression = tt::span_over(s, {row.expr});
    op.polarity = row.pol;
    s.opinions.push_back(op);
    t.sentences.push_back(std::move(s));
  }
  return t;
}

Hyperparams mini_hp() {
  Hyperparams hp;
  hp.embedding_dim = 16;
  hp.recurrent_hidden_dim = 24;
  hp.recurrent_layers = 1;
  hp.projection_dim_edge = 24;
  hp.projection_dim_label = 12;
  hp.dropout_rate = 0.0;
  hp.learning_rate = 5e-3;
  hp.max_epochs = 200;
  hp.patience = 200;
  hp.batch_size = 4;
  hp.seed = 1;
  return hp;
}

}  // namespace

TEST_CASE("training overfits a mini treebank") {
  const Treebank t = mini_treebank();
  const auto provider = EmbeddingProvider::trainable();
  const TrainResult result = train(t, t, mini_hp(), provider);
  CHECK(result.converged);
  CHECK(result.best_f1 >= 0.99);

  // The overfitted model reproduces its own training graphs.
  const auto gold = encode_treebank(t, Mode::HeadFinal);
  const auto pred = predict_treebank(result.model, t, provider);
  const EvalReport r = edge_micro_f1(pred, gold, true);
  CHECK(r.overall.f1 >= 0.99);
}

TEST_CASE("training is deterministic under a fixed seed") {
  const Treebank t = mini_treebank();
  Hyperparams hp = mini_hp();
  hp.max_epochs = 12;
  hp.patience = 12;
  const auto provider = EmbeddingProvider::trainable();
  TrainOptions opts;
  opts.log_timing = false;

  const TrainResult a = train(t, t, hp, provider, opts);
  const TrainResult b = train(t, t, hp, provider, opts);
  CHECK(save_checkpoint(a.model) == save_checkpoint(b.model));
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.log[i].dev_f1 == b.log[i].dev_f1);
  }

  // Serial and OpenMP training produce identical checkpoints too.
  TrainOptions serial = opts;
  serial.exec = Exec::Serial;
  const TrainResult c = train(t, t, hp, provider, serial);
  CHECK(save_checkpoint(a.model) == save_checkpoint(c.model));
}

TEST_CASE("a zero learning rate never converges") {
  const Treebank t = mini_treebank();
  Hyperparams hp = mini_hp();
  hp.learning_rate = 0.0;
  hp.max_epochs = 5;
  const TrainResult result = train(t, t, hp, EmbeddingProvider::trainable());
  CHECK(!result.converged);
  for (const auto& e : result.log) CHECK(e.dev_f1 == 0.0);
}

TEST_CASE("empty treebanks are rejected") {
  Treebank empty;
  const Treebank t = mini_treebank();
  CHECK_THROWS_AS(train(empty, t, mini_hp(), EmbeddingProvider::trainable()),
                  Error);
  CHECK_THROWS_AS(train(t, empty, mini_hp(), EmbeddingProvider::trainable()),
                  Error);
}

TEST_CASE("loss decreases over the first epochs") {
  const Treebank t = mini_treebank();
  Hyperparams hp = mini_hp();
  hp.max_epochs = 10;
  hp.patience = 10;
  const TrainResult result = train(t, t, hp, EmbeddingProvider::trainable());
  REQUIRE(result.log.size() == 10);
  int violations = 0;
  for (std::size_t i = 1; i < result.log.size(); ++i)
    if (result.log[i].train_loss > result.log[i - 1].train_loss + 1e-3)
      ++violations;
  CHECK(violations <= 2);
}

TEST_CASE("external embedding files drive training end to end") {
  const Treebank t = mini_treebank();

  // Distinct fixed vectors per (sentence, token): a stand-in for the
  // contextual encoders the architecture was designed around.
  const int dim = 12;
  std::vector<EmbeddingRecord> records;
  Rng rng(17);
  for (const auto& s : t.sentences)
    for (const auto& tok : s.tokens) {
      EmbeddingRecord rec;
      rec.sent_id = s.sent_id;
      rec.token_index = tok.index;
      rec.value = Vector(dim);
      for (int d = 0; d < dim; ++d) rec.value(d) = rng.uniform(-1, 1);
      records.push_back(std::move(rec));
    }
  const std::string bytes = write_embedding_bytes(dim, records);
  const EmbeddingProvider provider = EmbeddingProvider::from_bytes(bytes);
  CHECK(provider.external());
  CHECK(provider.dim() == dim);

  Hyperparams hp = mini_hp();
  hp.embedding_dim = dim;
  hp.learning_rate = 5e-3;
  hp.max_epochs = 150;
  hp.patience = 150;
  const TrainResult result = train(t, t, hp, provider);
  CHECK(result.converged);
  CHECK(result.best_f1 >= 0.99);

  SUBCASE("missing vectors are reported") {
    Treebank other = t;
    other.sentences[0].sent_id = "unknown-id";
    CHECK_THROWS_AS(predict_treebank(result.model, other, provider), Error);
  }
  SUBCASE("a dimension mismatch is rejected up front") {
    Hyperparams bad = hp;
    bad.embedding_dim = dim + 1;
    CHECK_THROWS_AS(train(t, t, bad, provider), Error);
  }
  SUBCASE("prediction needs the file when the model was trained with one") {
    CHECK_THROWS_AS(
        predict_treebank(result.model, t, EmbeddingProvider::trainable()),
        Error);
  }
}
