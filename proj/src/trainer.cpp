#include "sentigraph/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <omp.h>

namespace sentigraph {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

// Independent deterministic streams: params, batch order and per-sentence
// dropout each get their own derived seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = base;
  std::uint64_t x = splitmix64(s);
  s = x ^ (a + 0x9E3779B97F4A7C15ull);
  x = splitmix64(s);
  s = x ^ (b + 0xBF58476D1CE4E5B9ull);
  return splitmix64(s);
}

struct TensorView {
  double* data;
  std::ptrdiff_t size;
};

std::vector<TensorView> views(ModelParams& p) {
  std::vector<TensorView> v;
  for_each_tensor(p, [&](const std::string&, auto& t) {
    v.push_back({t.data(), t.size()});
  });
  return v;
}

class Adam {
 public:
  Adam(const Hyperparams& hp, int vocab_size)
      : lr_(hp.learning_rate),
        m_(ModelParams::allocate(hp, vocab_size)),
        v_(ModelParams::allocate(hp, vocab_size)) {}

  void step(ModelParams& params, ModelParams& grad) {
    ++t_;
    const double correction1 = 1.0 - std::pow(kBeta1, t_);
    const double correction2 = 1.0 - std::pow(kBeta2, t_);
    auto pv = views(params);
    auto gv = views(grad);
    auto mv = views(m_);
    auto vv = views(v_);
    for (std::size_t k = 0; k < pv.size(); ++k) {
      for (std::ptrdiff_t i = 0; i < pv[k].size; ++i) {
        const double g = gv[k].data[i];
        double& m = mv[k].data[i];
        double& v = vv[k].data[i];
        m = kBeta1 * m + (1.0 - kBeta1) * g;
        v = kBeta2 * v + (1.0 - kBeta2) * g * g;
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        pv[k].data[i] -= lr_ * m_hat / (std::sqrt(v_hat) + kEps);
      }
    }
  }

 private:
  double lr_;
  long t_ = 0;
  ModelParams m_;
  ModelParams v_;
};

void add_scaled(ModelParams& acc, ModelParams& delta, double scale) {
  auto av = views(acc);
  auto dv = views(delta);
  for (std::size_t k = 0; k < av.size(); ++k)
    for (std::ptrdiff_t i = 0; i < av[k].size; ++i)
      av[k].data[i] += scale * dv[k].data[i];
}

struct DevScore {
  double precision = 0, recall = 0, f1 = 0;
};

DevScore evaluate_dev(const Model& model, const Treebank& dev,
                      const std::vector<DepGraph>& dev_gold,
                      const EmbeddingProvider& provider,
                      const TrainOptions& opts) {
  const auto predicted = predict_treebank(model, dev, provider, opts.exec);
  if (opts.select == TrainOptions::Select::SentimentGraphF1) {
    Treebank pred_tb;
    pred_tb.name = dev.name;
    pred_tb.sentences.reserve(dev.sentences.size());
    for (std::size_t i = 0; i < dev.sentences.size(); ++i) {
      Sentence s = dev.sentences[i];
      s.opinions = decode(predicted[i], s).opinions;
      pred_tb.sentences.push_back(std::move(s));
    }
    const EvalReport r = sentiment_graph_f1(pred_tb, dev, true, opts.exec);
    return {r.overall.precision, r.overall.recall, r.overall.f1};
  }
  const EvalReport r = edge_micro_f1(predicted, dev_gold, true, opts.exec);
  return {r.overall.precision, r.overall.recall, r.overall.f1};
}

}  // namespace

TrainResult train(const Treebank& train_tb, const Treebank& dev_tb,
                  const Hyperparams& hp, const EmbeddingProvider& provider,
                  const TrainOptions& opts) {
  hp.validate();
  if (train_tb.sentences.empty())
    throw Error(Errc::EMPTY_TREEBANK, "training treebank is empty");
  if (dev_tb.sentences.empty())
    throw Error(Errc::EMPTY_TREEBANK, "development treebank is empty");
  if (provider.external() && provider.dim() != hp.embedding_dim)
    throw Error(Errc::DIM_MISMATCH,
                "embedding file has dimension " + std::to_string(provider.dim()) +
                    " but embedding_dim is " + std::to_string(hp.embedding_dim));

  // Both treebanks must be encodable (this is the training contract).
  const auto train_gold = encode_treebank(train_tb, opts.mode, {}, opts.exec);
  const auto dev_gold = encode_treebank(dev_tb, opts.mode, {}, opts.exec);

  Vocabulary vocab = provider.external() ? Vocabulary::reserved_only()
                                         : Vocabulary::build(train_tb);
  Model model(hp, std::move(vocab), provider.external());
  Rng init_rng(derive_seed(hp.seed, 0, 0));
  model.init_params(init_rng);
  Rng order_rng(derive_seed(hp.seed, 1, 0));

  const std::size_t n_train = train_tb.sentences.size();
  std::vector<SentenceInput> inputs(n_train);
  for (std::size_t i = 0; i < n_train; ++i)
    inputs[i] = make_input(model, train_tb.sentences[i], provider);

  // Fixed-slot gradient buffers: forward/backward of a wave runs in parallel,
  // the reduction below walks slots in order so results do not depend on the
  // thread count.
  const int n_slots = std::max(
      1, std::min({hp.batch_size, omp_get_max_threads(),
                   opts.exec == Exec::OpenMP ? 8 : 1}));
  std::vector<ModelParams> slot_grads;
  slot_grads.reserve(n_slots);
  for (int i = 0; i < n_slots; ++i)
    slot_grads.push_back(ModelParams::allocate(hp, model.vocab().size()));
  std::vector<double> slot_losses(n_slots, 0.0);
  std::vector<std::string> slot_errors(n_slots);

  ModelParams batch_grad = ModelParams::allocate(hp, model.vocab().size());
  Adam adam(hp, model.vocab().size());

  TrainResult result;
  result.best_f1 = -1.0;
  ModelParams best_params = model.params();
  int epochs_without_improvement = 0;

  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  const auto t_start = std::chrono::steady_clock::now();
  for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;

    for (std::size_t batch_start = 0; batch_start < n_train;
         batch_start += hp.batch_size) {
      const std::size_t batch_end =
          std::min(batch_start + hp.batch_size, n_train);
      const double inv_batch =
          1.0 / static_cast<double>(batch_end - batch_start);
      batch_grad.set_zero();

      for (std::size_t wave = batch_start; wave < batch_end;
           wave += static_cast<std::size_t>(n_slots)) {
        const std::size_t wave_end =
            std::min(wave + static_cast<std::size_t>(n_slots), batch_end);
        const auto count = static_cast<std::int64_t>(wave_end - wave);
        for_each_index(count, opts.exec, [&](std::int64_t slot) {
          try {
            const std::size_t idx = order[wave + slot];
            slot_grads[slot].set_zero();
            Rng dropout_rng(derive_seed(hp.seed, 2 + epoch, idx));
            ForwardCache cache;
            const Scores scores =
                model.forward(inputs[idx], &cache, &dropout_rng);
            slot_losses[slot] = model.loss(scores, train_gold[idx]);
            model.backward(inputs[idx], cache, scores, train_gold[idx],
                           slot_grads[slot]);
          } catch (const Error& e) {
            slot_errors[slot] = e.what();
          }
        });
        for (std::int64_t slot = 0; slot < count; ++slot) {
          if (!slot_errors[slot].empty())
            throw Error(Errc::NONFINITE_LOSS, slot_errors[slot]);
          epoch_loss += slot_losses[slot];
          add_scaled(batch_grad, slot_grads[slot], inv_batch);
        }
      }
      adam.step(model.params(), batch_grad);
    }

    const DevScore dev = evaluate_dev(model, dev_tb, dev_gold, provider, opts);
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / static_cast<double>(n_train);
    log.dev_precision = dev.precision;
    log.dev_recall = dev.recall;
    log.dev_f1 = dev.f1;
    if (opts.log_timing)
      log.elapsed_sec =
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        t_start)
              .count();
    result.log.push_back(log);

    if (dev.f1 > result.best_f1) {
      result.best_f1 = dev.f1;
      result.best_epoch = epoch;
      best_params = model.params();
      epochs_without_improvement = 0;
    } else if (++epochs_without_improvement >= hp.patience) {
      break;
    }
  }

  model.params() = std::move(best_params);
  result.model = std::move(model);
  result.converged = result.best_f1 >= 0.01;
  return result;
}

}  // namespace sentigraph
