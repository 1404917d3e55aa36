#include "sentigraph/parser.hpp"

#include <cmath>
#include <limits>

namespace sentigraph {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(z)) - z*y, numerically stable.
double bce_with_logits(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

Matrix augment_ones(const Matrix& m) {
  Matrix out(m.rows(), m.cols() + 1);
  out.leftCols(m.cols()) = m;
  out.col(m.cols()).setOnes();
  return out;
}

}  // namespace

void Hyperparams::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(Errc::DIM_MISMATCH, "bad hyperparameter: " + what);
  };
  require(embedding_dim >= 1, "embedding_dim must be >= 1");
  require(recurrent_hidden_dim >= 1, "recurrent_hidden_dim must be >= 1");
  require(recurrent_layers >= 1, "recurrent_layers must be >= 1");
  require(projection_dim_edge >= 1, "projection_dim_edge must be >= 1");
  require(projection_dim_label >= 1, "projection_dim_label must be >= 1");
  // 0 is allowed as the degenerate no-learning case; it trains and is then
  // reported as NON_CONVERGED.
  require(learning_rate >= 0, "learning_rate must be >= 0");
  require(dropout_rate >= 0 && dropout_rate < 1, "dropout_rate must be in [0,1)");
  require(edge_threshold > 0 && edge_threshold < 1,
          "edge_threshold must be in (0,1)");
  require(max_epochs >= 1, "max_epochs must be >= 1");
  require(patience >= 1, "patience must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
}

Vocabulary Vocabulary::build(const Treebank& train) {
  Vocabulary v;
  for (const auto& s : train.sentences)
    for (const auto& t : s.tokens) v.add(t.form);
  return v;
}

int Vocabulary::add(const std::string& form) {
  auto [it, inserted] = word_ids.emplace(form, static_cast<int>(words.size()));
  if (inserted) words.push_back(form);
  return it->second;
}

int Vocabulary::id(const std::string& form) const {
  auto it = word_ids.find(form);
  return it == word_ids.end() ? kUnknown : it->second;
}

ModelParams ModelParams::allocate(const Hyperparams& hp, int vocab_size) {
  const int de = hp.embedding_dim;
  const int h = hp.recurrent_hidden_dim;
  const int pe = hp.projection_dim_edge;
  const int pl = hp.projection_dim_label;
  const int n_labels = static_cast<int>(label_set().size());

  ModelParams p;
  p.embeddings = Matrix::Zero(vocab_size, de);
  p.lstm.resize(hp.recurrent_layers);
  for (int l = 0; l < hp.recurrent_layers; ++l) {
    const int in_dim = l == 0 ? de : 2 * h;
    for (LstmDirection* dir : {&p.lstm[l].fwd, &p.lstm[l].bwd}) {
      dir->w_in = Matrix::Zero(4 * h, in_dim);
      dir->w_rec = Matrix::Zero(4 * h, h);
      dir->bias = Vector::Zero(4 * h);
    }
  }
  p.edge_head = {Matrix::Zero(pe, 2 * h), Vector::Zero(pe)};
  p.edge_dep = {Matrix::Zero(pe, 2 * h), Vector::Zero(pe)};
  p.label_head = {Matrix::Zero(pl, 2 * h), Vector::Zero(pl)};
  p.label_dep = {Matrix::Zero(pl, 2 * h), Vector::Zero(pl)};
  p.edge_biaffine = Matrix::Zero(pe + 1, pe + 1);
  p.label_biaffine.assign(n_labels, Matrix::Zero(pl + 1, pl + 1));
  return p;
}

void ModelParams::set_zero() {
  for_each_tensor(*this, [](const std::string&, auto& t) { t.setZero(); });
}

Model::Model(Hyperparams hp, Vocabulary vocab, bool external_embeddings)
    : hp_(hp), vocab_(std::move(vocab)), external_embeddings_(external_embeddings) {
  hp_.validate();
  params_ = ModelParams::allocate(hp_, vocab_.size());
}

void Model::init_params(Rng& rng) {
  const int h = hp_.recurrent_hidden_dim;
  for_each_tensor(params_, [&](const std::string& name, auto& tensor) {
    using T = std::decay_t<decltype(tensor)>;
    if constexpr (std::is_same_v<T, Vector>) {
      tensor.setZero();
      if (name.find("lstm") == 0 && name.find(".bias") != std::string::npos)
        tensor.segment(h, h).setOnes();  // forget gate bias
    } else if (name.find("biaffine") != std::string::npos) {
      // Zero-started scorers: an untrained model emits no edges (every
      // sigmoid is exactly 0.5, below the strict threshold).
      tensor.setZero();
    } else {
      double bound;
      if (name == "embeddings") {
        bound = 0.1;
      } else {
        // Xavier-uniform over (fan_in = cols, fan_out = rows).
        bound = std::sqrt(6.0 / static_cast<double>(tensor.rows() + tensor.cols()));
      }
      for (Eigen::Index r = 0; r < tensor.rows(); ++r)
        for (Eigen::Index c = 0; c < tensor.cols(); ++c)
          tensor(r, c) = rng.uniform(-bound, bound);
    }
  });
}

namespace {

void lstm_forward_dir(const LstmDirection& p, const Matrix& inputs,
                      bool reversed, LstmTrace& trace) {
  const auto n = inputs.rows();
  const auto hdim = p.w_rec.cols();
  trace.inputs = inputs;
  trace.i.resize(n, hdim);
  trace.f.resize(n, hdim);
  trace.g.resize(n, hdim);
  trace.o.resize(n, hdim);
  trace.c.resize(n, hdim);
  trace.tanh_c.resize(n, hdim);
  trace.h.resize(n, hdim);

  Vector h_prev = Vector::Zero(hdim);
  Vector c_prev = Vector::Zero(hdim);
  for (Eigen::Index step = 0; step < n; ++step) {
    const Eigen::Index t = reversed ? n - 1 - step : step;
    Vector z = p.w_in * inputs.row(t).transpose() + p.w_rec * h_prev + p.bias;
    Vector i = z.segment(0, hdim).unaryExpr([](double v) { return sigmoid(v); });
    Vector f = z.segment(hdim, hdim).unaryExpr([](double v) { return sigmoid(v); });
    Vector g = z.segment(2 * hdim, hdim).array().tanh();
    Vector o = z.segment(3 * hdim, hdim).unaryExpr([](double v) { return sigmoid(v); });
    Vector c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
    Vector tc = c.array().tanh();
    Vector h = o.cwiseProduct(tc);
    trace.i.row(t) = i.transpose();
    trace.f.row(t) = f.transpose();
    trace.g.row(t) = g.transpose();
    trace.o.row(t) = o.transpose();
    trace.c.row(t) = c.transpose();
    trace.tanh_c.row(t) = tc.transpose();
    trace.h.row(t) = h.transpose();
    h_prev = std::move(h);
    c_prev = std::move(c);
  }
}

void lstm_backward_dir(const LstmDirection& p, const LstmTrace& trace,
                       bool reversed, const Matrix& dh_out,
                       LstmDirection& grad, Matrix& d_inputs) {
  const auto n = trace.inputs.rows();
  const auto hdim = p.w_rec.cols();
  Vector dh_carry = Vector::Zero(hdim);
  Vector dc_carry = Vector::Zero(hdim);
  for (Eigen::Index step = n; step-- > 0;) {
    // Walk the recurrence from its last step back to its first.
    const Eigen::Index t = reversed ? n - 1 - step : step;
    const bool has_prev = step > 0;
    const Eigen::Index t_prev = reversed ? t + 1 : t - 1;

    const Vector i = trace.i.row(t).transpose();
    const Vector f = trace.f.row(t).transpose();
    const Vector g = trace.g.row(t).transpose();
    const Vector o = trace.o.row(t).transpose();
    const Vector tc = trace.tanh_c.row(t).transpose();
    const Vector c_prev = has_prev ? Vector(trace.c.row(t_prev).transpose())
                                   : Vector(Vector::Zero(hdim));
    const Vector h_prev = has_prev ? Vector(trace.h.row(t_prev).transpose())
                                   : Vector(Vector::Zero(hdim));

    const Vector dh = dh_out.row(t).transpose() + dh_carry;
    const Vector do_ = dh.cwiseProduct(tc);
    const Vector dc =
        dc_carry + dh.cwiseProduct(o).cwiseProduct(
                       (1.0 - tc.array().square()).matrix());
    const Vector di = dc.cwiseProduct(g);
    const Vector dg = dc.cwiseProduct(i);
    const Vector df = dc.cwiseProduct(c_prev);
    dc_carry = dc.cwiseProduct(f);

    Vector dz(4 * hdim);
    dz.segment(0, hdim) =
        di.cwiseProduct(i).cwiseProduct((1.0 - i.array()).matrix());
    dz.segment(hdim, hdim) =
        df.cwiseProduct(f).cwiseProduct((1.0 - f.array()).matrix());
    dz.segment(2 * hdim, hdim) =
        dg.cwiseProduct((1.0 - g.array().square()).matrix());
    dz.segment(3 * hdim, hdim) =
        do_.cwiseProduct(o).cwiseProduct((1.0 - o.array()).matrix());

    grad.w_in.noalias() += dz * trace.inputs.row(t);
    grad.bias += dz;
    d_inputs.row(t) += (p.w_in.transpose() * dz).transpose();
    if (has_prev) {
      grad.w_rec.noalias() += dz * h_prev.transpose();
      dh_carry = p.w_rec.transpose() * dz;
    } else {
      dh_carry.setZero();
    }
  }
}

Matrix projection_forward(const Projection& p, const Matrix& input) {
  return ((input * p.w.transpose()).rowwise() + p.b.transpose())
      .array()
      .tanh()
      .matrix();
}

// Returns the gradient wrt the projection input.
Matrix projection_backward(const Projection& p, const Matrix& input,
                           const Matrix& output, const Matrix& d_output,
                           Projection& grad) {
  const Matrix d_pre =
      d_output.cwiseProduct((1.0 - output.array().square()).matrix());
  grad.w.noalias() += d_pre.transpose() * input;
  grad.b += d_pre.colwise().sum().transpose();
  return d_pre * p.w;
}

}  // namespace

Scores Model::forward(const SentenceInput& input, ForwardCache* cache,
                      Rng* dropout_rng) const {
  const int n = external_embeddings_
                    ? static_cast<int>(input.external.rows())
                    : static_cast<int>(input.word_ids.size());
  const int N = n + 1;
  const int de = hp_.embedding_dim;

  if (external_embeddings_ && input.external.cols() != de)
    throw Error(Errc::DIM_MISMATCH,
                "external vectors have dimension " +
                    std::to_string(input.external.cols()) + ", expected " +
                    std::to_string(de));

  Matrix x(N, de);
  x.row(0) = params_.embeddings.row(Vocabulary::kRoot);
  for (int t = 1; t <= n; ++t) {
    if (external_embeddings_) {
      x.row(t) = input.external.row(t - 1);
    } else {
      const int id = input.word_ids[t - 1];
      if (id < 0 || id >= params_.embeddings.rows())
        throw Error(Errc::DIM_MISMATCH, "word id out of range");
      x.row(t) = params_.embeddings.row(id);
    }
  }

  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.dropout.assign(params_.lstm.size(), Matrix());
  fc.fwd.assign(params_.lstm.size(), LstmTrace());
  fc.bwd.assign(params_.lstm.size(), LstmTrace());

  Matrix layer_in = std::move(x);
  for (std::size_t l = 0; l < params_.lstm.size(); ++l) {
    if (dropout_rng && hp_.dropout_rate > 0) {
      const double keep = 1.0 - hp_.dropout_rate;
      Matrix mask(layer_in.rows(), layer_in.cols());
      for (Eigen::Index r = 0; r < mask.rows(); ++r)
        for (Eigen::Index c = 0; c < mask.cols(); ++c)
          mask(r, c) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
      fc.dropout[l] = std::move(mask);
      layer_in = layer_in.cwiseProduct(fc.dropout[l]);
    }
    lstm_forward_dir(params_.lstm[l].fwd, layer_in, false, fc.fwd[l]);
    lstm_forward_dir(params_.lstm[l].bwd, layer_in, true, fc.bwd[l]);
    Matrix out(N, 2 * hp_.recurrent_hidden_dim);
    out.leftCols(hp_.recurrent_hidden_dim) = fc.fwd[l].h;
    out.rightCols(hp_.recurrent_hidden_dim) = fc.bwd[l].h;
    layer_in = std::move(out);
  }
  fc.encoded = std::move(layer_in);

  fc.edge_head = projection_forward(params_.edge_head, fc.encoded);
  fc.edge_dep = projection_forward(params_.edge_dep, fc.encoded);
  fc.label_head = projection_forward(params_.label_head, fc.encoded);
  fc.label_dep = projection_forward(params_.label_dep, fc.encoded);

  Scores scores;
  const Matrix eh = augment_ones(fc.edge_head);
  const Matrix ed = augment_ones(fc.edge_dep);
  scores.edge = eh * params_.edge_biaffine * ed.transpose();

  const Matrix lh = augment_ones(fc.label_head);
  const Matrix ld = augment_ones(fc.label_dep);
  scores.label.resize(params_.label_biaffine.size());
  for (std::size_t k = 0; k < params_.label_biaffine.size(); ++k)
    scores.label[k] = lh * params_.label_biaffine[k] * ld.transpose();

  // No edge may enter the root or loop onto its own head.
  for (int i = 0; i < N; ++i) scores.edge(i, 0) = kNegInf;
  for (int i = 0; i < N; ++i) scores.edge(i, i) = kNegInf;
  return scores;
}

double Model::loss(const Scores& scores, const DepGraph& gold) const {
  const int N = static_cast<int>(scores.edge.rows());
  const int n = N - 1;
  if (gold.n != n)
    throw Error(Errc::DIM_MISMATCH, "gold graph has " + std::to_string(gold.n) +
                                        " tokens, scores have " +
                                        std::to_string(n));
  if (n == 0) return 0.0;

  Eigen::MatrixXi has_edge = Eigen::MatrixXi::Zero(N, N);
  for (const auto& e : gold.edges) has_edge(e.head, e.dep) = 1;

  double edge_loss = 0.0;
  for (int h = 0; h < N; ++h) {
    for (int d = 1; d < N; ++d) {
      if (h == d) continue;
      const double z = scores.edge(h, d);
      if (!std::isfinite(z))
        throw Error(Errc::NONFINITE_LOSS, "edge logit not finite");
      edge_loss += bce_with_logits(z, has_edge(h, d) ? 1.0 : 0.0);
    }
  }
  edge_loss /= static_cast<double>(n) * n;

  double label_loss = 0.0;
  if (!gold.edges.empty()) {
    const int L = static_cast<int>(scores.label.size());
    for (const auto& e : gold.edges) {
      double max_z = kNegInf;
      for (int k = 0; k < L; ++k) {
        const double z = scores.label[k](e.head, e.dep);
        if (!std::isfinite(z))
          throw Error(Errc::NONFINITE_LOSS, "label logit not finite");
        max_z = std::max(max_z, z);
      }
      double lse = 0.0;
      for (int k = 0; k < L; ++k)
        lse += std::exp(scores.label[k](e.head, e.dep) - max_z);
      lse = max_z + std::log(lse);
      int gold_k = 0;
      for (int k = 0; k < L; ++k)
        if (label_set()[k] == e.label) gold_k = k;
      label_loss += lse - scores.label[gold_k](e.head, e.dep);
    }
    label_loss /= static_cast<double>(gold.edges.size());
  }
  return edge_loss + label_loss;
}

void Model::backward(const SentenceInput& input, const ForwardCache& cache,
                     const Scores& scores, const DepGraph& gold,
                     ModelParams& grad) const {
  const int N = static_cast<int>(scores.edge.rows());
  const int n = N - 1;
  if (n == 0) return;

  Eigen::MatrixXi has_edge = Eigen::MatrixXi::Zero(N, N);
  for (const auto& e : gold.edges) has_edge(e.head, e.dep) = 1;

  // d loss / d edge logits.
  Matrix d_edge = Matrix::Zero(N, N);
  const double inv_pairs = 1.0 / (static_cast<double>(n) * n);
  for (int h = 0; h < N; ++h)
    for (int d = 1; d < N; ++d) {
      if (h == d) continue;
      d_edge(h, d) =
          (sigmoid(scores.edge(h, d)) - (has_edge(h, d) ? 1.0 : 0.0)) *
          inv_pairs;
    }

  // d loss / d label logits, on gold edges only.
  const int L = static_cast<int>(scores.label.size());
  std::vector<Matrix> d_label(L, Matrix::Zero(N, N));
  if (!gold.edges.empty()) {
    const double inv_gold = 1.0 / static_cast<double>(gold.edges.size());
    for (const auto& e : gold.edges) {
      double max_z = kNegInf;
      for (int k = 0; k < L; ++k)
        max_z = std::max(max_z, scores.label[k](e.head, e.dep));
      double denom = 0.0;
      for (int k = 0; k < L; ++k)
        denom += std::exp(scores.label[k](e.head, e.dep) - max_z);
      for (int k = 0; k < L; ++k) {
        const double p =
            std::exp(scores.label[k](e.head, e.dep) - max_z) / denom;
        const double y = label_set()[k] == e.label ? 1.0 : 0.0;
        d_label[k](e.head, e.dep) += (p - y) * inv_gold;
      }
    }
  }

  // Biaffine scorers.
  const Matrix eh = augment_ones(cache.edge_head);
  const Matrix ed = augment_ones(cache.edge_dep);
  grad.edge_biaffine.noalias() += eh.transpose() * d_edge * ed;
  const int pe = static_cast<int>(cache.edge_head.cols());
  Matrix d_eh =
      (d_edge * ed * params_.edge_biaffine.transpose()).leftCols(pe);
  Matrix d_ed =
      (d_edge.transpose() * eh * params_.edge_biaffine).leftCols(pe);

  const Matrix lh = augment_ones(cache.label_head);
  const Matrix ld = augment_ones(cache.label_dep);
  const int pl = static_cast<int>(cache.label_head.cols());
  Matrix d_lh = Matrix::Zero(N, pl);
  Matrix d_ld = Matrix::Zero(N, pl);
  for (int k = 0; k < L; ++k) {
    grad.label_biaffine[k].noalias() += lh.transpose() * d_label[k] * ld;
    d_lh.noalias() +=
        (d_label[k] * ld * params_.label_biaffine[k].transpose()).leftCols(pl);
    d_ld.noalias() +=
        (d_label[k].transpose() * lh * params_.label_biaffine[k]).leftCols(pl);
  }

  // Projections back to the encoder output.
  Matrix d_encoded = Matrix::Zero(N, cache.encoded.cols());
  d_encoded += projection_backward(params_.edge_head, cache.encoded,
                                   cache.edge_head, d_eh, grad.edge_head);
  d_encoded += projection_backward(params_.edge_dep, cache.encoded,
                                   cache.edge_dep, d_ed, grad.edge_dep);
  d_encoded += projection_backward(params_.label_head, cache.encoded,
                                   cache.label_head, d_lh, grad.label_head);
  d_encoded += projection_backward(params_.label_dep, cache.encoded,
                                   cache.label_dep, d_ld, grad.label_dep);

  // BiLSTM stack, top layer first.
  const int hdim = hp_.recurrent_hidden_dim;
  Matrix d_out = std::move(d_encoded);
  for (std::size_t l = params_.lstm.size(); l-- > 0;) {
    Matrix d_in = Matrix::Zero(N, cache.fwd[l].inputs.cols());
    lstm_backward_dir(params_.lstm[l].fwd, cache.fwd[l], false,
                      d_out.leftCols(hdim), grad.lstm[l].fwd, d_in);
    lstm_backward_dir(params_.lstm[l].bwd, cache.bwd[l], true,
                      d_out.rightCols(hdim), grad.lstm[l].bwd, d_in);
    if (cache.dropout[l].size() > 0) d_in = d_in.cwiseProduct(cache.dropout[l]);
    d_out = std::move(d_in);
  }

  // Embedding rows (only the root row when vectors come from a file).
  grad.embeddings.row(Vocabulary::kRoot) += d_out.row(0);
  if (!external_embeddings_)
    for (int t = 1; t <= n; ++t)
      grad.embeddings.row(input.word_ids[t - 1]) += d_out.row(t);
}

DepGraph scores_to_graph(const Scores& scores, double edge_threshold) {
  const int N = static_cast<int>(scores.edge.rows());
  const int L = static_cast<int>(scores.label.size());

  DepGraph g;
  g.n = N - 1;
  for (int h = 0; h < N; ++h) {
    for (int d = 1; d < N; ++d) {
      if (h == d) continue;
      if (sigmoid(scores.edge(h, d)) <= edge_threshold) continue;
      // Constrained argmax keeps graphs decodable: root edges carry a
      // polarity label, inner edges a plain role label.
      int best = -1;
      for (int k = 0; k < L; ++k) {
        if ((h == 0) != is_root_label(label_set()[k])) continue;
        if (best < 0 ||
            scores.label[k](h, d) > scores.label[best](h, d))
          best = k;
      }
      g.edges.push_back({h, d, label_set()[best]});
    }
  }
  return g;
}

DepGraph Model::predict(const SentenceInput& input) const {
  return scores_to_graph(forward(input), hp_.edge_threshold);
}

SentenceInput Model::make_input(const Sentence& s) const {
  SentenceInput input;
  if (external_embeddings_)
    throw Error(Errc::MISSING_VECTOR,
                "model expects an external embedding file for sentence " +
                    s.sent_id);
  input.word_ids.reserve(s.tokens.size());
  for (const auto& t : s.tokens) input.word_ids.push_back(vocab_.id(t.form));
  return input;
}

}  // namespace sentigraph
