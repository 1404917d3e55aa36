#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sentigraph/checkpoint.hpp"
#include "sentigraph/codec.hpp"
#include "sentigraph/embeddings.hpp"
#include "sentigraph/metrics.hpp"
#include "sentigraph/trainer.hpp"
#include "sentigraph/treebank_ops.hpp"

namespace sg = sentigraph;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNonConverged = 3;

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(',', start);
    if (pos == std::string::npos) {
      if (start < s.size()) out.push_back(s.substr(start));
      break;
    }
    if (pos > start) out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void emit(const std::string& content, const std::string& out_path) {
  if (out_path.empty())
    std::cout << content;
  else
    sg::write_file_atomic(out_path, content);
}

sg::Treebank read_treebank(const std::string& path, const std::string& name = "") {
  return sg::read_json(sg::read_file(path), name.empty() ? stem_of(path) : name);
}

void require_valid(const sg::Treebank& t, const std::string& what) {
  const auto report = sg::validate_treebank(t);
  if (report.empty()) return;
  std::cerr << what << ": " << report.size() << " validation violation(s)\n";
  for (std::size_t i = 0; i < report.size() && i < 10; ++i)
    std::cerr << "  " << report[i].code << " at " << report[i].location << "\n";
  throw sg::Error(sg::Errc::SCHEMA_ERROR, what + " failed validation");
}

ordered_json prf_json(const sg::Prf& p) {
  ordered_json j;
  j["precision"] = p.precision;
  j["recall"] = p.recall;
  j["f1"] = p.f1;
  return j;
}

sg::Mode parse_mode(const std::string& mode) {
  return mode == "head_first" ? sg::Mode::HeadFirst : sg::Mode::HeadFinal;
}

std::vector<sg::GraphSentence> to_graph_sentences(
    const sg::Treebank& t, const std::vector<sg::DepGraph>& graphs) {
  std::vector<sg::GraphSentence> out;
  out.reserve(t.sentences.size());
  for (std::size_t i = 0; i < t.sentences.size(); ++i) {
    const auto& s = t.sentences[i];
    sg::GraphSentence gs;
    gs.sent_id = s.sent_id;
    gs.text = s.text;
    for (const auto& tok : s.tokens) gs.forms.push_back(tok.form);
    gs.graph = graphs[i];
    out.push_back(std::move(gs));
  }
  return out;
}

struct CommonFlags {
  std::string mode = "head_final";
  bool serial = false;

  sg::Exec exec() const { return serial ? sg::Exec::Serial : sg::Exec::OpenMP; }
};

int run_convert(const std::string& from, const std::string& to,
                const CommonFlags& common, const std::string& in,
                const std::string& out, bool force) {
  const std::string content = sg::read_file(in);
  const sg::Mode mode = parse_mode(common.mode);

  if (from == "json") {
    sg::Treebank t = sg::read_json(content, stem_of(in));
    if (to == "json") {
      for (auto& s : t.sentences)
        s.opinions = sg::canonicalize_opinions(s.opinions);
      emit(sg::write_json(t), out);
      return kExitOk;
    }
    require_valid(t, in);
    const auto graphs = sg::encode_treebank(t, mode, {force}, common.exec());
    emit(sg::write_graph_file(to_graph_sentences(t, graphs)), out);
    return kExitOk;
  }

  const auto blocks = sg::read_graph_file(content);
  if (to == "graph") {
    emit(sg::write_graph_file(blocks), out);
    return kExitOk;
  }
  sg::Treebank t;
  t.name = stem_of(in);
  int dropped = 0;
  for (const auto& gs : blocks) {
    sg::Sentence s = sg::graph_sentence_to_sentence(gs);
    auto decoded = sg::decode(gs.graph, s);
    dropped += decoded.dropped_edges;
    s.opinions = std::move(decoded.opinions);
    t.sentences.push_back(std::move(s));
  }
  if (dropped > 0)
    std::cerr << "warning: dropped " << dropped << " dangling edge(s)\n";
  emit(sg::write_json(t), out);
  return kExitOk;
}

int run_train(CLI::App* cmd, const CommonFlags& common, int strategy,
              const std::string& train_list, const std::string& dev_list,
              const std::string& names_list, const std::string& embeddings_path,
              sg::Hyperparams hp, const std::string& select_metric,
              const std::string& out, const std::string& log_path,
              bool deterministic) {
  const auto train_paths = split_list(train_list);
  const auto dev_paths = split_list(dev_list);
  if (train_paths.empty() || dev_paths.empty())
    throw CLI::ValidationError("--train and --dev must name at least one file");

  auto names = split_list(names_list);
  if (names.empty())
    for (const auto& p : train_paths) names.push_back(stem_of(p));
  if (names.size() != train_paths.size())
    throw CLI::ValidationError("--names must match --train in length");

  if (strategy == 1 && (train_paths.size() != 1 || dev_paths.size() != 1))
    throw CLI::ValidationError("strategy 1 takes one train and one dev file");
  if (strategy == 2 && train_paths.size() != dev_paths.size())
    throw CLI::ValidationError("strategy 2 takes matching train and dev lists");
  if (strategy == 3 && dev_paths.size() != 1)
    throw CLI::ValidationError("strategy 3 takes a single dev file");

  std::vector<sg::Treebank> trains, devs;
  for (std::size_t i = 0; i < train_paths.size(); ++i)
    trains.push_back(read_treebank(train_paths[i], names[i]));
  for (std::size_t i = 0; i < dev_paths.size(); ++i)
    devs.push_back(read_treebank(dev_paths[i],
                                 i < names.size() ? names[i] : std::string()));

  const sg::Treebank train_tb =
      trains.size() == 1 ? trains[0] : sg::merge_treebanks(trains);
  const sg::Treebank dev_tb =
      strategy == 2 && devs.size() > 1 ? sg::merge_treebanks(devs) : devs[0];
  require_valid(train_tb, "train data");
  require_valid(dev_tb, "dev data");

  sg::EmbeddingProvider provider =
      embeddings_path.empty() ? sg::EmbeddingProvider::trainable()
                              : sg::EmbeddingProvider::from_file(embeddings_path);
  if (provider.external()) {
    if (cmd->count("--embedding-dim") == 0) hp.embedding_dim = provider.dim();
    // Fine-tuning external vectors starts lower by default.
    if (cmd->count("--lr") == 0) hp.learning_rate = 5e-5;
  }

  sg::TrainOptions opts;
  opts.mode = parse_mode(common.mode);
  opts.select = select_metric == "sgraph"
                    ? sg::TrainOptions::Select::SentimentGraphF1
                    : sg::TrainOptions::Select::LabeledEdgeF1;
  opts.log_timing = !deterministic;
  opts.exec = common.exec();

  const sg::TrainResult result = sg::train(train_tb, dev_tb, hp, provider, opts);

  std::string log_text;
  for (const auto& e : result.log) {
    ordered_json line;
    line["epoch"] = e.epoch;
    line["loss"] = e.train_loss;
    line["dev_precision"] = e.dev_precision;
    line["dev_recall"] = e.dev_recall;
    line["dev_f1"] = e.dev_f1;
    if (opts.log_timing) line["elapsed_sec"] = e.elapsed_sec;
    log_text += line.dump() + "\n";
  }
  if (log_path.empty())
    std::cerr << log_text;
  else
    sg::write_file_atomic(log_path, log_text);

  if (!result.converged) {
    std::cerr << "NON_CONVERGED: best dev F1 " << result.best_f1
              << " after " << result.log.size() << " epoch(s)\n";
    return kExitNonConverged;
  }
  sg::save_checkpoint_file(result.model, out);
  std::cerr << "best epoch " << result.best_epoch << ", dev F1 "
            << result.best_f1 << ", model written to " << out << "\n";
  return kExitOk;
}

int run_predict(const CommonFlags& common, const std::string& model_path,
                const std::string& in, const std::string& from,
                const std::string& embeddings_path, const std::string& out_json,
                const std::string& out_graph) {
  const sg::Model model = sg::load_checkpoint_file(model_path);
  sg::EmbeddingProvider provider =
      embeddings_path.empty() ? sg::EmbeddingProvider::trainable()
                              : sg::EmbeddingProvider::from_file(embeddings_path);

  sg::Treebank t;
  if (from == "graph") {
    t.name = stem_of(in);
    for (const auto& gs : sg::read_graph_file(sg::read_file(in)))
      t.sentences.push_back(sg::graph_sentence_to_sentence(gs));
  } else {
    t = read_treebank(in);
  }

  const auto graphs = sg::predict_treebank(model, t, provider, common.exec());

  if (!out_graph.empty() || out_json.empty())
    emit(sg::write_graph_file(to_graph_sentences(t, graphs)), out_graph);
  if (!out_json.empty()) {
    sg::Treebank decoded = t;
    int dropped = 0;
    for (std::size_t i = 0; i < decoded.sentences.size(); ++i) {
      auto result = sg::decode(graphs[i], decoded.sentences[i]);
      dropped += result.dropped_edges;
      decoded.sentences[i].opinions = std::move(result.opinions);
    }
    if (dropped > 0)
      std::cerr << "warning: dropped " << dropped << " dangling edge(s)\n";
    emit(sg::write_json(decoded), out_json);
  }
  return kExitOk;
}

int run_evaluate(const CommonFlags& common, const std::string& pred_path,
                 const std::string& gold_path, bool require_polarity,
                 bool labeled, bool force, const std::string& out) {
  const sg::Treebank pred = read_treebank(pred_path);
  const sg::Treebank gold = read_treebank(gold_path);
  const sg::Exec exec = common.exec();
  const sg::Mode mode = parse_mode(common.mode);

  const sg::EvalReport graph_report =
      sg::sentiment_graph_f1(pred, gold, require_polarity, exec);
  const auto pred_graphs = sg::encode_treebank(pred, mode, {force}, exec);
  const auto gold_graphs = sg::encode_treebank(gold, mode, {force}, exec);
  const sg::EvalReport edge_report =
      sg::edge_micro_f1(pred_graphs, gold_graphs, labeled, exec);

  ordered_json report;
  report["sentiment_graph"] = prf_json(graph_report.overall);
  report["edges"] = prf_json(edge_report.overall);
  ordered_json spans;
  spans["holder"] =
      prf_json(sg::span_f1(pred, gold, sg::SpanElement::Holder, exec).overall);
  spans["target"] =
      prf_json(sg::span_f1(pred, gold, sg::SpanElement::Target, exec).overall);
  spans["expression"] = prf_json(
      sg::span_f1(pred, gold, sg::SpanElement::Expression, exec).overall);
  report["spans"] = std::move(spans);
  emit(report.dump(2) + "\n", out);
  return kExitOk;
}

int run_merge(const std::string& in_list, const std::string& names_list,
              const std::string& out) {
  const auto paths = split_list(in_list);
  if (paths.empty()) throw CLI::ValidationError("--in must name at least one file");
  auto names = split_list(names_list);
  if (names.empty())
    for (const auto& p : paths) names.push_back(stem_of(p));
  if (names.size() != paths.size())
    throw CLI::ValidationError("--names must match --in in length");
  std::vector<sg::Treebank> parts;
  for (std::size_t i = 0; i < paths.size(); ++i)
    parts.push_back(read_treebank(paths[i], names[i]));
  emit(sg::write_json(sg::merge_treebanks(parts)), out);
  return kExitOk;
}

int run_translate(const CommonFlags& common, const std::string& lexicon_path,
                  bool fold_case, const std::string& in,
                  const std::string& out) {
  const sg::Treebank t = read_treebank(in);
  require_valid(t, in);
  const auto load = sg::load_lexicon(sg::read_file(lexicon_path), fold_case);
  if (load.duplicate_keys > 0)
    std::cerr << "warning: " << load.duplicate_keys
              << " duplicate lexicon key(s), last value wins\n";
  const auto result = sg::translate_word_level(t, load.lexicon, common.exec());
  ordered_json coverage;
  coverage["tokens"] = result.tokens;
  coverage["translated"] = result.translated;
  coverage["coverage"] =
      result.tokens == 0
          ? 0.0
          : static_cast<double>(result.translated) /
                static_cast<double>(result.tokens);
  std::cerr << coverage.dump() << "\n";
  emit(sg::write_json(result.treebank), out);
  return kExitOk;
}

int run_stats(const std::string& in) {
  const auto s = sg::stats(read_treebank(in));
  ordered_json j;
  j["sentences"] = s.sentences;
  j["holders"] = s.holders;
  j["targets"] = s.targets;
  j["expressions"] = s.expressions;
  std::cout << j.dump() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sentigraph: structured sentiment analysis as graph parsing"};
  app.require_subcommand(1);
  app.set_config("--config");
  app.get_formatter()->column_width(34);

  std::uint64_t default_seed = 1;
  if (const char* env = std::getenv("SENTIGRAPH_SEED")) {
    try {
      default_seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "bad SENTIGRAPH_SEED value '" << env << "'\n";
      return kExitUsage;
    }
  }

  const auto mode_check = CLI::IsMember({"head_final", "head_first"});
  const auto fmt_check = CLI::IsMember({"json", "graph"});

  // convert
  auto* convert = app.add_subcommand("convert", "Convert between opinion JSON and graph files");
  CommonFlags convert_common;
  std::string cv_from = "json", cv_to = "graph", cv_in, cv_out;
  bool cv_force = false;
  convert->add_option("--from", cv_from, "Input format")->check(fmt_check);
  convert->add_option("--to", cv_to, "Output format")->check(fmt_check);
  convert->add_option("--mode", convert_common.mode, "Span head convention")->check(mode_check);
  convert->add_option("--in", cv_in, "Input file")->required();
  convert->add_option("--out", cv_out, "Output file (default stdout)");
  convert->add_flag("--force", cv_force, "Resolve label collisions last-writer-wins");
  convert->add_flag("--serial", convert_common.serial, "Disable OpenMP");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a biaffine parser");
  CommonFlags train_common;
  int tr_strategy = 1;
  std::string tr_train, tr_dev, tr_names, tr_embeddings, tr_out, tr_log;
  std::string tr_select = "edge";
  bool tr_deterministic = false;
  sg::Hyperparams hp;
  hp.seed = default_seed;
  train_cmd->add_option("--strategy", tr_strategy, "Treebank strategy (1|2|3)")
      ->check(CLI::Range(1, 3));
  train_cmd->add_option("--train", tr_train, "Comma-separated training files")->required();
  train_cmd->add_option("--dev", tr_dev, "Comma-separated development files")->required();
  train_cmd->add_option("--names", tr_names, "Comma-separated treebank names");
  train_cmd->add_option("--mode", train_common.mode, "Span head convention")->check(mode_check);
  train_cmd->add_option("--embeddings", tr_embeddings, "Precomputed embedding file");
  train_cmd->add_option("--seed", hp.seed, "Random seed");
  train_cmd->add_option("--lr", hp.learning_rate, "Learning rate");
  train_cmd->add_option("--epochs", hp.max_epochs, "Maximum epochs");
  train_cmd->add_option("--patience", hp.patience, "Early-stopping patience");
  train_cmd->add_option("--batch-size", hp.batch_size, "Sentences per batch");
  train_cmd->add_option("--embedding-dim", hp.embedding_dim, "Word vector size");
  train_cmd->add_option("--hidden-dim", hp.recurrent_hidden_dim, "LSTM hidden size per direction");
  train_cmd->add_option("--layers", hp.recurrent_layers, "LSTM layers");
  train_cmd->add_option("--edge-proj", hp.projection_dim_edge, "Edge projection size");
  train_cmd->add_option("--label-proj", hp.projection_dim_label, "Label projection size");
  train_cmd->add_option("--dropout", hp.dropout_rate, "Dropout rate");
  train_cmd->add_option("--edge-threshold", hp.edge_threshold, "Edge probability threshold");
  train_cmd->add_option("--select-metric", tr_select, "Dev metric: edge or sgraph")
      ->check(CLI::IsMember({"edge", "sgraph"}));
  train_cmd->add_option("--out", tr_out, "Checkpoint output path")->required();
  train_cmd->add_option("--log", tr_log, "Training log path (default stderr)");
  train_cmd->add_flag("--deterministic", tr_deterministic, "Suppress timestamps in logs");
  train_cmd->add_flag("--serial", train_common.serial, "Disable OpenMP");

  // predict
  auto* predict = app.add_subcommand("predict", "Predict graphs with a trained model");
  CommonFlags predict_common;
  std::string pr_model, pr_in, pr_from = "json", pr_embeddings, pr_out_json, pr_out_graph;
  predict->add_option("--model", pr_model, "Checkpoint path")->required();
  predict->add_option("--in", pr_in, "Input file")->required();
  predict->add_option("--from", pr_from, "Input format")->check(fmt_check);
  predict->add_option("--embeddings", pr_embeddings, "Precomputed embedding file");
  predict->add_option("--out-graph", pr_out_graph, "Write predicted graph file");
  predict->add_option("--out-json", pr_out_json, "Write decoded opinion JSON");
  predict->add_flag("--serial", predict_common.serial, "Disable OpenMP");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold data");
  CommonFlags eval_common;
  std::string ev_pred, ev_gold, ev_out;
  bool ev_require_polarity = true, ev_labeled = true, ev_force = false;
  evaluate->add_option("--pred", ev_pred, "Predicted opinion JSON")->required();
  evaluate->add_option("--gold", ev_gold, "Gold opinion JSON")->required();
  evaluate->add_flag("--require-polarity,!--no-require-polarity", ev_require_polarity,
                     "Matched tuples must agree on polarity");
  evaluate->add_flag("--labeled,!--unlabeled", ev_labeled, "Label-sensitive edge scores");
  evaluate->add_flag("--force", ev_force, "Resolve label collisions when encoding");
  evaluate->add_option("--mode", eval_common.mode, "Span head convention")->check(mode_check);
  evaluate->add_option("--out", ev_out, "Report path (default stdout)");
  evaluate->add_flag("--serial", eval_common.serial, "Disable OpenMP");

  // merge
  auto* merge = app.add_subcommand("merge", "Merge treebanks with prefixed ids");
  std::string mg_in, mg_names, mg_out;
  merge->add_option("--in", mg_in, "Comma-separated input files")->required();
  merge->add_option("--names", mg_names, "Comma-separated treebank names");
  merge->add_option("--out", mg_out, "Output file (default stdout)");

  // translate
  auto* translate = app.add_subcommand("translate", "Word-level lexicon translation");
  CommonFlags tl_common;
  std::string tl_lexicon, tl_in, tl_out;
  bool tl_fold = false;
  translate->add_option("--lexicon", tl_lexicon, "Two-column TSV lexicon")->required();
  translate->add_option("--in", tl_in, "Input file")->required();
  translate->add_option("--out", tl_out, "Output file (default stdout)");
  translate->add_flag("--fold-case", tl_fold, "Case-fold lexicon lookups (ASCII)");
  translate->add_flag("--serial", tl_common.serial, "Disable OpenMP");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Treebank statistics");
  std::string st_in;
  stats_cmd->add_option("--in", st_in, "Input file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (convert->parsed())
      return run_convert(cv_from, cv_to, convert_common, cv_in, cv_out, cv_force);
    if (train_cmd->parsed())
      return run_train(train_cmd, train_common, tr_strategy, tr_train, tr_dev,
                       tr_names, tr_embeddings, hp, tr_select, tr_out, tr_log,
                       tr_deterministic);
    if (predict->parsed())
      return run_predict(predict_common, pr_model, pr_in, pr_from,
                         pr_embeddings, pr_out_json, pr_out_graph);
    if (evaluate->parsed())
      return run_evaluate(eval_common, ev_pred, ev_gold, ev_require_polarity,
                          ev_labeled, ev_force, ev_out);
    if (merge->parsed()) return run_merge(mg_in, mg_names, mg_out);
    if (translate->parsed())
      return run_translate(tl_common, tl_lexicon, tl_fold, tl_in, tl_out);
    if (stats_cmd->parsed()) return run_stats(st_in);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const sg::Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == sg::Errc::NON_CONVERGED ? kExitNonConverged : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
