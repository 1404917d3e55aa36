#include "sentigraph/codec.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sentigraph/text.hpp"

namespace sentigraph {

using ordered_json = nlohmann::ordered_json;

const std::vector<std::string>& label_set() {
  static const std::vector<std::string> labels = {
      "exp:Positive", "exp:Negative", "exp:Neutral", "exp", "targ", "hold"};
  return labels;
}

bool is_root_label(const std::string& label) {
  return label.rfind("exp:", 0) == 0;
}

bool is_known_label(const std::string& label) {
  const auto& ls = label_set();
  return std::find(ls.begin(), ls.end(), label) != ls.end();
}

std::string root_label(Polarity p) {
  return std::string("exp:") + polarity_name(p);
}

std::vector<Token> tokenize(std::string_view txt) {
  std::vector<Token> tokens;
  std::size_t byte = 0, cp = 0;
  std::size_t run_start_cp = 0, run_start_byte = 0;
  bool in_token = false;
  while (byte < txt.size()) {
    const std::size_t byte_before = byte;
    const char32_t c = text::decode_at(txt, byte);
    const bool ws = text::is_whitespace(c);
    if (!ws && !in_token) {
      in_token = true;
      run_start_cp = cp;
      run_start_byte = byte_before;
    } else if (ws && in_token) {
      in_token = false;
      tokens.push_back({static_cast<int>(tokens.size()) + 1,
                        std::string(txt.substr(run_start_byte,
                                               byte_before - run_start_byte)),
                        run_start_cp, cp});
    }
    ++cp;
  }
  if (in_token)
    tokens.push_back({static_cast<int>(tokens.size()) + 1,
                      std::string(txt.substr(run_start_byte)), run_start_cp,
                      cp});
  return tokens;
}

Sentence make_sentence(std::string sent_id, std::string text,
                       std::vector<Opinion> opinions) {
  Sentence s;
  s.sent_id = std::move(sent_id);
  s.text = std::move(text);
  s.tokens = tokenize(s.text);
  s.opinions = std::move(opinions);
  return s;
}

namespace {

void sort_edges(DepGraph& g) {
  std::sort(g.edges.begin(), g.edges.end(),
            [](const DepEdge& a, const DepEdge& b) {
              return std::tie(a.head, a.dep, a.label) <
                     std::tie(b.head, b.dep, b.label);
            });
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end(),
                            [](const DepEdge& a, const DepEdge& b) {
                              return a.head == b.head && a.dep == b.dep &&
                                     a.label == b.label;
                            }),
                g.edges.end());
}

void add_edge(std::map<std::pair<int, int>, std::string>& edges, int head,
              int dep, const std::string& label, const Sentence& s,
              bool force) {
  if (head == dep) {
    if (force) return;  // lossy: a span head coinciding with its parent
    throw Error(Errc::LABEL_COLLISION,
                "sentence " + s.sent_id + ": span head " +
                    std::to_string(dep) + " would depend on itself");
  }
  auto [it, inserted] = edges.emplace(std::pair{head, dep}, label);
  if (!inserted && it->second != label) {
    if (!force)
      throw Error(Errc::LABEL_COLLISION,
                  "sentence " + s.sent_id + ": edge " + std::to_string(head) +
                      "->" + std::to_string(dep) + " labeled both " +
                      it->second + " and " + label);
    it->second = label;  // last writer wins under --force
  }
}

}  // namespace

DepGraph encode(const Sentence& s, Mode mode, const EncodeOptions& opts) {
  std::map<std::pair<int, int>, std::string> edges;
  for (const auto& op : s.opinions) {
    const auto expr = align_span_to_tokens(op.expression, s);
    if (expr.empty()) continue;  // validated sentences never hit this
    const int eh = mode == Mode::HeadFinal ? expr.back() : expr.front();
    add_edge(edges, 0, eh, root_label(op.polarity), s, opts.force);
    for (int e : expr)
      if (e != eh) add_edge(edges, eh, e, "exp", s, opts.force);

    auto attach = [&](const Span& span, const std::string& label) {
      const auto toks = align_span_to_tokens(span, s);
      if (toks.empty()) return;
      const int head = mode == Mode::HeadFinal ? toks.back() : toks.front();
      add_edge(edges, eh, head, label, s, opts.force);
      for (int t : toks)
        if (t != head) add_edge(edges, head, t, label, s, opts.force);
    };
    attach(op.target, "targ");
    attach(op.holder, "hold");
  }

  DepGraph g;
  g.n = static_cast<int>(s.tokens.size());
  g.edges.reserve(edges.size());
  for (const auto& [pair, label] : edges)
    g.edges.push_back({pair.first, pair.second, label});
  sort_edges(g);
  return g;
}

namespace {

// Maximal contiguous runs of token indices -> one fragment per run, with text
// taken from the sentence at the run's offsets.
Span tokens_to_span(const std::vector<int>& indices, const Sentence& s) {
  Span span;
  std::size_t i = 0;
  while (i < indices.size()) {
    std::size_t j = i;
    while (j + 1 < indices.size() && indices[j + 1] == indices[j] + 1) ++j;
    const Token& first = s.tokens[static_cast<std::size_t>(indices[i]) - 1];
    const Token& last = s.tokens[static_cast<std::size_t>(indices[j]) - 1];
    span.fragments.push_back(
        {text::cp_slice(s.text, first.start, last.end), first.start, last.end});
    i = j + 1;
  }
  return span;
}

}  // namespace

DecodeResult decode(const DepGraph& g, const Sentence& s) {
  // Dependents by head and label; the bool marks groups reached from a root
  // edge so dangling edges can be counted (each group at most once).
  std::map<std::pair<int, std::string>, std::pair<std::vector<int>, bool>> deps;
  std::vector<std::pair<int, std::string>> roots;  // (expression head, label)
  for (const auto& e : g.edges) {
    if (e.head == 0)
      roots.emplace_back(e.dep, e.label);
    else
      deps[{e.head, e.label}].first.push_back(e.dep);
  }
  std::sort(roots.begin(), roots.end());

  std::size_t consumed = roots.size();
  auto take = [&](int head, const std::string& label) {
    auto it = deps.find({head, label});
    if (it == deps.end()) return std::vector<int>{};
    if (!it->second.second) {
      it->second.second = true;
      consumed += it->second.first.size();
    }
    auto v = it->second.first;
    std::sort(v.begin(), v.end());
    return v;
  };

  std::vector<Opinion> opinions;
  for (const auto& [eh, label] : roots) {
    if (!is_root_label(label)) continue;  // unreachable for valid graphs
    const auto pol = parse_polarity(label.substr(4));
    if (!pol) continue;

    std::vector<int> expr = take(eh, "exp");
    expr.push_back(eh);
    std::sort(expr.begin(), expr.end());

    auto spans_for = [&](const std::string& lbl) {
      std::vector<Span> spans;
      for (int head : take(eh, lbl)) {
        std::vector<int> toks = take(head, lbl);
        toks.push_back(head);
        std::sort(toks.begin(), toks.end());
        toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
        spans.push_back(tokens_to_span(toks, s));
      }
      if (spans.empty()) spans.push_back(Span{});  // absent element
      return spans;
    };

    // The bilexical encoding cannot pair targets with holders, so emit the
    // cross product under each root edge.
    const auto targets = spans_for("targ");
    const auto holders = spans_for("hold");
    for (const auto& t : targets) {
      for (const auto& h : holders) {
        Opinion op;
        op.expression = tokens_to_span(expr, s);
        op.target = t;
        op.holder = h;
        op.polarity = *pol;
        opinions.push_back(std::move(op));
      }
    }
  }

  DecodeResult result;
  result.opinions = canonicalize_opinions(std::move(opinions));
  result.dropped_edges = static_cast<int>(g.edges.size() - consumed);
  return result;
}

std::vector<DepGraph> encode_treebank(const Treebank& t, Mode mode,
                                      const EncodeOptions& opts, Exec exec) {
  std::vector<DepGraph> graphs(t.sentences.size());
  std::vector<std::string> errors(t.sentences.size());
  for_each_index(static_cast<std::int64_t>(t.sentences.size()), exec,
                 [&](std::int64_t i) {
                   try {
                     graphs[i] = encode(t.sentences[i], mode, opts);
                   } catch (const Error& e) {
                     errors[i] = e.what();
                   }
                 });
  for (const auto& e : errors)
    if (!e.empty()) throw Error(Errc::LABEL_COLLISION, e);
  return graphs;
}

// --- JSON ---

namespace {

[[noreturn]] void schema_error(std::size_t sent_index, const std::string& path,
                               const std::string& what) {
  throw Error(Errc::SCHEMA_ERROR, "sentence " + std::to_string(sent_index) +
                                      ", " + path + ": " + what);
}

Span parse_span(const ordered_json& j, std::size_t sent_index,
                const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_array() || !j[1].is_array())
    schema_error(sent_index, path, "expected [strings, \"start:end\" offsets]");
  if (j[0].size() != j[1].size())
    schema_error(sent_index, path, "fragment strings and offsets differ in length");
  Span span;
  for (std::size_t i = 0; i < j[0].size(); ++i) {
    if (!j[0][i].is_string() || !j[1][i].is_string())
      schema_error(sent_index, path + "[" + std::to_string(i) + "]",
                   "expected strings");
    const std::string offsets = j[1][i].get<std::string>();
    const auto colon = offsets.find(':');
    std::size_t start = 0, end = 0;
    try {
      if (colon == std::string::npos) throw std::invalid_argument(offsets);
      start = std::stoull(offsets.substr(0, colon));
      end = std::stoull(offsets.substr(colon + 1));
    } catch (const std::exception&) {
      schema_error(sent_index, path + "[" + std::to_string(i) + "]",
                   "bad offsets '" + offsets + "'");
    }
    span.fragments.push_back({j[0][i].get<std::string>(), start, end});
  }
  return span;
}

ordered_json span_to_json(const Span& span) {
  ordered_json texts = ordered_json::array();
  ordered_json offsets = ordered_json::array();
  for (const auto& f : span.fragments) {
    texts.push_back(f.text);
    offsets.push_back(std::to_string(f.start) + ":" + std::to_string(f.end));
  }
  return ordered_json::array({texts, offsets});
}

}  // namespace

Treebank read_json(std::string_view bytes, std::string name) {
  ordered_json root;
  try {
    root = ordered_json::parse(bytes);
  } catch (const ordered_json::parse_error& e) {
    throw Error(Errc::SCHEMA_ERROR, std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_array())
    throw Error(Errc::SCHEMA_ERROR, "top level must be an array of sentences");

  Treebank t;
  t.name = std::move(name);
  for (std::size_t i = 0; i < root.size(); ++i) {
    const auto& js = root[i];
    if (!js.is_object()) schema_error(i, "$", "expected an object");
    if (!js.contains("sent_id") || !js["sent_id"].is_string())
      schema_error(i, "sent_id", "missing or not a string");
    if (!js.contains("text") || !js["text"].is_string())
      schema_error(i, "text", "missing or not a string");

    Sentence s = make_sentence(js["sent_id"].get<std::string>(),
                               js["text"].get<std::string>());
    if (js.contains("opinions")) {
      if (!js["opinions"].is_array())
        schema_error(i, "opinions", "not an array");
      for (std::size_t k = 0; k < js["opinions"].size(); ++k) {
        const auto& jo = js["opinions"][k];
        const std::string base = "opinions[" + std::to_string(k) + "]";
        if (!jo.is_object()) schema_error(i, base, "expected an object");
        for (const char* key : {"Source", "Target", "Polar_expression"})
          if (!jo.contains(key))
            schema_error(i, base + "." + key, "missing");
        Opinion op;
        op.holder = parse_span(jo["Source"], i, base + ".Source");
        op.target = parse_span(jo["Target"], i, base + ".Target");
        op.expression =
            parse_span(jo["Polar_expression"], i, base + ".Polar_expression");
        if (!jo.contains("Polarity") || !jo["Polarity"].is_string())
          schema_error(i, base + ".Polarity", "missing or not a string");
        const auto pol = parse_polarity(jo["Polarity"].get<std::string>());
        if (!pol)
          schema_error(i, base + ".Polarity",
                       "unknown polarity '" +
                           jo["Polarity"].get<std::string>() + "'");
        op.polarity = *pol;
        if (jo.contains("Intensity") && jo["Intensity"].is_string())
          op.intensity = jo["Intensity"].get<std::string>();
        s.opinions.push_back(std::move(op));
      }
    }
    t.sentences.push_back(std::move(s));
  }
  return t;
}

std::string write_json(const Treebank& t) {
  ordered_json root = ordered_json::array();
  for (const auto& s : t.sentences) {
    ordered_json js;
    js["sent_id"] = s.sent_id;
    js["text"] = s.text;
    ordered_json ops = ordered_json::array();
    for (const auto& op : s.opinions) {
      ordered_json jo;
      jo["Source"] = span_to_json(op.holder);
      jo["Target"] = span_to_json(op.target);
      jo["Polar_expression"] = span_to_json(op.expression);
      jo["Polarity"] = polarity_name(op.polarity);
      jo["Intensity"] = op.intensity;
      ops.push_back(std::move(jo));
    }
    js["opinions"] = std::move(ops);
    root.push_back(std::move(js));
  }
  return root.dump(2) + "\n";
}

// --- graph file ---

namespace {

[[noreturn]] void parse_error(std::size_t line_no, const std::string& what) {
  throw Error(Errc::PARSE_ERROR,
              "line " + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::vector<GraphSentence> read_graph_file(std::string_view content) {
  std::vector<GraphSentence> result;
  GraphSentence current;
  bool in_block = false;

  auto flush = [&](std::size_t line_no) {
    if (!in_block) return;
    current.graph.n = static_cast<int>(current.forms.size());
    for (const auto& e : current.graph.edges)
      if (e.head > current.graph.n)
        parse_error(line_no, "head index " + std::to_string(e.head) +
                                 " out of range");
    sort_edges(current.graph);
    result.push_back(std::move(current));
    current = GraphSentence{};
    in_block = false;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const auto nl = content.find('\n', pos);
    std::string line(content.substr(
        pos, nl == std::string_view::npos ? content.size() - pos : nl - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool last = nl == std::string_view::npos;
    pos = last ? content.size() + 1 : nl + 1;
    ++line_no;

    if (line.empty()) {
      flush(line_no);
      if (last) break;
      continue;
    }
    if (line[0] == '#') {
      in_block = true;
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& x) {
          while (!x.empty() && x.front() == ' ') x.erase(x.begin());
          while (!x.empty() && x.back() == ' ') x.pop_back();
        };
        trim(key);
        trim(value);
        if (key == "sent_id") current.sent_id = value;
        else if (key == "text") current.text = value;
      }
      if (last) flush(line_no);
      continue;
    }

    in_block = true;
    const auto cols = split(line, '\t');
    if (cols.size() != 10)
      parse_error(line_no, "expected 10 tab-separated columns, got " +
                               std::to_string(cols.size()));
    int index = 0;
    try {
      index = std::stoi(cols[0]);
    } catch (const std::exception&) {
      parse_error(line_no, "bad token index '" + cols[0] + "'");
    }
    if (index != static_cast<int>(current.forms.size()) + 1)
      parse_error(line_no, "token index " + cols[0] + " out of order");
    current.forms.push_back(cols[1]);

    if (cols[8] != "_") {
      for (const auto& part : split(cols[8], '|')) {
        const auto colon = part.find(':');
        if (colon == std::string::npos)
          parse_error(line_no, "bad head:label pair '" + part + "'");
        int head = 0;
        try {
          head = std::stoi(part.substr(0, colon));
        } catch (const std::exception&) {
          parse_error(line_no, "bad head '" + part + "'");
        }
        const std::string label = part.substr(colon + 1);
        if (!is_known_label(label))
          throw Error(Errc::LABEL_ERROR, "line " + std::to_string(line_no) +
                                             ": unknown label '" + label + "'");
        if (head == 0 && !is_root_label(label))
          throw Error(Errc::LABEL_ERROR,
                      "line " + std::to_string(line_no) +
                          ": root edge must carry exp:<Polarity>, got '" +
                          label + "'");
        if (head < 0) parse_error(line_no, "negative head");
        if (head == index) parse_error(line_no, "self edge");
        current.graph.edges.push_back({head, index, label});
      }
    }
    if (last) flush(line_no);
  }
  return result;
}

std::string write_graph_file(const std::vector<GraphSentence>& sentences) {
  std::string out;
  for (const auto& gs : sentences) {
    out += "# sent_id = " + gs.sent_id + "\n";
    out += "# text = " + gs.text + "\n";
    std::map<int, std::vector<std::pair<int, std::string>>> by_dep;
    for (const auto& e : gs.graph.edges)
      by_dep[e.dep].emplace_back(e.head, e.label);
    for (std::size_t i = 0; i < gs.forms.size(); ++i) {
      const int index = static_cast<int>(i) + 1;
      out += std::to_string(index) + "\t" + gs.forms[i] + "\t_\t_\t_\t_\t_\t_\t";
      auto it = by_dep.find(index);
      if (it == by_dep.end()) {
        out += "_";
      } else {
        std::sort(it->second.begin(), it->second.end());
        for (std::size_t k = 0; k < it->second.size(); ++k) {
          if (k) out += "|";
          out += std::to_string(it->second[k].first) + ":" +
                 it->second[k].second;
        }
      }
      out += "\t_\n";
    }
    out += "\n";
  }
  return out;
}

Sentence graph_sentence_to_sentence(const GraphSentence& gs) {
  Sentence s = make_sentence(gs.sent_id, gs.text);
  if (s.tokens.size() != gs.forms.size())
    throw Error(Errc::PARSE_ERROR,
                "sentence " + gs.sent_id + ": text tokenizes to " +
                    std::to_string(s.tokens.size()) + " tokens but " +
                    std::to_string(gs.forms.size()) + " rows are present");
  for (std::size_t i = 0; i < gs.forms.size(); ++i)
    if (s.tokens[i].form != gs.forms[i])
      throw Error(Errc::PARSE_ERROR, "sentence " + gs.sent_id + ": token " +
                                         std::to_string(i + 1) + " form '" +
                                         gs.forms[i] +
                                         "' does not match text '" +
                                         s.tokens[i].form + "'");
  return s;
}

}  // namespace sentigraph
