#include "sentigraph/core.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "sentigraph/text.hpp"

namespace sentigraph {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MISALIGNED_SPAN: return "MISALIGNED_SPAN";
    case Errc::LABEL_COLLISION: return "LABEL_COLLISION";
    case Errc::SCHEMA_ERROR: return "SCHEMA_ERROR";
    case Errc::PARSE_ERROR: return "PARSE_ERROR";
    case Errc::LABEL_ERROR: return "LABEL_ERROR";
    case Errc::TREEBANK_MISMATCH: return "TREEBANK_MISMATCH";
    case Errc::DIM_MISMATCH: return "DIM_MISMATCH";
    case Errc::NONFINITE_LOSS: return "NONFINITE_LOSS";
    case Errc::EMPTY_TREEBANK: return "EMPTY_TREEBANK";
    case Errc::NON_CONVERGED: return "NON_CONVERGED";
    case Errc::BAD_MAGIC: return "BAD_MAGIC";
    case Errc::VERSION_UNSUPPORTED: return "VERSION_UNSUPPORTED";
    case Errc::SHAPE_MISMATCH: return "SHAPE_MISMATCH";
    case Errc::DUPLICATE_ID: return "DUPLICATE_ID";
    case Errc::MISSING_SPLIT: return "MISSING_SPLIT";
    case Errc::MALFORMED_LINE: return "MALFORMED_LINE";
    case Errc::MISSING_VECTOR: return "MISSING_VECTOR";
    case Errc::IO_ERROR: return "IO_ERROR";
  }
  return "UNKNOWN";
}

std::optional<Polarity> parse_polarity(const std::string& s) {
  if (s == "Positive") return Polarity::Positive;
  if (s == "Negative") return Polarity::Negative;
  if (s == "Neutral") return Polarity::Neutral;
  return std::nullopt;
}

const char* polarity_name(Polarity p) {
  switch (p) {
    case Polarity::Positive: return "Positive";
    case Polarity::Negative: return "Negative";
    case Polarity::Neutral: return "Neutral";
  }
  return "Neutral";
}

namespace {

void check_span(const Span& span, const Sentence& s, std::size_t text_len,
                const std::string& where, ValidationReport& report) {
  const auto& frags = span.fragments;
  for (std::size_t i = 0; i < frags.size(); ++i) {
    const auto& f = frags[i];
    const std::string loc = where + " fragment " + std::to_string(i);
    if (f.start >= f.end) {
      report.push_back({"BAD_FRAGMENT_OFFSETS", loc});
      continue;
    }
    if (f.end > text_len) {
      report.push_back({"OFFSET_OUT_OF_RANGE", loc});
      continue;
    }
    if (text::cp_slice(s.text, f.start, f.end) != f.text)
      report.push_back({"FRAGMENT_TEXT_MISMATCH", loc});
    // Boundaries must coincide with token boundaries.
    bool start_ok = false, end_ok = false;
    for (const auto& t : s.tokens) {
      if (t.start == f.start) start_ok = true;
      if (t.end == f.end) end_ok = true;
    }
    if (!start_ok || !end_ok)
      report.push_back({"SPAN_NOT_TOKEN_ALIGNED", loc});
  }
  for (std::size_t i = 1; i < frags.size(); ++i)
    if (frags[i].start < frags[i - 1].end)
      report.push_back({"FRAGMENT_OVERLAP",
                        where + " fragments " + std::to_string(i - 1) + "," +
                            std::to_string(i)});
}

std::size_t first_offset(const Span& sp) {
  return sp.empty() ? static_cast<std::size_t>(-1) : sp.fragments[0].start;
}

// Total order on spans: fragment-by-fragment (start, end), shorter list first.
int compare_spans(const Span& a, const Span& b) {
  const std::size_t n = std::min(a.fragments.size(), b.fragments.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& fa = a.fragments[i];
    const auto& fb = b.fragments[i];
    if (fa.start != fb.start) return fa.start < fb.start ? -1 : 1;
    if (fa.end != fb.end) return fa.end < fb.end ? -1 : 1;
  }
  if (a.fragments.size() != b.fragments.size())
    return a.fragments.size() < b.fragments.size() ? -1 : 1;
  return 0;
}

bool opinion_less(const Opinion& a, const Opinion& b) {
  const auto ka = std::tuple(first_offset(a.expression), first_offset(a.target),
                             first_offset(a.holder));
  const auto kb = std::tuple(first_offset(b.expression), first_offset(b.target),
                             first_offset(b.holder));
  if (ka != kb) return ka < kb;
  if (int c = compare_spans(a.expression, b.expression)) return c < 0;
  if (int c = compare_spans(a.target, b.target)) return c < 0;
  if (int c = compare_spans(a.holder, b.holder)) return c < 0;
  return static_cast<int>(a.polarity) < static_cast<int>(b.polarity);
}

}  // namespace

ValidationReport validate_sentence(const Sentence& s) {
  ValidationReport report;
  const std::size_t text_len = text::cp_length(s.text);

  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    const auto& t = s.tokens[i];
    const std::string loc = "token " + std::to_string(i + 1);
    if (t.index != static_cast<int>(i) + 1)
      report.push_back({"TOKEN_INDEX", loc});
    if (t.start >= t.end) {
      report.push_back({"BAD_TOKEN_OFFSETS", loc});
      continue;
    }
    if (t.end > text_len) {
      report.push_back({"OFFSET_OUT_OF_RANGE", loc});
      continue;
    }
    if (text::cp_slice(s.text, t.start, t.end) != t.form)
      report.push_back({"TOKEN_TEXT_MISMATCH", loc});
    if (i > 0 && s.tokens[i - 1].end > t.start)
      report.push_back({"TOKEN_ORDER", loc});
  }

  for (std::size_t i = 0; i < s.opinions.size(); ++i) {
    const auto& op = s.opinions[i];
    const std::string where = "opinion " + std::to_string(i);
    if (op.expression.empty())
      report.push_back({"EMPTY_EXPRESSION", where});
    check_span(op.holder, s, text_len, where + ", holder", report);
    check_span(op.target, s, text_len, where + ", target", report);
    check_span(op.expression, s, text_len, where + ", expression", report);
  }
  return report;
}

ValidationReport validate_treebank(const Treebank& t) {
  ValidationReport report;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < t.sentences.size(); ++i) {
    const auto& s = t.sentences[i];
    const std::string loc = "sentence " + std::to_string(i) + " (" + s.sent_id + ")";
    if (s.sent_id.empty()) report.push_back({"EMPTY_SENT_ID", loc});
    if (!seen.insert(s.sent_id).second)
      report.push_back({"DUPLICATE_SENT_ID", loc});
    for (auto& v : validate_sentence(s))
      report.push_back({v.code, loc + ": " + v.location});
  }
  return report;
}

std::vector<int> align_span_to_tokens(const Span& span, const Sentence& s) {
  std::vector<int> indices;
  for (const auto& f : span.fragments) {
    for (const auto& t : s.tokens) {
      if (f.start <= t.start && t.end <= f.end) {
        indices.push_back(t.index);
      } else if ((t.start < f.start && f.start < t.end) ||
                 (t.start < f.end && f.end < t.end)) {
        throw Error(Errc::MISALIGNED_SPAN,
                    "fragment " + std::to_string(f.start) + ":" +
                        std::to_string(f.end) + " cuts token '" + t.form + "'");
      }
    }
  }
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return indices;
}

bool opinions_equal(const Opinion& a, const Opinion& b) {
  if (a.polarity != b.polarity) return false;
  auto span_eq = [](const Span& x, const Span& y) {
    return compare_spans(x, y) == 0;
  };
  return span_eq(a.holder, b.holder) && span_eq(a.target, b.target) &&
         span_eq(a.expression, b.expression);
}

std::vector<Opinion> canonicalize_opinions(std::vector<Opinion> ops) {
  for (auto& op : ops) {
    auto by_start = [](const SpanFragment& a, const SpanFragment& b) {
      return a.start < b.start;
    };
    std::sort(op.holder.fragments.begin(), op.holder.fragments.end(), by_start);
    std::sort(op.target.fragments.begin(), op.target.fragments.end(), by_start);
    std::sort(op.expression.fragments.begin(), op.expression.fragments.end(),
              by_start);
  }
  std::sort(ops.begin(), ops.end(), opinion_less);
  ops.erase(std::unique(ops.begin(), ops.end(), opinions_equal), ops.end());
  return ops;
}

}  // namespace sentigraph
