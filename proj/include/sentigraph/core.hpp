#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sentigraph/error.hpp"

// In-memory model of opinion treebanks. Character offsets are 0-based,
// end-exclusive and count Unicode scalar values. Values are immutable by
// convention once built; every operation here is a pure function.

namespace sentigraph {

struct Token {
  int index = 0;  // 1-based position in the sentence
  std::string form;
  std::size_t start = 0;
  std::size_t end = 0;
};

struct SpanFragment {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
};

// Ordered, non-overlapping fragments; empty list means the element is absent.
struct Span {
  std::vector<SpanFragment> fragments;

  bool empty() const { return fragments.empty(); }
};

enum class Polarity { Positive, Negative, Neutral };

std::optional<Polarity> parse_polarity(const std::string& s);
const char* polarity_name(Polarity p);

struct Opinion {
  Span holder;
  Span target;
  Span expression;  // must have at least one fragment
  Polarity polarity = Polarity::Neutral;
  // Opaque metadata; never encoded into graphs and ignored by equality.
  std::string intensity = "Average";
};

struct Sentence {
  std::string sent_id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<Opinion> opinions;
};

struct Treebank {
  std::string name;
  std::vector<Sentence> sentences;
};

struct Violation {
  std::string code;      // e.g. "OFFSET_OUT_OF_RANGE"
  std::string location;  // e.g. "opinion 2, expression fragment 0"
};

using ValidationReport = std::vector<Violation>;

// Empty iff all structural invariants hold and every opinion fragment starts
// and ends exactly on token boundaries. Violations are data, not failures.
ValidationReport validate_sentence(const Sentence& s);

// Per-sentence reports plus DUPLICATE_SENT_ID checks across the treebank.
ValidationReport validate_treebank(const Treebank& t);

// Indices of all tokens fully covered by the span's fragments, increasing.
// Throws MISALIGNED_SPAN if a fragment boundary falls strictly inside a token.
std::vector<int> align_span_to_tokens(const Span& span, const Sentence& s);

// Ignores intensity: equality of (holder, target, expression, polarity).
bool opinions_equal(const Opinion& a, const Opinion& b);

// Deterministic order used by round-trip comparisons: sorts fragments within
// each span, sorts opinions by (expression, target, holder, polarity) with
// first-fragment offsets as the primary keys, and drops exact duplicates.
// Idempotent.
std::vector<Opinion> canonicalize_opinions(std::vector<Opinion> ops);

}  // namespace sentigraph
