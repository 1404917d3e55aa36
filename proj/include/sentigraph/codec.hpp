#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sentigraph/core.hpp"
#include "sentigraph/parallel.hpp"

// Conversions between opinion JSON, the 10-column graph file format and
// in-memory dependency graphs, under the head-first / head-final encodings.

namespace sentigraph {

struct DepEdge {
  int head = 0;  // 0 is the virtual root
  int dep = 0;   // >= 1
  std::string label;
};

// Labeled directed edges over 1..n plus root 0; kept sorted by (head, dep),
// one label per (head, dep) pair.
struct DepGraph {
  int n = 0;
  std::vector<DepEdge> edges;
};

enum class Mode { HeadFirst, HeadFinal };

// The closed label inventory, in id order. Root edges carry exp:<Polarity>.
const std::vector<std::string>& label_set();
bool is_root_label(const std::string& label);
bool is_known_label(const std::string& label);
std::string root_label(Polarity p);

// Splits on maximal runs of Unicode whitespace; offsets are authoritative.
std::vector<Token> tokenize(std::string_view text);

// Builds a sentence from raw pieces, tokenizing the text.
Sentence make_sentence(std::string sent_id, std::string text,
                       std::vector<Opinion> opinions = {});

struct EncodeOptions {
  // Two opinions forcing different labels onto one (head, dep) pair is a lossy
  // case: error by default, last-writer-wins when forced.
  bool force = false;
};

DepGraph encode(const Sentence& s, Mode mode, const EncodeOptions& opts = {});

struct DecodeResult {
  std::vector<Opinion> opinions;  // canonicalized
  int dropped_edges = 0;          // DANGLING_EDGE count
};

DecodeResult decode(const DepGraph& g, const Sentence& s);

std::vector<DepGraph> encode_treebank(const Treebank& t, Mode mode,
                                      const EncodeOptions& opts = {},
                                      Exec exec = Exec::OpenMP);

// --- opinion JSON (shared-task schema) ---

Treebank read_json(std::string_view bytes, std::string name = "");
std::string write_json(const Treebank& t);

// --- graph file (CoNLL-U style, 10 tab-separated columns) ---

struct GraphSentence {
  std::string sent_id;
  std::string text;
  std::vector<std::string> forms;
  DepGraph graph;
};

std::vector<GraphSentence> read_graph_file(std::string_view content);
std::string write_graph_file(const std::vector<GraphSentence>& sentences);

// Rebuilds a Sentence (without opinions) from a graph-file block; the forms
// must match the whitespace tokenization of the recorded text.
Sentence graph_sentence_to_sentence(const GraphSentence& gs);

}  // namespace sentigraph
