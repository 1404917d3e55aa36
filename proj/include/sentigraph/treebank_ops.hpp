#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentigraph/core.hpp"
#include "sentigraph/parallel.hpp"

// Experimental machinery around treebanks: the three merge/training
// strategies, word-level lexicon translation, and corpus statistics.

namespace sentigraph {

enum class MergeStrategy {
  Single = 1,            // one model per treebank, its own dev file
  MergeTrainAndDev = 2,  // merge all training and all development files
  MergeTrainSingleDev = 3,  // merged training files, per-treebank dev file
};

struct Lexicon {
  std::unordered_map<std::string, std::string> entries;
  bool fold_case = false;

  // nullptr when the word is not covered.
  const std::string* lookup(const std::string& word) const;
};

struct LexiconLoad {
  Lexicon lexicon;
  int duplicate_keys = 0;  // later entries override earlier ones
};

LexiconLoad load_lexicon(std::string_view tsv, bool fold_case = false);

// Concatenation in argument order; sent_ids are prefixed with
// "<treebank name>/" and must stay unique.
Treebank merge_treebanks(const std::vector<Treebank>& parts);

struct TreebankSplits {
  std::string name;
  Treebank train;
  Treebank dev;
  bool has_train = false;
  bool has_dev = false;
};

struct ExperimentPlan {
  Treebank train;
  Treebank dev;
  std::string model_name;
};

std::vector<ExperimentPlan> plan_experiment(
    const std::vector<TreebankSplits>& treebanks, MergeStrategy strategy);

struct TranslationResult {
  Treebank treebank;
  std::int64_t tokens = 0;
  std::int64_t translated = 0;
};

// Replaces each token form via the lexicon (1:1; multiword translations are
// joined with "_"), regenerates the text as single-space-joined forms and
// recomputes every offset. Token counts and encoded graphs are unchanged.
TranslationResult translate_word_level(const Treebank& t, const Lexicon& lex,
                                       Exec exec = Exec::OpenMP);

struct TreebankStats {
  std::int64_t sentences = 0;
  std::int64_t holders = 0;      // opinions with a non-empty holder
  std::int64_t targets = 0;      // opinions with a non-empty target
  std::int64_t expressions = 0;  // one per opinion
};

TreebankStats stats(const Treebank& t);

}  // namespace sentigraph
