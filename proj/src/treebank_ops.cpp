#include "sentigraph/treebank_ops.hpp"

#include <algorithm>
#include <set>

#include "sentigraph/codec.hpp"
#include "sentigraph/text.hpp"

namespace sentigraph {

const std::string* Lexicon::lookup(const std::string& word) const {
  const auto it =
      entries.find(fold_case ? text::fold_ascii(word) : word);
  return it == entries.end() ? nullptr : &it->second;
}

LexiconLoad load_lexicon(std::string_view tsv, bool fold_case) {
  LexiconLoad out;
  out.lexicon.fold_case = fold_case;
  std::size_t pos = 0, line_no = 0;
  while (pos < tsv.size()) {
    const auto nl = tsv.find('\n', pos);
    std::string line(tsv.substr(
        pos, nl == std::string_view::npos ? tsv.size() - pos : nl - pos));
    pos = nl == std::string_view::npos ? tsv.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw Error(Errc::MALFORMED_LINE,
                  "line " + std::to_string(line_no) +
                      ": expected exactly two tab-separated columns");
    std::string key = line.substr(0, tab);
    std::string value = line.substr(tab + 1);
    if (key.empty() || value.empty())
      throw Error(Errc::MALFORMED_LINE,
                  "line " + std::to_string(line_no) + ": empty column");
    if (fold_case) key = text::fold_ascii(key);
    auto [it, inserted] = out.lexicon.entries.emplace(key, value);
    if (!inserted) {
      it->second = std::move(value);  // last entry wins
      ++out.duplicate_keys;
    }
  }
  return out;
}

Treebank merge_treebanks(const std::vector<Treebank>& parts) {
  if (parts.empty())
    throw Error(Errc::EMPTY_TREEBANK, "merge needs at least one treebank");
  Treebank merged;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) merged.name += "+";
    merged.name += parts[i].name;
  }
  std::set<std::string> seen;
  for (const auto& part : parts) {
    for (const auto& s : part.sentences) {
      Sentence copy = s;
      copy.sent_id = part.name + "/" + s.sent_id;
      if (!seen.insert(copy.sent_id).second)
        throw Error(Errc::DUPLICATE_ID,
                    "sent_id '" + copy.sent_id + "' occurs twice after merging");
      merged.sentences.push_back(std::move(copy));
    }
  }
  return merged;
}

std::vector<ExperimentPlan> plan_experiment(
    const std::vector<TreebankSplits>& treebanks, MergeStrategy strategy) {
  if (treebanks.empty())
    throw Error(Errc::MISSING_SPLIT, "no treebanks given");
  for (const auto& tb : treebanks) {
    if (!tb.has_train)
      throw Error(Errc::MISSING_SPLIT, "treebank '" + tb.name + "' has no train split");
    if (!tb.has_dev)
      throw Error(Errc::MISSING_SPLIT, "treebank '" + tb.name + "' has no dev split");
  }

  std::vector<ExperimentPlan> plans;
  if (strategy == MergeStrategy::Single) {
    for (const auto& tb : treebanks)
      plans.push_back({tb.train, tb.dev, tb.name});
    return plans;
  }

  std::vector<Treebank> trains, devs;
  for (const auto& tb : treebanks) {
    trains.push_back(tb.train);
    devs.push_back(tb.dev);
  }
  const Treebank merged_train =
      trains.size() == 1 ? trains[0] : merge_treebanks(trains);

  if (strategy == MergeStrategy::MergeTrainAndDev) {
    const Treebank merged_dev = devs.size() == 1 ? devs[0] : merge_treebanks(devs);
    plans.push_back({merged_train, merged_dev, merged_train.name});
    return plans;
  }

  // Strategy 3: one model per treebank, all sharing the merged train set.
  for (const auto& tb : treebanks)
    plans.push_back({merged_train, tb.dev, tb.name});
  return plans;
}

namespace {

Sentence translate_sentence(const Sentence& s, const Lexicon& lex,
                            std::int64_t& translated) {
  // New forms, 1:1 with the original tokens.
  std::vector<std::string> forms;
  forms.reserve(s.tokens.size());
  for (const auto& tok : s.tokens) {
    if (const std::string* hit = lex.lookup(tok.form)) {
      std::string form = *hit;
      std::replace(form.begin(), form.end(), ' ', '_');
      forms.push_back(std::move(form));
      ++translated;
    } else {
      forms.push_back(tok.form);
    }
  }

  Sentence out;
  out.sent_id = s.sent_id;
  std::vector<std::size_t> starts(forms.size()), ends(forms.size());
  std::size_t cp = 0;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    if (i) {
      out.text += ' ';
      ++cp;
    }
    starts[i] = cp;
    cp += text::cp_length(forms[i]);
    ends[i] = cp;
    out.text += forms[i];
    out.tokens.push_back(
        {static_cast<int>(i) + 1, forms[i], starts[i], ends[i]});
  }

  // Rebuild each fragment from the token run it covered originally.
  auto rebuild = [&](const Span& span) {
    Span result;
    for (const auto& frag : span.fragments) {
      int first = -1, last = -1;
      for (const auto& tok : s.tokens) {
        if (frag.start <= tok.start && tok.end <= frag.end) {
          if (first < 0) first = tok.index;
          last = tok.index;
        }
      }
      if (first < 0) continue;  // validated input never hits this
      const std::size_t lo = starts[static_cast<std::size_t>(first) - 1];
      const std::size_t hi = ends[static_cast<std::size_t>(last) - 1];
      result.fragments.push_back({text::cp_slice(out.text, lo, hi), lo, hi});
    }
    return result;
  };

  for (const auto& op : s.opinions) {
    Opinion copy;
    copy.holder = rebuild(op.holder);
    copy.target = rebuild(op.target);
    copy.expression = rebuild(op.expression);
    copy.polarity = op.polarity;
    copy.intensity = op.intensity;
    out.opinions.push_back(std::move(copy));
  }
  return out;
}

}  // namespace

TranslationResult translate_word_level(const Treebank& t, const Lexicon& lex,
                                       Exec exec) {
  TranslationResult result;
  result.treebank.name = t.name;
  result.treebank.sentences.resize(t.sentences.size());
  std::vector<std::int64_t> translated(t.sentences.size(), 0);
  for_each_index(static_cast<std::int64_t>(t.sentences.size()), exec,
                 [&](std::int64_t i) {
                   result.treebank.sentences[i] =
                       translate_sentence(t.sentences[i], lex, translated[i]);
                 });
  for (std::size_t i = 0; i < t.sentences.size(); ++i) {
    result.tokens += static_cast<std::int64_t>(t.sentences[i].tokens.size());
    result.translated += translated[i];
  }
  return result;
}

TreebankStats stats(const Treebank& t) {
  TreebankStats out;
  out.sentences = static_cast<std::int64_t>(t.sentences.size());
  for (const auto& s : t.sentences) {
    for (const auto& op : s.opinions) {
      if (!op.holder.empty()) ++out.holders;
      if (!op.target.empty()) ++out.targets;
      ++out.expressions;
    }
  }
  return out;
}

}  // namespace sentigraph
