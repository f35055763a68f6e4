#include "negsuite/text.hpp"

#include <algorithm>
#include <cctype>

#include "negsuite/catalog.hpp"

namespace negsuite {

namespace {

void push_word(std::string& word, std::vector<std::string>& out) {
  if (word.empty()) return;
  if (word.size() > 3 && word.ends_with("n't")) {
    std::string base = word.substr(0, word.size() - 3);
    if (base == "ca") base = "can";
    if (base == "wo") base = "will";
    out.push_back(base);
    out.emplace_back("not");
  } else {
    out.push_back(word);
  }
  word.clear();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '\'' || c == '-' || c >= 0x80) {
      word.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '.' || c == '!' || c == '?') {
      push_word(word, out);
      if (!out.empty() && out.back() != kSentenceBreak) out.emplace_back(kSentenceBreak);
    } else {
      push_word(word, out);
    }
  }
  push_word(word, out);
  return out;
}

ConceptSet ScopedParse::affirmed() const {
  ConceptSet out;
  for (const auto& m : mentions) {
    if (!m.negated) out.insert(m.item);
  }
  return out;
}

ConceptSet ScopedParse::negated() const {
  ConceptSet out;
  for (const auto& m : mentions) {
    if (m.negated) out.insert(m.item);
  }
  return out;
}

ScopedParse parse_scoped(std::string_view text, std::span<const Concept> concepts,
                         std::span<const std::string> negation_cues) {
  // Concept token sequences, longest first so greedy matching prefers them.
  std::vector<std::pair<std::vector<std::string>, const Concept*>> patterns;
  for (const auto& c : concepts) patterns.emplace_back(tokenize(c.name()), &c);
  std::stable_sort(patterns.begin(), patterns.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });

  auto is_cue = [&](const std::string& t) {
    return std::find(negation_cues.begin(), negation_cues.end(), t) != negation_cues.end();
  };

  struct Item {
    const Concept* item;  // null for plain tokens
    bool cue;
  };

  ScopedParse result;
  const auto tokens = tokenize(text);
  std::vector<Item> clause;

  auto flush = [&] {
    for (std::size_t i = 0; i < clause.size(); ++i) {
      if (!clause[i].item) continue;
      bool cue_before = false;
      for (std::size_t j = 0; j < i; ++j) cue_before |= clause[j].cue;
      bool negated = cue_before;
      if (!negated) {
        for (std::size_t j = i + 1; j < clause.size(); ++j) {
          if (!clause[j].cue) continue;
          bool object_after = false;
          for (std::size_t m = j + 1; m < clause.size(); ++m) object_after |= clause[m].item != nullptr;
          negated = !object_after;
          break;
        }
      }
      result.mentions.push_back({*clause[i].item, negated});
    }
    clause.clear();
  };

  for (std::size_t i = 0; i < tokens.size();) {
    const auto& tok = tokens[i];
    if (tok == kSentenceBreak) {
      flush();
      ++i;
      continue;
    }
    if (tok == "but") {
      flush();
      result.other_tokens.push_back(tok);
      ++i;
      continue;
    }
    const Concept* matched = nullptr;
    std::size_t len = 0;
    for (const auto& [seq, target] : patterns) {
      if (seq.empty() || i + seq.size() > tokens.size()) continue;
      if (std::equal(seq.begin(), seq.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
        matched = target;
        len = seq.size();
        break;
      }
    }
    if (matched) {
      clause.push_back({matched, false});
      i += len;
    } else {
      clause.push_back({nullptr, is_cue(tok)});
      result.other_tokens.push_back(tok);
      ++i;
    }
  }
  flush();
  return result;
}

ScopedParse parse_scoped(std::string_view text, std::span<const Concept> concepts) {
  return parse_scoped(text, concepts, default_catalog().negation_cues);
}

bool mentions(std::string_view text, const Concept& target) {
  const auto tokens = tokenize(text);
  const auto seq = tokenize(target.name());
  if (seq.empty()) return false;
  return std::search(tokens.begin(), tokens.end(), seq.begin(), seq.end()) != tokens.end();
}

}  // namespace negsuite
