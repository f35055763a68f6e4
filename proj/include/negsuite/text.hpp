#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "negsuite/core.hpp"

namespace negsuite {

// Sentence boundary marker emitted by tokenize().
inline constexpr std::string_view kSentenceBreak = ".";

// Lowercased word tokens. Sentence-final punctuation (. ! ?) becomes a
// kSentenceBreak token; other punctuation is dropped; "n't" contractions
// expand to "<base> not".
std::vector<std::string> tokenize(std::string_view text);

struct ConceptMention {
  Concept item;
  bool negated = false;
};

struct ScopedParse {
  std::vector<ConceptMention> mentions;     // in text order
  std::vector<std::string> other_tokens;    // every non-concept token, cues included
  ConceptSet affirmed() const;
  ConceptSet negated() const;
};

// Splits the text into clauses at sentence boundaries and at "but", and
// matches concepts greedily (longest token sequence first). A mention is
// negated when a negation cue precedes it in its clause, or when a cue
// follows it and no other mention follows that cue in the clause
// ("A is not present"). Everything else is affirmed.
ScopedParse parse_scoped(std::string_view text, std::span<const Concept> concepts,
                         std::span<const std::string> negation_cues);

// parse_scoped with the catalog's negation cues.
ScopedParse parse_scoped(std::string_view text, std::span<const Concept> concepts);

// True when `text` mentions `concept` as a whole-token sequence.
bool mentions(std::string_view text, const Concept& target);

}  // namespace negsuite
