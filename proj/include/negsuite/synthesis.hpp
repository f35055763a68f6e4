#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "negsuite/catalog.hpp"
#include "negsuite/core.hpp"
#include "negsuite/rng.hpp"

namespace negsuite {

// Text rewriting hook, e.g. an LLM paraphraser. Outputs must be non-empty
// and meaning-preserving; tags are never recomputed from them.
class Paraphraser {
 public:
  virtual ~Paraphraser() = default;
  virtual std::string paraphrase(const std::string& text) = 0;
};

class IdentityParaphraser final : public Paraphraser {
 public:
  std::string paraphrase(const std::string& text) override { return text; }
};

enum class Placement { prefix, suffix };

// Joins "There is no {x} in the image." to the original caption. A suffix
// join strips one trailing "." from the original; sentences are separated
// by exactly one space. The result is hybrid when the original mentions any
// of `known_positives`, which then form the affirmed set; otherwise negated.
// Throws EmptyCaption.
CaptionRecord negate_caption(std::string_view original, const Concept& x, Placement placement,
                             Paraphraser* paraphraser = nullptr,
                             const ConceptSet& known_positives = {});

// One four-option item: a correct option whose template is drawn uniformly
// from {affirmation, negation, hybrid}, plus one false-affirmation, one
// false-negation, and one false-hybrid distractor, shuffled by `rng`.
// Throws InsufficientConcepts when positives or negatives are empty.
MCQItem make_mcq(const SceneRecord& scene, std::span<const Concept> negatives, Rng& rng,
                 Paraphraser* paraphraser = nullptr);

// Three distinct hybrid captions per scene. Combinations are enumerated
// negative-major, then placement (prefix, suffix), then caption, and the
// first three distinct texts are kept. Throws InsufficientConcepts when
// fewer than three distinct combinations exist.
std::vector<CaptionRecord> make_negcap_records(const SceneRecord& scene,
                                               std::span<const Concept> negatives,
                                               Paraphraser* paraphraser = nullptr);

// Training-export variant of make_mcq (same generator, id suffix ".negmcq").
MCQItem make_negmcq_record(const SceneRecord& scene, std::span<const Concept> negatives, Rng& rng);

// One Retrieval-Neg query per scene caption: caption i negates
// negatives[i % n] with a placement drawn from `rng`.
std::vector<CaptionRecord> make_retrieval_captions(const SceneRecord& scene,
                                                   std::span<const Concept> negatives, Rng& rng,
                                                   Paraphraser* paraphraser = nullptr);

enum class BinaryMode { affirmation_control, negation };

// Two-option item, condition-first, with correct_index 0 (condition
// present). Use label_binary_task to apply the ground-truth label. Concept
// names are title-cased in the rendered text ("Lung Opacity").
// Throws MissingDistractor.
MCQItem make_binary_task(const Concept& condition, BinaryMode mode,
                         const Concept* distractor = nullptr);

// Sets correct_index and truth tags for a binary item from the label.
// For affirmation control, `condition_present` false means the distractor
// holds.
MCQItem label_binary_task(MCQItem item, bool condition_present);

std::string title_case(std::string_view text);

// Per-scene random stream for parallel-safe generation.
inline Rng scene_rng(std::uint64_t global_seed, std::string_view scene_id) {
  return Rng(derive_seed(global_seed, scene_id));
}

}  // namespace negsuite
