#include "negsuite/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "negsuite/errors.hpp"
#include "negsuite/text.hpp"

namespace negsuite {

namespace {

struct Draft {
  std::string text;
  TemplateType type;
  OptionTruth truth;
};

std::string strip_trailing_period(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (!s.empty() && s.back() == '.') s.remove_suffix(1);
  return std::string(s);
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string affirm(const Concept& a) {
  return render(default_catalog().mcq_affirmation[0], {{"A", a.name()}});
}

std::string affirm_two(const Concept& a, const Concept& c) {
  return render(default_catalog().mcq_affirmation[1], {{"A", a.name()}, {"C", c.name()}});
}

std::string negate(const Concept& b) {
  return render(default_catalog().mcq_negation[0], {{"B", b.name()}});
}

std::string hybrid(const Concept& a, const Concept& b) {
  return render(default_catalog().mcq_hybrid[0], {{"A", a.name()}, {"B", b.name()}});
}

// Picks an element of `pool` different from `other`; pool must hold one.
const Concept& pick_other(const std::vector<Concept>& pool, const Concept& other, Rng& rng) {
  std::vector<const Concept*> rest;
  for (const auto& c : pool) {
    if (c != other) rest.push_back(&c);
  }
  return *rest[rng.index(rest.size())];
}

Draft correct_option(const std::vector<Concept>& pos, const std::vector<Concept>& neg, Rng& rng) {
  switch (rng.index(3)) {
    case 0: {
      const Concept& a = rng.pick(pos);
      if (pos.size() >= 2 && rng.coin()) {
        return {affirm_two(a, pick_other(pos, a, rng)), TemplateType::affirmation,
                OptionTruth::correct};
      }
      return {affirm(a), TemplateType::affirmation, OptionTruth::correct};
    }
    case 1:
      return {negate(rng.pick(neg)), TemplateType::negation, OptionTruth::correct};
    default: {
      const Concept& a = rng.pick(pos);
      return {hybrid(a, rng.pick(neg)), TemplateType::hybrid, OptionTruth::correct};
    }
  }
}

// False-hybrid variants: (x in neg, not y in pos); (A in pos, not y in pos);
// (x in neg, not B in neg). The last two need two concepts on one side.
Draft false_hybrid(const std::vector<Concept>& pos, const std::vector<Concept>& neg, Rng& rng) {
  std::vector<int> variants{0};
  if (pos.size() >= 2) variants.push_back(1);
  if (neg.size() >= 2) variants.push_back(2);
  switch (rng.pick(variants)) {
    case 0: {
      const Concept& x = rng.pick(neg);
      return {hybrid(x, rng.pick(pos)), TemplateType::hybrid, OptionTruth::false_hybrid};
    }
    case 1: {
      const Concept& a = rng.pick(pos);
      return {hybrid(a, pick_other(pos, a, rng)), TemplateType::hybrid, OptionTruth::false_hybrid};
    }
    default: {
      const Concept& x = rng.pick(neg);
      return {hybrid(x, pick_other(neg, x, rng)), TemplateType::hybrid, OptionTruth::false_hybrid};
    }
  }
}

MCQItem generate_mcq(const SceneRecord& scene, std::span<const Concept> negatives, Rng& rng,
                     Paraphraser* paraphraser, const std::string& id) {
  std::vector<Concept> pos(scene.positives.begin(), scene.positives.end());
  std::vector<Concept> neg;
  for (const auto& c : negatives) {
    if (scene.positives.contains(c)) {
      throw ContractError("negative " + c.name() + " is a positive of scene " + scene.id);
    }
    if (std::find(neg.begin(), neg.end(), c) == neg.end()) neg.push_back(c);
  }
  if (pos.empty()) throw InsufficientConcepts("scene " + scene.id + " has no positives");
  if (neg.empty()) throw InsufficientConcepts("scene " + scene.id + " has no negatives");

  std::vector<Draft> drafts;
  drafts.push_back(correct_option(pos, neg, rng));
  drafts.push_back({affirm(rng.pick(neg)), TemplateType::affirmation, OptionTruth::false_affirmation});
  drafts.push_back({negate(rng.pick(pos)), TemplateType::negation, OptionTruth::false_negation});
  drafts.push_back(false_hybrid(pos, neg, rng));
  rng.shuffle(drafts);

  MCQItem item;
  item.id = id;
  item.scene_id = scene.id;
  for (std::size_t j = 0; j < drafts.size(); ++j) {
    item.options.push_back(drafts[j].text);
    item.option_template.push_back(drafts[j].type);
    item.option_truth.push_back(drafts[j].truth);
    if (drafts[j].truth == OptionTruth::correct) item.correct_index = j;
  }
  if (paraphraser) {
    for (auto& text : item.options) {
      auto p = trim(paraphraser->paraphrase(text));
      bool clash = std::count(item.options.begin(), item.options.end(), p) > 0;
      if (!p.empty() && !clash) text = std::move(p);
    }
  }
  item.validate();
  return item;
}

}  // namespace

CaptionRecord negate_caption(std::string_view original, const Concept& x, Placement placement,
                             Paraphraser* paraphraser, const ConceptSet& known_positives) {
  std::string base = trim(original);
  if (base.empty() || strip_trailing_period(base).empty()) throw EmptyCaption();
  const std::string neg_sentence = render(default_catalog().retrieval_negation, {{"x", x.name()}});

  CaptionRecord rec;
  if (placement == Placement::prefix) {
    rec.text = neg_sentence + " " + base;
  } else {
    rec.text = strip_trailing_period(base) + ". " + neg_sentence;
  }
  for (const auto& p : known_positives) {
    if (p != x && mentions(base, p)) rec.affirmed.insert(p);
  }
  rec.negated = {x};
  rec.polarity = rec.affirmed.empty() ? Polarity::negated : Polarity::hybrid;
  if (paraphraser) {
    auto p = trim(paraphraser->paraphrase(rec.text));
    if (!p.empty()) rec.text = std::move(p);
  }
  return rec;
}

MCQItem make_mcq(const SceneRecord& scene, std::span<const Concept> negatives, Rng& rng,
                 Paraphraser* paraphraser) {
  return generate_mcq(scene, negatives, rng, paraphraser, scene.id + ".mcq");
}

MCQItem make_negmcq_record(const SceneRecord& scene, std::span<const Concept> negatives, Rng& rng) {
  return generate_mcq(scene, negatives, rng, nullptr, scene.id + ".negmcq");
}

std::vector<CaptionRecord> make_negcap_records(const SceneRecord& scene,
                                               std::span<const Concept> negatives,
                                               Paraphraser* paraphraser) {
  if (negatives.empty()) throw InsufficientConcepts("scene " + scene.id + " has no negatives");
  if (scene.captions.empty()) throw EmptyCaption();

  std::vector<CaptionRecord> out;
  std::vector<std::string> seen;
  for (const auto& x : negatives) {
    for (auto placement : {Placement::prefix, Placement::suffix}) {
      for (const auto& caption : scene.captions) {
        if (out.size() == 3) break;
        auto rec = negate_caption(caption, x, placement, nullptr, scene.positives);
        if (std::find(seen.begin(), seen.end(), rec.text) != seen.end()) continue;
        seen.push_back(rec.text);
        rec.id = scene.id + "#cap" + std::to_string(out.size());
        rec.scene_id = scene.id;
        out.push_back(std::move(rec));
      }
    }
  }
  if (out.size() < 3) {
    throw InsufficientConcepts("scene " + scene.id + " yields fewer than 3 distinct captions");
  }
  if (paraphraser) {
    for (auto& rec : out) {
      auto p = trim(paraphraser->paraphrase(rec.text));
      if (!p.empty()) rec.text = std::move(p);
    }
  }
  return out;
}

std::vector<CaptionRecord> make_retrieval_captions(const SceneRecord& scene,
                                                   std::span<const Concept> negatives, Rng& rng,
                                                   Paraphraser* paraphraser) {
  if (negatives.empty()) throw InsufficientConcepts("scene " + scene.id + " has no negatives");
  std::vector<CaptionRecord> out;
  for (std::size_t i = 0; i < scene.captions.size(); ++i) {
    auto placement = rng.coin() ? Placement::prefix : Placement::suffix;
    auto rec = negate_caption(scene.captions[i], negatives[i % negatives.size()], placement,
                              paraphraser, scene.positives);
    rec.id = scene.id + "#neg" + std::to_string(i);
    rec.scene_id = scene.id;
    out.push_back(std::move(rec));
  }
  return out;
}

std::string title_case(std::string_view text) {
  std::string out(text);
  bool start = true;
  for (auto& ch : out) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || ch == '-') {
      start = true;
    } else {
      if (start) ch = static_cast<char>(std::toupper(c));
      start = false;
    }
  }
  return out;
}

MCQItem make_binary_task(const Concept& condition, BinaryMode mode, const Concept* distractor) {
  const auto& cat = default_catalog();
  const auto name = title_case(condition.name());
  MCQItem item;
  item.scene_id = condition.name();
  item.options.push_back(render(cat.binary_affirmation, {{"x", name}}));
  item.option_template.push_back(TemplateType::affirmation);
  item.option_truth.push_back(OptionTruth::correct);
  if (mode == BinaryMode::affirmation_control) {
    if (!distractor || *distractor == condition) {
      throw MissingDistractor("affirmation control for " + condition.name() + " needs a distinct distractor");
    }
    item.id = condition.name() + ".affirm-vs-" + distractor->name();
    item.options.push_back(render(cat.binary_affirmation, {{"x", title_case(distractor->name())}}));
    item.option_template.push_back(TemplateType::affirmation);
    item.option_truth.push_back(OptionTruth::false_affirmation);
  } else {
    item.id = condition.name() + ".negation";
    item.options.push_back(render(cat.binary_negation, {{"x", name}}));
    item.option_template.push_back(TemplateType::negation);
    item.option_truth.push_back(OptionTruth::false_negation);
  }
  item.correct_index = 0;
  item.validate();
  return item;
}

MCQItem label_binary_task(MCQItem item, bool condition_present) {
  if (item.size() != 2) throw ContractError("binary item " + item.id + " must have two options");
  const bool negation_mode = item.option_template[1] == TemplateType::negation;
  if (condition_present) {
    item.correct_index = 0;
    item.option_truth = {OptionTruth::correct,
                         negation_mode ? OptionTruth::false_negation : OptionTruth::false_affirmation};
  } else {
    item.correct_index = 1;
    item.option_truth = {OptionTruth::false_affirmation, OptionTruth::correct};
  }
  return item;
}

}  // namespace negsuite
