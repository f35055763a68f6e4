#include <gtest/gtest.h>

#include <map>
#include <regex>
#include <set>

#include "negsuite/errors.hpp"
#include "negsuite/io.hpp"
#include "negsuite/synthesis.hpp"
#include "negsuite/text.hpp"

using namespace negsuite;

namespace {

// Reads an MCQ option back into (affirmed, negated) name sets using the
// four fixed sentence shapes, without going through the generator.
struct Claims {
  std::set<std::string> affirmed;
  std::set<std::string> negated;
};

Claims read_option(const std::string& text) {
  static const std::regex hybrid_re(R"(^This image includes (.+) but not (.+)\.$)");
  static const std::regex neg_re(R"(^This image does not include (.+)\.$)");
  static const std::regex two_re(R"(^This image includes (.+) and (.+)\.$)");
  static const std::regex one_re(R"(^This image includes (.+)\.$)");
  std::smatch m;
  if (std::regex_match(text, m, hybrid_re)) return {{m[1]}, {m[2]}};
  if (std::regex_match(text, m, neg_re)) return {{}, {m[1]}};
  if (std::regex_match(text, m, two_re)) return {{m[1], m[2]}, {}};
  if (std::regex_match(text, m, one_re)) return {{m[1]}, {}};
  ADD_FAILURE() << "unparsable option: " << text;
  return {};
}

bool option_is_true(const Claims& c, const std::set<std::string>& pos, const std::set<std::string>& neg) {
  for (const auto& a : c.affirmed) {
    if (!pos.contains(a)) return false;
  }
  for (const auto& n : c.negated) {
    if (pos.contains(n) || !neg.contains(n)) return false;
  }
  return true;
}

const std::vector<std::string> kNames{"cat", "dog", "sofa", "traffic light", "hat", "ball", "tree",
                                      "car", "bus", "fire hydrant", "cup", "bench", "kite", "boat",
                                      "horse", "sheep", "cow", "clock", "vase", "book"};

struct RandomScene {
  SceneRecord scene;
  std::vector<Concept> negatives;
};

RandomScene random_scene(Rng& rng, std::size_t i) {
  std::vector<std::string> names = kNames;
  rng.shuffle(names);
  const auto p = 1 + rng.index(3);
  const auto n = 1 + rng.index(3);
  RandomScene r;
  r.scene.id = "scene" + std::to_string(i);
  for (std::size_t k = 0; k < p; ++k) r.scene.positives.insert(Concept(names[k]));
  for (std::size_t k = 0; k < n; ++k) r.negatives.emplace_back(names[p + k]);
  r.scene.captions = {"A photo of " + names[0] + "."};
  return r;
}

std::set<std::string> name_set(const ConceptSet& s) {
  std::set<std::string> out;
  for (const auto& c : s) out.insert(c.name());
  return out;
}

std::set<std::string> name_set(const std::vector<Concept>& s) {
  std::set<std::string> out;
  for (const auto& c : s) out.insert(c.name());
  return out;
}

class Upper final : public Paraphraser {
 public:
  std::string paraphrase(const std::string& text) override {
    std::string out = text;
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
  }
};

class Blank final : public Paraphraser {
 public:
  std::string paraphrase(const std::string&) override { return "  "; }
};

}  // namespace

TEST(NegateCaption, PrefixTemplate) {
  const auto r = negate_caption("A cat on a sofa.", Concept("dog"), Placement::prefix);
  EXPECT_EQ(r.text, "There is no dog in the image. A cat on a sofa.");
  EXPECT_EQ(r.negated, ConceptSet{Concept("dog")});
}

TEST(NegateCaption, SuffixStripsOnePeriod) {
  EXPECT_EQ(negate_caption("A cat on a sofa.", Concept("dog"), Placement::suffix).text,
            "A cat on a sofa. There is no dog in the image.");
  EXPECT_EQ(negate_caption("A cat on a sofa", Concept("dog"), Placement::suffix).text,
            "A cat on a sofa. There is no dog in the image.");
}

TEST(NegateCaption, EmptyCaption) {
  EXPECT_THROW(negate_caption("", Concept("dog"), Placement::prefix), EmptyCaption);
  EXPECT_THROW(negate_caption("   ", Concept("dog"), Placement::suffix), EmptyCaption);
}

TEST(NegateCaption, PolarityFromKnownPositives) {
  const ConceptSet pos{Concept("cat"), Concept("sofa")};
  auto r = negate_caption("A cat on a sofa.", Concept("dog"), Placement::prefix, nullptr, pos);
  EXPECT_EQ(r.polarity, Polarity::hybrid);
  EXPECT_EQ(r.affirmed, pos);
  r = negate_caption("Something furry.", Concept("dog"), Placement::prefix, nullptr, pos);
  EXPECT_EQ(r.polarity, Polarity::negated);
  EXPECT_TRUE(r.affirmed.empty());
}

TEST(NegateCaption, ParaphraserAppliedLast) {
  Upper up;
  EXPECT_EQ(negate_caption("A cat.", Concept("dog"), Placement::suffix, &up).text,
            "A CAT. THERE IS NO DOG IN THE IMAGE.");
  Blank blank;
  EXPECT_EQ(negate_caption("A cat.", Concept("dog"), Placement::suffix, &blank).text,
            "A cat. There is no dog in the image.");
}

TEST(Mcq, SingleCatSingleDogSeedSeven) {
  SceneRecord s{"s", {Concept("cat")}, {}, {"A cat."}, {}};
  const std::vector<Concept> neg{Concept("dog")};
  auto rng = Rng(7);
  const auto item = make_mcq(s, neg, rng);
  ASSERT_EQ(item.size(), 4u);
  std::multiset<OptionTruth> tags(item.option_truth.begin(), item.option_truth.end());
  EXPECT_EQ(tags, (std::multiset<OptionTruth>{OptionTruth::correct, OptionTruth::false_affirmation,
                                              OptionTruth::false_negation, OptionTruth::false_hybrid}));
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(option_is_true(read_option(item.options[j]), {"cat"}, {"dog"}), j == item.correct_index)
        << item.options[j];
  }
}

TEST(Mcq, NoNegatives) {
  SceneRecord s{"s", {Concept("cat")}, {}, {}, {}};
  Rng rng(1);
  EXPECT_THROW(make_mcq(s, {}, rng), InsufficientConcepts);
  SceneRecord empty{"e", {}, {}, {}, {}};
  const std::vector<Concept> neg{Concept("dog")};
  EXPECT_THROW(make_mcq(empty, neg, rng), InsufficientConcepts);
}

TEST(Mcq, NegativeThatIsPositiveIsRejected) {
  SceneRecord s{"s", {Concept("cat")}, {}, {}, {}};
  const std::vector<Concept> neg{Concept("cat")};
  Rng rng(1);
  EXPECT_THROW(make_mcq(s, neg, rng), ContractError);
}

TEST(Mcq, SameSeedSameItem) {
  SceneRecord s{"s", {Concept("cat"), Concept("sofa")}, {}, {}, {}};
  const std::vector<Concept> neg{Concept("dog"), Concept("hat")};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    EXPECT_EQ(to_json(make_mcq(s, neg, a)).dump(), to_json(make_mcq(s, neg, b)).dump());
  }
}

TEST(Mcq, CorrectTemplateIsRoughlyUniform) {
  std::map<TemplateType, int> counts;
  Rng outer(99);
  for (int i = 0; i < 3000; ++i) {
    auto r = random_scene(outer, static_cast<std::size_t>(i));
    auto rng = scene_rng(3, r.scene.id);
    const auto item = make_mcq(r.scene, r.negatives, rng);
    ++counts[item.option_template[item.correct_index]];
  }
  for (auto t : {TemplateType::affirmation, TemplateType::negation, TemplateType::hybrid}) {
    EXPECT_NEAR(counts[t] / 3000.0, 1.0 / 3.0, 0.04);
  }
}

TEST(Mcq, ParaphraseKeepsTags) {
  SceneRecord s{"s", {Concept("cat")}, {}, {}, {}};
  const std::vector<Concept> neg{Concept("dog")};
  Rng a(4), b(4);
  Upper up;
  const auto plain = make_mcq(s, neg, a);
  const auto para = make_mcq(s, neg, b, &up);
  EXPECT_EQ(plain.option_truth, para.option_truth);
  EXPECT_EQ(plain.correct_index, para.correct_index);
  EXPECT_EQ(para.options[0], Upper().paraphrase(plain.options[0]));
}

TEST(Mcq, TruthCheckerOnRandomScenes) {
  Rng outer(2024);
  for (std::size_t i = 0; i < 2000; ++i) {
    auto r = random_scene(outer, i);
    auto rng = scene_rng(11, r.scene.id);
    const auto item = make_mcq(r.scene, r.negatives, rng);
    const auto pos = name_set(r.scene.positives);
    const auto neg = name_set(r.negatives);
    std::size_t true_count = 0;
    for (std::size_t j = 0; j < item.size(); ++j) {
      const bool t = option_is_true(read_option(item.options[j]), pos, neg);
      true_count += t;
      EXPECT_EQ(t, item.option_truth[j] == OptionTruth::correct) << item.options[j];
    }
    EXPECT_EQ(true_count, 1u);
  }
}

TEST(Mcq, OptionsParseBackWithScopedParser) {
  Rng outer(77);
  for (std::size_t i = 0; i < 300; ++i) {
    auto r = random_scene(outer, i);
    auto rng = scene_rng(5, r.scene.id);
    const auto item = make_mcq(r.scene, r.negatives, rng);
    std::vector<Concept> all;
    for (const auto& n : kNames) all.emplace_back(n);
    for (const auto& text : item.options) {
      const auto expected = read_option(text);
      const auto parsed = parse_scoped(text, all);
      EXPECT_EQ(name_set(parsed.affirmed()), expected.affirmed) << text;
      EXPECT_EQ(name_set(parsed.negated()), expected.negated) << text;
    }
  }
}

TEST(Negcap, CyclesNegativesThenPlacements) {
  SceneRecord s{"s", {Concept("cat")}, {}, {"A cat on a sofa."}, {}};
  const std::vector<Concept> neg{Concept("dog"), Concept("hat")};
  const auto recs = make_negcap_records(s, neg);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].text, "There is no dog in the image. A cat on a sofa.");
  EXPECT_EQ(recs[1].text, "A cat on a sofa. There is no dog in the image.");
  EXPECT_EQ(recs[2].text, "There is no hat in the image. A cat on a sofa.");
  for (const auto& r : recs) {
    EXPECT_EQ(r.polarity, Polarity::hybrid);
    EXPECT_EQ(r.scene_id, "s");
  }
  EXPECT_EQ(recs[2].negated, ConceptSet{Concept("hat")});
}

TEST(Negcap, ErrorsAndDeterminism) {
  SceneRecord s{"s", {Concept("cat")}, {}, {"A cat."}, {}};
  EXPECT_THROW(make_negcap_records(s, {}), InsufficientConcepts);
  const std::vector<Concept> one{Concept("dog")};
  EXPECT_THROW(make_negcap_records(s, one), InsufficientConcepts);  // two distinct texts only
  s.captions.push_back("A small cat.");
  const auto a = make_negcap_records(s, one);
  const auto b = make_negcap_records(s, one);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i].text, b[i].text);
}

TEST(NegMcq, SharesGeneratorAndTagsAudit) {
  SceneRecord s{"s", {Concept("cat"), Concept("sofa")}, {}, {}, {}};
  const std::vector<Concept> neg{Concept("dog"), Concept("hat")};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng a(seed), b(seed);
    const auto rec = make_negmcq_record(s, neg, a);
    const auto mcq = make_mcq(s, neg, b);
    EXPECT_EQ(rec.id, "s.negmcq");
    EXPECT_EQ(rec.options, mcq.options);
    EXPECT_EQ(std::count(rec.option_truth.begin(), rec.option_truth.end(), OptionTruth::correct), 1);
  }
}

TEST(Retrieval, OneQueryPerCaption) {
  SceneRecord s{"s", {Concept("cat")}, {}, {"A cat.", "A cat sleeping.", "Cat."}, {}};
  const std::vector<Concept> neg{Concept("dog"), Concept("hat")};
  Rng rng(1);
  const auto caps = make_retrieval_captions(s, neg, rng);
  ASSERT_EQ(caps.size(), 3u);
  EXPECT_EQ(caps[0].negated, ConceptSet{Concept("dog")});
  EXPECT_EQ(caps[1].negated, ConceptSet{Concept("hat")});
  EXPECT_EQ(caps[2].negated, ConceptSet{Concept("dog")});
  EXPECT_EQ(caps[1].id, "s#neg1");
}

TEST(Binary, NegationPair) {
  const auto item = make_binary_task(Concept("lung opacity"), BinaryMode::negation);
  EXPECT_EQ(item.options, (std::vector<std::string>{"This image shows Lung Opacity.",
                                                    "This image does not show Lung Opacity."}));
  EXPECT_EQ(item.correct_index, 0u);
}

TEST(Binary, AffirmationControlPair) {
  const Concept d("atelectasis");
  const auto item = make_binary_task(Concept("lung opacity"), BinaryMode::affirmation_control, &d);
  EXPECT_EQ(item.options, (std::vector<std::string>{"This image shows Lung Opacity.",
                                                    "This image shows Atelectasis."}));
}

TEST(Binary, MissingDistractor) {
  const Concept x("x");
  EXPECT_THROW(make_binary_task(x, BinaryMode::affirmation_control, &x), MissingDistractor);
  EXPECT_THROW(make_binary_task(x, BinaryMode::affirmation_control), MissingDistractor);
}

TEST(Binary, Labelling) {
  auto item = make_binary_task(Concept("lung opacity"), BinaryMode::negation);
  const auto absent = label_binary_task(item, false);
  EXPECT_EQ(absent.correct_index, 1u);
  EXPECT_NO_THROW(absent.validate());
  EXPECT_EQ(label_binary_task(item, true).correct_index, 0u);
}

TEST(TitleCase, Words) {
  EXPECT_EQ(title_case("lung opacity"), "Lung Opacity");
  EXPECT_EQ(title_case("pleural-effusion"), "Pleural-Effusion");
}
