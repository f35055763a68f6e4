#include <gtest/gtest.h>

#include "negsuite/catalog.hpp"
#include "negsuite/errors.hpp"
#include "negsuite/text.hpp"

using namespace negsuite;

namespace {

std::vector<Concept> concepts(std::initializer_list<const char*> names) {
  std::vector<Concept> out;
  for (auto n : names) out.emplace_back(n);
  return out;
}

std::vector<std::string> names(const ConceptSet& s) {
  std::vector<std::string> out;
  for (const auto& c : s) out.push_back(c.name());
  return out;
}

}  // namespace

TEST(Tokenize, PunctuationAndContractions) {
  EXPECT_EQ(tokenize("A cat, on a sofa."), (std::vector<std::string>{"a", "cat", "on", "a", "sofa", "."}));
  EXPECT_EQ(tokenize("It doesn't show it!"),
            (std::vector<std::string>{"it", "does", "not", "show", "it", "."}));
}

TEST(ScopedParse, ButSplitsClauses) {
  const auto p = parse_scoped("This image includes cat but not dog.", concepts({"cat", "dog"}));
  EXPECT_EQ(names(p.affirmed()), (std::vector<std::string>{"cat"}));
  EXPECT_EQ(names(p.negated()), (std::vector<std::string>{"dog"}));
}

TEST(ScopedParse, NeitherNor) {
  const auto p = parse_scoped("This image includes neither cat nor dog.", concepts({"cat", "dog"}));
  EXPECT_TRUE(p.affirmed().empty());
  EXPECT_EQ(names(p.negated()), (std::vector<std::string>{"cat", "dog"}));
}

TEST(ScopedParse, SentenceBoundaryResetsScope) {
  const auto p = parse_scoped("There is no dog in the image. A cat on a sofa.",
                              concepts({"cat", "dog", "sofa"}));
  EXPECT_EQ(names(p.affirmed()), (std::vector<std::string>{"cat", "sofa"}));
  EXPECT_EQ(names(p.negated()), (std::vector<std::string>{"dog"}));
}

TEST(ScopedParse, TrailingCueNegatesSubject) {
  const auto p = parse_scoped("Cat is not present in this image", concepts({"cat"}));
  EXPECT_EQ(names(p.negated()), (std::vector<std::string>{"cat"}));
  const auto q = parse_scoped("Cat is present in this image but not dog", concepts({"cat", "dog"}));
  EXPECT_EQ(names(q.affirmed()), (std::vector<std::string>{"cat"}));
  EXPECT_EQ(names(q.negated()), (std::vector<std::string>{"dog"}));
}

TEST(ScopedParse, LongestMatchFirst) {
  const auto p = parse_scoped("A traffic light without traffic.", concepts({"traffic", "traffic light"}));
  EXPECT_EQ(names(p.affirmed()), (std::vector<std::string>{"traffic light"}));
  EXPECT_EQ(names(p.negated()), (std::vector<std::string>{"traffic"}));
}

TEST(Mentions, WholeTokens) {
  EXPECT_TRUE(mentions("A cat on a sofa.", Concept("cat")));
  EXPECT_FALSE(mentions("A catalog.", Concept("cat")));
  EXPECT_TRUE(mentions("Red traffic light.", Concept("traffic light")));
}

TEST(Catalog, RenderAndPlaceholders) {
  EXPECT_EQ(render("This image includes {A} but not {B}.", {{"A", "cat"}, {"B", "dog"}}),
            "This image includes cat but not dog.");
  EXPECT_THROW(render("{A} and {B}", {{"A", "x"}}), ContractError);
  EXPECT_EQ(placeholders("{A} and {C}"), (std::vector<std::string>{"A", "C"}));
}

TEST(Catalog, DefaultCatalogContents) {
  const auto& c = default_catalog();
  EXPECT_EQ(c.version, 1);
  EXPECT_EQ(c.retrieval_negation, "There is no {x} in the image.");
  EXPECT_EQ(c.mcq_affirmation[0], "This image includes {A}.");
  EXPECT_EQ(c.mcq_negation[0], "This image does not include {B}.");
  EXPECT_EQ(c.mcq_hybrid[0], "This image includes {A} but not {B}.");
  EXPECT_EQ(c.battery.affirm_single.size(), 24u);
  EXPECT_EQ(c.battery.neg_single.size(), 24u);
  EXPECT_EQ(c.battery.affirm_two.size(), 23u);
  EXPECT_EQ(c.battery.hybrid.size(), 24u);
  EXPECT_EQ(c.battery.double_neg.size(), 24u);
}

TEST(Catalog, PublishedExamplesAppearVerbatim) {
  const auto& b = default_catalog().battery;
  auto has = [](const std::vector<std::string>& family, const std::string& p) {
    return std::find(family.begin(), family.end(), p) != family.end();
  };
  for (auto p : {"This image includes {A}", "{A} is present in this image", "This image shows {A}",
                 "{A} is depicted in this image", "{A} appears in this image"}) {
    EXPECT_TRUE(has(b.affirm_single, p)) << p;
  }
  for (auto p : {"This image does not include {A}", "{A} is not present in this image", "This image lacks {A}",
                 "{A} is not depicted in this image", "{A} does not appear in this image"}) {
    EXPECT_TRUE(has(b.neg_single, p)) << p;
  }
  for (auto p : {"This image includes {A} and {B}", "{A} and {B} are present in this image",
                 "This image shows {A} and {B}", "{A} and {B} are depicted in this image",
                 "{A} and {B} appear in this image"}) {
    EXPECT_TRUE(has(b.affirm_two, p)) << p;
  }
  for (auto p : {"This image includes {A} but not {B}", "{A} is present in this image but not {B}",
                 "This image shows {A} but not {B}", "This image features {A} but not {B}",
                 "{A} appears in this image but not {B}"}) {
    EXPECT_TRUE(has(b.hybrid, p)) << p;
  }
  for (auto p : {"This image includes neither {A} nor {B}", "Neither {A} nor {B} are present in this image",
                 "This image shows neither {A} nor {B}", "Neither {A} nor {B} are depicted in this image",
                 "Neither {A} nor {B} appear in this image"}) {
    EXPECT_TRUE(has(b.double_neg, p)) << p;
  }
}

TEST(Catalog, RejectsBadPatterns) {
  EXPECT_THROW(parse_catalog("{not json"), InputError);
  EXPECT_THROW(parse_catalog(R"({"format":"negsuite-catalog","version":1})"), InputError);
}
