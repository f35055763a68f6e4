#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "negsuite/cooccur.hpp"
#include "negsuite/errors.hpp"
#include "negsuite/rng.hpp"

using namespace negsuite;

namespace {

SceneRecord scene(std::string id, std::initializer_list<const char*> pos) {
  SceneRecord s;
  s.id = std::move(id);
  for (auto p : pos) s.positives.insert(Concept(p));
  return s;
}

std::vector<SceneRecord> three_scenes() {
  return {scene("s1", {"a", "b"}), scene("s2", {"a", "b"}), scene("s3", {"a", "c"})};
}

std::vector<std::string> names(const std::vector<Concept>& cs) {
  std::vector<std::string> out;
  for (const auto& c : cs) out.push_back(c.name());
  return out;
}

std::vector<SceneRecord> random_scenes(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<SceneRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    SceneRecord s;
    s.id = "r" + std::to_string(i);
    const auto k = 1 + rng.index(4);
    while (s.positives.size() < k) s.positives.insert(Concept("c" + std::to_string(rng.index(vocab))));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST(Cooccurrence, ManualCounts) {
  const auto scenes = three_scenes();
  const auto m = build_cooccurrence(scenes);
  const Concept a("a"), b("b"), c("c");
  EXPECT_EQ(m.count(a, b), 2);
  EXPECT_EQ(m.count(a, c), 1);
  EXPECT_EQ(m.count(b, c), 0);
  EXPECT_EQ(m.count(a, a), 3);
  EXPECT_EQ(names(m.vocabulary()), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Cooccurrence, SingleScene) {
  const std::vector<SceneRecord> scenes{scene("s", {"a"})};
  const auto m = build_cooccurrence(scenes);
  EXPECT_EQ(m.size(), 1u);
  EXPECT_EQ(m.diagonal(0), 1);
}

TEST(Cooccurrence, EmptyDataset) {
  EXPECT_THROW(build_cooccurrence(std::vector<SceneRecord>{}), EmptyDataset);
}

TEST(Cooccurrence, InvariantsOnRandomData) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto scenes = random_scenes(rng, 60, 12);
    const auto m = build_cooccurrence(scenes);
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < m.size(); ++j) {
        EXPECT_EQ(m.count(i, j), m.count(j, i));
        EXPECT_GE(m.count(i, j), 0);
        EXPECT_LE(m.count(i, j), std::min(m.diagonal(i), m.diagonal(j)));
      }
    }
  }
}

TEST(Propose, RanksBySummedCount) {
  const auto scenes = three_scenes();
  const auto m = build_cooccurrence(scenes);
  EXPECT_EQ(names(propose_negatives(scene("q", {"a"}), m, 2)), (std::vector<std::string>{"b", "c"}));
  EXPECT_TRUE(propose_negatives(scene("q", {"a", "b", "c"}), m, 2).empty());
}

TEST(Propose, VerifierFiltersPresent) {
  const auto scenes = three_scenes();
  const auto m = build_cooccurrence(scenes);
  FunctionVerifier v([](const auto&, const Concept& c) {
    return c.name() == "b" ? Verdict::present : Verdict::absent;
  });
  EXPECT_EQ(names(propose_negatives(scene("q", {"a"}), m, 2, &v)), (std::vector<std::string>{"c"}));
}

TEST(Propose, UnknownDroppedOnlyWhenStrict) {
  const auto scenes = three_scenes();
  const auto m = build_cooccurrence(scenes);
  FunctionVerifier v([](const auto&, const Concept& c) {
    return c.name() == "b" ? Verdict::unknown : Verdict::absent;
  });
  EXPECT_EQ(names(propose_negatives(scene("q", {"a"}), m, 2, &v, false)),
            (std::vector<std::string>{"b", "c"}));
  EXPECT_EQ(names(propose_negatives(scene("q", {"a"}), m, 2, &v, true)), (std::vector<std::string>{"c"}));
}

TEST(Propose, TiesByNameAndZeroScoresLast) {
  const std::vector<SceneRecord> scenes{scene("s1", {"x", "m"}), scene("s2", {"x", "k"}),
                                        scene("s3", {"z"}), scene("s4", {"y"})};
  const auto m = build_cooccurrence(scenes);
  // k and m tie at 1; y and z have zero score and fill in name order.
  EXPECT_EQ(names(propose_negatives(scene("q", {"x"}), m, 4)),
            (std::vector<std::string>{"k", "m", "y", "z"}));
  EXPECT_EQ(names(propose_negatives(scene("q", {"x"}), m, 3)), (std::vector<std::string>{"k", "m", "y"}));
}

TEST(Propose, NovelPositivesHaveZeroCounts) {
  const auto scenes = three_scenes();
  const auto m = build_cooccurrence(scenes);
  EXPECT_EQ(names(propose_negatives(scene("q", {"unseen"}), m, 3)),
            (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Propose, DisjointFromPositivesAndDeterministic) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto scenes = random_scenes(rng, 80, 15);
    const auto m = build_cooccurrence(scenes);
    for (const auto& s : scenes) {
      const auto negs = propose_negatives(s, m, 5);
      EXPECT_LE(negs.size(), 5u);
      for (const auto& c : negs) EXPECT_FALSE(s.positives.contains(c));
      EXPECT_EQ(negs, propose_negatives(s, m, 5));
    }
  }
}

TEST(Propose, AddingSupportNeverLowersRank) {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    auto scenes = random_scenes(rng, 40, 10);
    const auto& target = scenes[rng.index(scenes.size())];
    const auto before_m = build_cooccurrence(scenes);
    const auto before = propose_negatives(target, before_m, 100);
    if (before.size() < 2) continue;
    const Concept c = before[rng.index(before.size())];
    const Concept p = *std::next(target.positives.begin(),
                                 static_cast<long>(rng.index(target.positives.size())));
    SceneRecord extra;
    extra.id = "extra";
    extra.positives = {c, p};
    auto target_copy = target;
    scenes.push_back(extra);
    const auto after = propose_negatives(target_copy, build_cooccurrence(scenes), 100);
    auto pos = [](const std::vector<Concept>& v, const Concept& x) {
      return std::find(v.begin(), v.end(), x) - v.begin();
    };
    for (const auto& u : before) {
      if (u == c) continue;
      if (pos(before, c) < pos(before, u)) {
        EXPECT_LT(pos(after, c), pos(after, u));
      }
    }
    EXPECT_LE(pos(after, c), pos(before, c));
  }
}

TEST(CooccurrenceFile, FormatAndRoundTrip) {
  const auto scenes = three_scenes();
  const auto m = build_cooccurrence(scenes);
  std::stringstream buf;
  write_cooccurrence(m, buf, 4);
  std::string header;
  std::getline(buf, header);
  const auto h = nlohmann::json::parse(header);
  EXPECT_EQ(h["format"], "negsuite-cooc");
  EXPECT_EQ(h["version"], 1);
  std::size_t pair_rows = 0, diag_rows = 0;
  for (std::string line; std::getline(buf, line);) {
    const auto j = nlohmann::json::parse(line);
    (j.contains("b") ? pair_rows : diag_rows)++;
  }
  EXPECT_EQ(diag_rows, 3u);
  EXPECT_EQ(pair_rows, 2u);  // (a,b) and (a,c); zero pairs are omitted

  std::stringstream again;
  write_cooccurrence(m, again, 4);
  EXPECT_EQ(read_cooccurrence(again), m);
}
