#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "negsuite/catalog.hpp"
#include "negsuite/diagnostics.hpp"
#include "negsuite/errors.hpp"
#include "negsuite/objectives.hpp"
#include "negsuite/text.hpp"
#include "negsuite/toyworld.hpp"

using namespace negsuite;

namespace {

ToyConfig small_config(Condition c) {
  ToyConfig cfg;
  cfg.seed = 5;
  cfg.pairs = 300;
  cfg.steps = 200;
  cfg.batch = 32;
  cfg.condition = c;
  return cfg;
}

TrainHyper hyper_from(const ToyConfig& cfg) {
  TrainHyper h;
  h.lr = cfg.lr;
  h.steps = cfg.steps;
  h.batch = cfg.batch;
  h.alpha = cfg.alpha;
  h.tau = cfg.tau;
  h.seed = cfg.seed;
  h.mode = cfg.mode;
  return h;
}

Eigen::Index idx(const ToyVocabulary& v, const char* name) {
  return static_cast<Eigen::Index>(v.object_index(Concept(name)));
}

}  // namespace

TEST(ToyConfig, ParsesKeysAndComments) {
  const auto c = ToyConfig::parse("# header\nseed = 9\nV=12  # trailing\nalpha = 0.5\ncondition = negcap\nmode = bag\n\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.V, 12u);
  EXPECT_EQ(c.alpha, 0.5);
  EXPECT_EQ(c.condition, Condition::negcap);
  EXPECT_EQ(c.mode, TextMode::bag);
  EXPECT_EQ(c.steps, 3000u);
}

TEST(ToyConfig, RejectsUnknownAndMalformed) {
  EXPECT_THROW(ToyConfig::parse("learning_rate = 0.1\n"), FormatError);
  EXPECT_THROW(ToyConfig::parse("seed 3\n"), FormatError);
  EXPECT_THROW(ToyConfig::parse("seed = abc\n"), InputError);
  EXPECT_THROW(ToyConfig::parse("condition = sometimes\n"), InputError);
  EXPECT_THROW(ToyConfig::load("/nonexistent/toy.cfg"), InputError);
  try {
    ToyConfig::parse("seed = 1\nbogus = 2\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ToyConfig, ValidateAndRoundTrip) {
  ToyConfig c;
  c.alpha = 1.5;
  EXPECT_THROW(c.validate(), ContractError);
  c = ToyConfig{};
  c.V = 3;
  EXPECT_THROW(c.validate(), ContractError);
  c = ToyConfig{};
  c.seed = 77;
  c.condition = Condition::affirm_only;
  const auto j = c.to_json();
  EXPECT_EQ(j["seed"], 77);
  EXPECT_EQ(j["condition"], "affirm-only");
}

TEST(Vocabulary, ShapeAndDisjointness) {
  const auto v = ToyVocabulary::make(40);
  EXPECT_EQ(v.V(), 40u);
  EXPECT_EQ(v.text_dim(), 80u + v.function_tokens.size());
  for (const auto& o : v.objects) {
    EXPECT_EQ(std::find(v.function_tokens.begin(), v.function_tokens.end(), o.name()), v.function_tokens.end());
  }
  for (const char* tok : {"includes", "shows", "and", "but", "not", "no", "without", "neither", "nor", "image", "this"}) {
    EXPECT_NE(std::find(v.function_tokens.begin(), v.function_tokens.end(), tok), v.function_tokens.end()) << tok;
  }
  EXPECT_THROW(ToyVocabulary::make(3), ContractError);
  EXPECT_THROW(v.object_index(Concept("unicorn")), UnknownToken);
  EXPECT_EQ(ToyVocabulary::make(50).objects.back().name(), "object49");
}

TEST(Scenes, DeterministicAndBounded) {
  const auto v = ToyVocabulary::make(40);
  Rng a(1), b(1);
  for (int i = 0; i < 500; ++i) {
    const auto s = sample_scene(a, v, 1, 3, "s" + std::to_string(i));
    const auto t = sample_scene(b, v, 1, 3, "s" + std::to_string(i));
    EXPECT_EQ(s.positives, t.positives);
    EXPECT_GE(s.positives.size(), 1u);
    EXPECT_LE(s.positives.size(), 3u);
    EXPECT_EQ(s.captions.size(), 1u);
  }
  Rng r(2);
  EXPECT_THROW(sample_scene(r, v, 0, 3, "x"), ContractError);
  EXPECT_THROW(sample_scene(r, v, 3, 2, "x"), ContractError);
  EXPECT_THROW(sample_scene(r, v, 1, 41, "x"), ContractError);
}

TEST(HardNegatives, PairInvariant) {
  const auto v = ToyVocabulary::make(40);
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto p = make_hardneg_pair(rng, v, "p" + std::to_string(i));
    EXPECT_EQ(p.present.positives.size() - p.absent.positives.size(), 1u);
    EXPECT_FALSE(p.absent.positives.contains(p.target));
    auto rebuilt = p.absent.positives;
    rebuilt.insert(p.target);
    EXPECT_EQ(rebuilt, p.present.positives);
  }
}

TEST(HardNegatives, EveryObjectBecomesATarget) {
  // Monte-Carlo over independent corpora of 2000 pairs with V = 40.
  const auto v = ToyVocabulary::make(40);
  const int trials = 200;
  int covered = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(1000 + static_cast<std::uint64_t>(t), "coupon"));
    std::vector<bool> seen(40, false);
    for (int p = 0; p < 2000; ++p) {
      seen[v.object_index(make_hardneg_pair(rng, v, "p").target)] = true;
    }
    covered += std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  }
  EXPECT_GE(static_cast<double>(covered) / trials, 0.99);
}

TEST(Dataset, SplitAndNegatives) {
  const auto d = make_toy_dataset(small_config(Condition::negfull));
  EXPECT_EQ(d.scenes.size(), 600u);
  EXPECT_EQ(d.train.size() + d.held_out.size(), 600u);
  EXPECT_EQ(d.held_out.size(), 2 * d.held_out_pairs.size());
  const double frac = static_cast<double>(d.held_out_pairs.size()) / 300.0;
  EXPECT_NEAR(frac, 0.2, 0.07);
  for (const auto& s : d.scenes) {
    for (const auto& n : s.negative_candidates) EXPECT_FALSE(s.positives.contains(n));
    EXPECT_EQ(d.negatives.at(s.id).size(), 3u);
  }
  for (auto p : d.held_out_pairs) EXPECT_TRUE(is_held_out(d.pairs[p].id));
}

TEST(Featurize, ImageMultiHot) {
  const auto v = ToyVocabulary::make(4);
  SceneRecord s;
  s.id = "x";
  s.positives = {v.objects[0]};
  const auto x = featurize_image(s, v, 1, 0.0);
  EXPECT_EQ(x, (Eigen::VectorXd(4) << 1, 0, 0, 0).finished());
  EXPECT_EQ(featurize_image(s, v, 1, 0.3), featurize_image(s, v, 1, 0.3));
  EXPECT_NE(featurize_image(s, v, 1, 0.3), featurize_image(s, v, 2, 0.3));
}

TEST(Featurize, ImageNoiseStd) {
  const auto v = ToyVocabulary::make(40);
  SceneRecord s;
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (int i = 0; n < 100000; ++i) {
    s.id = "scene" + std::to_string(i);
    const auto x = featurize_image(s, v, 3, 0.05);
    sum += x.sum();
    sq += x.squaredNorm();
    n += static_cast<std::size_t>(x.size());
  }
  const double mean = sum / static_cast<double>(n);
  EXPECT_NEAR(mean, 0.0, 0.001);
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(n) - mean * mean), 0.05, 0.001);
}

TEST(Featurize, ScopedAndBag) {
  const auto v = ToyVocabulary::make(40);
  const auto V = static_cast<Eigen::Index>(v.V());
  const auto cat = idx(v, "cat"), dog = idx(v, "dog");

  const auto scoped = featurize_text("This image includes cat but not dog.", v, TextMode::scoped);
  EXPECT_EQ(scoped(cat), 1.0);
  EXPECT_EQ(scoped(V + cat), 0.0);
  EXPECT_EQ(scoped(dog), 0.0);
  EXPECT_EQ(scoped(V + dog), 1.0);

  const auto bag = featurize_text("This image includes cat but not dog.", v, TextMode::bag);
  EXPECT_EQ(bag(cat), 1.0);
  EXPECT_EQ(bag(dog), 1.0);
  EXPECT_EQ(bag.segment(V, V).sum(), 0.0);

  const auto nn = featurize_text("This image includes neither cat nor dog.", v, TextMode::scoped);
  EXPECT_EQ(nn(V + cat), 1.0);
  EXPECT_EQ(nn(V + dog), 1.0);
  EXPECT_EQ(nn.head(V).sum(), 0.0);
}

TEST(Featurize, UnknownToken) {
  const auto v = ToyVocabulary::make(40);
  EXPECT_THROW(featurize_text("This image includes a zebra.", v, TextMode::scoped), UnknownToken);
}

TEST(Featurize, BagMatchedTemplatesCollapse) {
  const auto v = ToyVocabulary::make(40);
  const auto& cat = default_catalog();
  const auto matched = matched_template_pairs(cat.battery, cat.negation_cues);
  ASSERT_FALSE(matched.empty());
  Rng rng(8);
  const auto model = TwoTowerModel::random(16, v, rng, 1.0);
  for (const auto& o : v.objects) {
    for (const auto& [i, j] : matched) {
      const auto a = featurize_text(render(cat.battery.affirm_single[i], {{"A", o.name()}}), v, TextMode::bag);
      const auto n = featurize_text(render(cat.battery.neg_single[j], {{"A", o.name()}}), v, TextMode::bag);
      Eigen::MatrixXd x(a.size(), 2);
      x << a, n;
      const auto u = model.embed_texts(x);
      EXPECT_NEAR(u.col(0).dot(u.col(1)), 1.0, 1e-9) << o.name() << ' ' << i << ' ' << j;
    }
  }
}

TEST(Model, EmbeddingsAreUnit) {
  const auto v = ToyVocabulary::make(10);
  Rng rng(1);
  const auto m = TwoTowerModel::random(8, v, rng, 0.5);
  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(10, 10);
  const auto u = m.embed_images(x);
  for (Eigen::Index j = 0; j < u.cols(); ++j) EXPECT_NEAR(u.col(j).norm(), 1.0, 1e-12);
  EXPECT_THROW(m.embed_images(Eigen::MatrixXd::Zero(10, 1)), ZeroVector);
}

TEST(Model, TieCopiesColumns) {
  const auto v = ToyVocabulary::make(10);
  Rng rng(1);
  auto m = TwoTowerModel::random(8, v, rng, 0.5);
  m.tie_negated_to_affirmed(10);
  EXPECT_TRUE(m.text_map.middleCols(10, 10) == m.text_map.leftCols(10));
}

TEST(Model, BatchGradientsMatchFiniteDifferences) {
  const auto v = ToyVocabulary::make(6);
  Rng rng(4);
  const auto base = TwoTowerModel::random(5, v, rng, 0.5);
  const auto F = static_cast<Eigen::Index>(v.text_dim());
  Eigen::MatrixXd images = Eigen::MatrixXd::Random(6, 4);
  Eigen::MatrixXd texts = Eigen::MatrixXd::Random(F, 4);
  Eigen::MatrixXd options = Eigen::MatrixXd::Random(F, 16);
  const std::vector<std::size_t> correct{0, 3, 1, 2};

  const auto ni = base.image_map.size(), nt = base.text_map.size();
  auto unpack = [&](const Eigen::VectorXd& x) {
    TwoTowerModel m = base;
    m.image_map = Eigen::Map<const Eigen::MatrixXd>(x.data(), base.image_map.rows(), base.image_map.cols());
    m.text_map = Eigen::Map<const Eigen::MatrixXd>(x.data() + ni, base.text_map.rows(), base.text_map.cols());
    return m;
  };
  auto pack = [&](const ModelGrad& g) {
    Eigen::VectorXd out(ni + nt);
    out << Eigen::Map<const Eigen::VectorXd>(g.image_map.data(), ni),
        Eigen::Map<const Eigen::VectorXd>(g.text_map.data(), nt);
    return out;
  };
  Eigen::VectorXd x0(ni + nt);
  x0 << Eigen::Map<const Eigen::VectorXd>(base.image_map.data(), ni),
      Eigen::Map<const Eigen::VectorXd>(base.text_map.data(), nt);

  const GradFn clip = [&](const Eigen::VectorXd& x) {
    const auto g = clip_batch_grad(unpack(x), images, texts, 0.5);
    return std::make_pair(g.loss, pack(g));
  };
  const GradFn mcq = [&](const Eigen::VectorXd& x) {
    const auto g = mcq_batch_grad(unpack(x), images, options, correct, 0.5);
    return std::make_pair(g.loss, pack(g));
  };
  EXPECT_LT(finite_difference_check(clip, x0, 1e-4), 1e-5);
  EXPECT_LT(finite_difference_check(mcq, x0, 1e-4), 1e-5);
}

TEST(Training, ZeroLearningRateKeepsModel) {
  const auto cfg = small_config(Condition::negfull);
  const auto data = make_toy_dataset(cfg);
  const auto init = pretrain_base(data, cfg);
  auto h = hyper_from(cfg);
  h.lr = 0.0;
  h.steps = 20;
  EXPECT_TRUE(train(init, data, Condition::negfull, h).model == init);
}

TEST(Training, Deterministic) {
  const auto cfg = small_config(Condition::negfull);
  const auto data = make_toy_dataset(cfg);
  const auto init = pretrain_base(data, cfg);
  const auto a = train(init, data, Condition::negfull, hyper_from(cfg));
  const auto b = train(init, data, Condition::negfull, hyper_from(cfg));
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].loss, b.log[i].loss);
  EXPECT_TRUE(a.model == b.model);
  EXPECT_EQ(training_log_csv(a.log), training_log_csv(b.log));
}

TEST(Training, LossDecreasesInEveryCondition) {
  for (auto c : {Condition::affirm_only, Condition::negcap, Condition::negfull}) {
    const auto cfg = small_config(c);
    const auto data = make_toy_dataset(cfg);
    const auto r = train(pretrain_base(data, cfg), data, c, hyper_from(cfg));
    ASSERT_GE(r.log.size(), 2u);
    EXPECT_EQ(r.log.front().step, 0u);
    EXPECT_EQ(r.log.back().step, cfg.steps);
    EXPECT_EQ(r.log[1].step, 100u);
    EXPECT_LT(r.log.back().loss, r.log.front().loss) << to_string(c);
  }
}

TEST(Training, DivergenceIsReported) {
  auto cfg = small_config(Condition::affirm_only);
  const auto data = make_toy_dataset(cfg);
  auto h = hyper_from(cfg);
  h.lr = std::numeric_limits<double>::infinity();
  h.steps = 5;
  EXPECT_THROW(train(pretrain_base(data, cfg), data, Condition::affirm_only, h), DivergedLoss);
}

TEST(Training, NegfullSeparatesHardNegativePairs) {
  ToyConfig cfg;
  cfg.seed = 1;
  const auto e = run_toy_experiment(cfg);
  EXPECT_GE(e.metrics.hardneg_discrimination, 0.9);
  EXPECT_GE(e.metrics.mcq.per_template.at(TemplateType::negation).accuracy, 0.75);
}

TEST(Outputs, TablesRoundTrip) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(3, 5);
  const auto t = model_table(m, "row");
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.dim(), 5u);
  EXPECT_TRUE(matrix_from_table(t) == m);
}

TEST(Outputs, Median) {
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_THROW(median({}), ContractError);
}

TEST(Outputs, SweepCsv) {
  const std::vector<AlphaSweepRow> rows{{0.5, 0.8, 0.6, {0.8}, {0.6}}};
  const auto csv = alpha_sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "alpha,recall_at_5,mcq_accuracy,seeds");
}
