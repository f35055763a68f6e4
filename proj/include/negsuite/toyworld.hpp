#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "negsuite/cooccur.hpp"
#include "negsuite/core.hpp"
#include "negsuite/eval.hpp"
#include "negsuite/rng.hpp"

namespace negsuite {

enum class TextMode { scoped, bag };
enum class Condition { affirm_only, negcap, negfull };

std::string_view to_string(TextMode m);
std::string_view to_string(Condition c);
TextMode parse_text_mode(std::string_view s);
Condition parse_condition(std::string_view s);

// Experiment configuration. File form: one "key = value" per line, '#'
// starts a comment, unknown keys are rejected.
struct ToyConfig {
  std::uint64_t seed = 1;
  std::size_t V = 40;
  std::size_t pairs = 2000;
  double sigma = 0.05;
  double lr = 0.1;
  std::size_t steps = 3000;
  std::size_t batch = 64;
  double alpha = 0.99;
  Condition condition = Condition::negfull;
  TextMode mode = TextMode::scoped;
  std::size_t dim = 64;
  std::size_t pretrain_steps = 0;
  std::size_t negatives = 3;
  double tau = 0.07;
  double init_scale = 0.05;
  std::size_t max_objects = 3;

  // Throws InputError on unknown keys or unparsable values.
  static ToyConfig parse(std::string_view text);
  static ToyConfig load(const std::filesystem::path& path);
  // Throws ContractError on out-of-range values.
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

// V objects in themes of five consecutive names, plus the catalog's
// function tokens. Text features are [affirmed objects | negated objects |
// function-token counts].
struct ToyVocabulary {
  std::vector<Concept> objects;
  std::vector<std::string> function_tokens;
  static constexpr std::size_t kThemeSize = 5;

  // Throws ContractError when V < 4.
  static ToyVocabulary make(std::size_t V);
  std::size_t V() const { return objects.size(); }
  std::size_t text_dim() const { return 2 * objects.size() + function_tokens.size(); }
  std::size_t theme_of(std::size_t object) const { return object / kThemeSize; }
  std::size_t object_index(const Concept& c) const;  // throws UnknownToken
};

// Draws |positives| uniformly in [min_obj, max_obj]; each object comes from
// one uniformly chosen theme with probability 0.75, else from the whole
// vocabulary, always without replacement.
SceneRecord sample_scene(Rng& rng, const ToyVocabulary& vocab, std::size_t min_obj,
                         std::size_t max_obj, std::string id);

struct HardNegativePair {
  std::string id;
  SceneRecord present;
  SceneRecord absent;
  Concept target;
};

// present has 2..max_obj objects; absent drops one uniformly chosen target.
HardNegativePair make_hardneg_pair(Rng& rng, const ToyVocabulary& vocab, std::string id,
                                   std::size_t max_obj = 3);

std::string toy_caption(const SceneRecord& scene);

struct ToyDataset {
  ToyVocabulary vocab;
  std::uint64_t seed = 0;
  double sigma = 0.0;
  std::vector<HardNegativePair> pairs;
  std::vector<SceneRecord> scenes;  // every scene, pair order
  std::vector<std::size_t> train;   // indices into scenes
  std::vector<std::size_t> held_out;
  std::vector<std::size_t> held_out_pairs;  // indices into pairs
  CooccurrenceMatrix cooccurrence;
  std::map<std::string, std::vector<Concept>> negatives;  // by scene id
};

// Pairs are split 80/20 by a hash of the pair id, so both scenes of a pair
// land on the same side. Negatives come from propose_negatives over the
// whole corpus.
ToyDataset make_toy_dataset(const ToyConfig& cfg);
bool is_held_out(std::string_view pair_id);

// Multi-hot over positives plus N(0, sigma) noise from a stream seeded by
// (dataset_seed, scene id).
Eigen::VectorXd featurize_image(const SceneRecord& scene, const ToyVocabulary& vocab,
                                std::uint64_t dataset_seed, double sigma);

// Scoped mode routes each object mention to its affirmed or negated slot by
// the clause rule; bag mode puts every mention in the affirmed slot and
// ignores negation cues. Throws UnknownToken.
Eigen::VectorXd featurize_text(std::string_view text, const ToyVocabulary& vocab, TextMode mode);

// Linear towers followed by L2 normalization.
struct TwoTowerModel {
  Eigen::MatrixXd image_map;  // d x V
  Eigen::MatrixXd text_map;   // d x (2V + F)

  static TwoTowerModel random(std::size_t d, const ToyVocabulary& vocab, Rng& rng, double scale);
  std::size_t dim() const { return static_cast<std::size_t>(image_map.rows()); }
  // Columns are inputs; returns unit columns. Throws ZeroVector.
  Eigen::MatrixXd embed_images(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd embed_texts(const Eigen::MatrixXd& x) const;
  // Copies the affirmed-object columns of the text map onto the negated ones.
  void tie_negated_to_affirmed(std::size_t V);

  bool operator==(const TwoTowerModel&) const = default;
};

struct ModelGrad {
  double loss = 0.0;
  Eigen::MatrixXd image_map;
  Eigen::MatrixXd text_map;
};

// Contrastive loss on a paired batch (column i of both inputs is a pair)
// with gradients w.r.t. both maps.
ModelGrad clip_batch_grad(const TwoTowerModel& m, const Eigen::MatrixXd& images,
                          const Eigen::MatrixXd& texts, double tau);
// MCQ loss; options holds C consecutive columns per image.
ModelGrad mcq_batch_grad(const TwoTowerModel& m, const Eigen::MatrixXd& images,
                         const Eigen::MatrixXd& options, std::span<const std::size_t> correct,
                         double tau);

struct TrainHyper {
  double lr = 0.1;
  std::size_t steps = 3000;
  std::size_t batch = 64;
  double alpha = 0.99;
  double tau = 0.07;
  std::uint64_t seed = 1;
  TextMode mode = TextMode::scoped;
  std::size_t log_every = 100;
};

struct TrainLogEntry {
  std::size_t step = 0;
  double loss = 0.0;
};

struct TrainResult {
  TwoTowerModel model;
  std::vector<TrainLogEntry> log;
};

// Plain gradient descent. The log holds the loss on fixed probe batches at
// step 0, every log_every steps, and after the last step. Throws
// DivergedLoss.
TrainResult train(const TwoTowerModel& init, const ToyDataset& data, Condition condition,
                  const TrainHyper& hyper);

// Base encoder: contrastive training on affirmative captions only, then the
// negated-object columns are tied to the affirmed ones, so negated mentions
// start out as lexical copies of affirmed mentions.
TwoTowerModel pretrain_base(const ToyDataset& data, const ToyConfig& cfg);

struct ToyMetrics {
  double recall_at_5 = 0.0;      // original captions
  double recall_neg_at_5 = 0.0;  // negated captions
  double hardneg_discrimination = 0.0;
  EvalReport mcq;
};

ToyMetrics evaluate_held_out(const TwoTowerModel& model, const ToyDataset& data, TextMode mode);

struct ToyExperiment {
  ToyConfig config;
  TrainResult result;
  ToyMetrics metrics;
};

ToyExperiment run_toy_experiment(const ToyConfig& cfg);

struct AlphaSweepRow {
  double alpha = 0.0;
  double recall_at_5 = 0.0;   // median over seeds
  double mcq_accuracy = 0.0;  // median over seeds
  std::vector<double> recall_per_seed;
  std::vector<double> mcq_per_seed;
};

std::vector<AlphaSweepRow> run_alpha_sweep(const ToyConfig& base, std::span<const double> alphas,
                                           std::span<const std::uint64_t> seeds);

std::string alpha_sweep_csv(std::span<const AlphaSweepRow> rows);
std::string training_log_csv(std::span<const TrainLogEntry> log);
nlohmann::ordered_json to_json(const ToyMetrics& m);
std::string metrics_csv(const ToyMetrics& m);
EmbeddingTable model_table(const Eigen::MatrixXd& map, std::string_view prefix);
// Inverse of model_table: rows in ascending id order.
Eigen::MatrixXd matrix_from_table(const EmbeddingTable& table);

// Unit text embeddings of (id, text) pairs under `model`.
EmbeddingTable embed_captions(const TwoTowerModel& model, const ToyVocabulary& vocab, TextMode mode,
                              std::span<const std::pair<std::string, std::string>> captions);
// Unit image embeddings of scenes (noise seeded as in featurize_image).
EmbeddingTable embed_scenes(const TwoTowerModel& model, const ToyVocabulary& vocab,
                            std::span<const SceneRecord> scenes, std::uint64_t dataset_seed,
                            double sigma);

double median(std::vector<double> values);

}  // namespace negsuite
