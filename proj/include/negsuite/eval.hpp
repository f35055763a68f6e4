#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "negsuite/core.hpp"

namespace negsuite {

// queryId -> relevant candidate ids.
using RetrievalGroundTruth = std::map<std::string, std::set<std::string>>;

// One relevant candidate per caption: its source scene.
RetrievalGroundTruth retrieval_truth_from_captions(std::span<const CaptionRecord> captions);

// Fraction of truth queries with a relevant candidate among the top k.
// Candidates are ranked by descending score, ties by ascending candidate
// id. Throws MissingQuery when a truth query is not a row of S,
// MissingEmbedding when a relevant id is not a column, and ContractError
// when k == 0 or a query has no relevant candidates.
double recall_at_k(const SimilarityMatrix& S, const RetrievalGroundTruth& truth, std::size_t k);

struct MCQPrediction {
  std::string item_id;
  std::size_t chosen_index = 0;
  TemplateType chosen_template = TemplateType::affirmation;
  OptionTruth chosen_truth = OptionTruth::correct;
  bool correct = false;
  bool tie = false;
};

// Argmax over per-option scores; ties go to the lowest index with `tie` set.
MCQPrediction predict_from_scores(const MCQItem& item, std::span<const double> scores);

// Option embedding id for option j of an item.
std::string option_embedding_id(const std::string& item_id, std::size_t j);

// Scores each item's options by cosine against the image embedding of its
// scene. Options are looked up as option_embedding_id(item.id, j).
// Throws MissingEmbedding.
std::vector<MCQPrediction> answer_mcqs(const EmbeddingTable& images, const EmbeddingTable& options,
                                       std::span<const MCQItem> items);

struct TemplateStats {
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct EvalReport {
  std::map<std::size_t, double> recall_at_k;
  std::size_t retrieval_queries = 0;

  std::size_t mcq_total = 0;
  std::size_t mcq_correct = 0;
  double mcq_accuracy = 0.0;
  // Keyed by the template of each item's correct option.
  std::map<TemplateType, TemplateStats> per_template;
  // Template of the chosen option, over all predictions.
  std::map<TemplateType, double> selection_frequency;
  // Template share among all options of all items.
  std::map<TemplateType, double> option_prevalence;
  std::size_t errors = 0;
  std::size_t false_negation_errors = 0;
  // Over errors only; 0 when there are no errors.
  double false_negation_selection_rate = 0.0;
  std::size_t ties = 0;
};

// Predictions must align with items by position (same ids).
EvalReport breakdown_by_template(std::span<const MCQPrediction> predictions,
                                 std::span<const MCQItem> items);

nlohmann::ordered_json to_json(const EvalReport& report);
// One metric per row: name,slice,value,count.
std::string to_csv(const EvalReport& report);

// Componentwise mean, renormalized. Throws EmptyFrameList, DimMismatch,
// ZeroVector.
std::vector<double> pool_video_frames(std::span<const std::vector<double>> frames);

// k indices spread uniformly over [0, n) with both endpoints included,
// rounded to nearest: 100 frames, k = 4 -> {0, 33, 66, 99}.
std::vector<std::size_t> sample_frame_indices(std::size_t frame_count, std::size_t k = 4);

double binary_accuracy(std::span<const MCQPrediction> predictions);

}  // namespace negsuite
