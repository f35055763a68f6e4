#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "negsuite/catalog.hpp"
#include "negsuite/core.hpp"
#include "negsuite/eval.hpp"

namespace negsuite {

enum class BatteryFamily { affirm_single, neg_single, affirm_two, hybrid, double_neg };

std::string_view to_string(BatteryFamily f);
BatteryFamily parse_battery_family(std::string_view s);

struct BatteryCaption {
  std::string id;
  BatteryFamily family = BatteryFamily::affirm_single;
  std::size_t template_index = 0;
  std::vector<Concept> objects;  // {A} or {A, B}
  std::string text;

  bool operator==(const BatteryCaption&) const = default;
};

using ConceptPair = std::pair<Concept, Concept>;

// Single-object families are rendered for every object, two-object
// families for every ordered pair ({A} affirmed and {B} negated in hybrid).
// Order: family, then template index, then object.
std::vector<BatteryCaption> build_template_battery(std::span<const Concept> objects,
                                                   std::span<const ConceptPair> pairs,
                                                   const TemplateBatteryPatterns& patterns);
std::vector<BatteryCaption> build_template_battery(std::span<const Concept> objects,
                                                   std::span<const ConceptPair> pairs = {});

// (affirm_single index, neg_single index) pairs whose token sequences are
// equal once negation cues are removed, e.g. "{A} is present in this image"
// and "{A} is not present in this image".
std::vector<std::pair<std::size_t, std::size_t>> matched_template_pairs(
    const TemplateBatteryPatterns& patterns, std::span<const std::string> negation_cues);

nlohmann::ordered_json to_json(const BatteryCaption& c);
BatteryCaption battery_caption_from_json(const nlohmann::json& j, std::size_t lineno);

struct PcaResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;   // one unit component per row
  Eigen::VectorXd eigenvalues;  // descending
  Eigen::VectorXd explained_variance_ratio;
  Eigen::MatrixXd coordinates;  // one row per input point
};

// Rows of `points` are observations. Components come from the sample
// covariance in descending eigenvalue order; each is signed so its
// largest-magnitude entry is positive, and equal eigenvalues are ordered by
// the index of that entry. Throws DegenerateData when all points coincide
// and ContractError when n_components > min(count - 1, dim).
PcaResult pca_project(const Eigen::MatrixXd& points, std::size_t n_components);

// Mean cosine between each affirmed embedding and its negated counterpart.
double negation_separation_score(std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs);

// Mean cosine over every pair of negated-caption embeddings that belong to
// different objects. Needs at least two objects.
double negation_object_collapse_score(
    const std::map<std::string, std::vector<std::vector<double>>>& neg_by_object);

struct AffirmationBiasReport {
  double false_negation_selection_rate = 0.0;
  std::map<TemplateType, TemplateStats> per_template;
  std::map<TemplateType, double> selection_frequency;
  std::size_t errors = 0;
};

AffirmationBiasReport affirmation_bias_report(std::span<const MCQPrediction> predictions,
                                              std::span<const MCQItem> items);
nlohmann::ordered_json to_json(const AffirmationBiasReport& r);

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  std::string family;
  std::string object;
};

std::string scatter_csv(std::span<const ScatterPoint> points);
// Skips '#' comment lines and the column header.
std::vector<ScatterPoint> read_scatter_csv(std::istream& in);
// Static SVG scatter, one colour per family.
std::string scatter_svg(std::span<const ScatterPoint> points, const std::string& title = "");

struct BatteryDiagnostics {
  std::optional<double> separation_score;  // matched single-object templates
  std::optional<double> collapse_score;    // negated single-object captions, >= 2 objects
  PcaResult pca;
  std::vector<ScatterPoint> scatter;
};

// Runs the battery analyses over unit text embeddings keyed by caption id.
// Throws MissingEmbedding.
BatteryDiagnostics analyze_battery(std::span<const BatteryCaption> battery,
                                   const EmbeddingTable& embeddings);
nlohmann::ordered_json to_json(const BatteryDiagnostics& d);

}  // namespace negsuite
