#include "negsuite/eval.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "negsuite/errors.hpp"

namespace negsuite {

namespace {

constexpr TemplateType kTemplates[] = {TemplateType::affirmation, TemplateType::negation,
                                       TemplateType::hybrid};

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

RetrievalGroundTruth retrieval_truth_from_captions(std::span<const CaptionRecord> captions) {
  RetrievalGroundTruth truth;
  for (const auto& c : captions) truth[c.id].insert(c.scene_id);
  return truth;
}

double recall_at_k(const SimilarityMatrix& S, const RetrievalGroundTruth& truth, std::size_t k) {
  if (k == 0) throw ContractError("recall@k needs k >= 1");
  if (truth.empty()) throw ContractError("retrieval ground truth is empty");
  const auto n = S.candidate_ids.size();
  if (static_cast<std::size_t>(S.scores.rows()) != S.query_ids.size() ||
      static_cast<std::size_t>(S.scores.cols()) != n) {
    throw DimMismatch("similarity matrix shape does not match its id lists");
  }

  std::map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < S.query_ids.size(); ++r) row_of.emplace(S.query_ids[r], r);
  std::map<std::string, std::size_t> col_of;
  for (std::size_t c = 0; c < n; ++c) col_of.emplace(S.candidate_ids[c], c);

  // Candidate order by ascending id breaks score ties.
  std::vector<std::size_t> by_id(n);
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(),
            [&](std::size_t a, std::size_t b) { return S.candidate_ids[a] < S.candidate_ids[b]; });

  std::size_t hits = 0;
  std::vector<std::size_t> order;
  for (const auto& [query, relevant] : truth) {
    auto r = row_of.find(query);
    if (r == row_of.end()) throw MissingQuery("query not in similarity matrix: " + query);
    if (relevant.empty()) throw ContractError("query without relevant candidates: " + query);
    std::vector<bool> is_relevant(n, false);
    for (const auto& id : relevant) {
      auto c = col_of.find(id);
      if (c == col_of.end()) throw MissingEmbedding(id);
      is_relevant[c->second] = true;
    }
    order = by_id;
    const auto row = S.scores.row(static_cast<Eigen::Index>(r->second));
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return row(static_cast<Eigen::Index>(a)) > row(static_cast<Eigen::Index>(b));
    });
    const auto top = std::min(k, n);
    for (std::size_t i = 0; i < top; ++i) {
      if (is_relevant[order[i]]) {
        ++hits;
        break;
      }
    }
  }
  return ratio(hits, truth.size());
}

MCQPrediction predict_from_scores(const MCQItem& item, std::span<const double> scores) {
  if (scores.size() != item.size() || scores.empty()) {
    throw DimMismatch("item " + item.id + " has " + std::to_string(item.size()) + " options but " +
                      std::to_string(scores.size()) + " scores");
  }
  MCQPrediction p;
  p.item_id = item.id;
  std::size_t best = 0;
  bool tie = false;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best]) {
      best = j;
      tie = false;
    } else if (scores[j] == scores[best]) {
      tie = true;
    }
  }
  p.chosen_index = best;
  p.chosen_template = item.option_template[best];
  p.chosen_truth = item.option_truth[best];
  p.correct = best == item.correct_index;
  p.tie = tie;
  return p;
}

std::string option_embedding_id(const std::string& item_id, std::size_t j) {
  return item_id + "#" + std::to_string(j);
}

std::vector<MCQPrediction> answer_mcqs(const EmbeddingTable& images, const EmbeddingTable& options,
                                       std::span<const MCQItem> items) {
  if (images.dim() != options.dim()) throw DimMismatch("image and option tables differ in dim");
  std::vector<MCQPrediction> out;
  out.reserve(items.size());
  std::vector<double> scores;
  for (const auto& item : items) {
    const auto& image = images.at(item.scene_id);
    scores.clear();
    for (std::size_t j = 0; j < item.size(); ++j) {
      const auto id = option_embedding_id(item.id, j);
      const auto& opt = options.at(id);
      const double na = l2_norm(image);
      const double nb = l2_norm(opt);
      if (na < 1e-12) throw ZeroVector(item.scene_id);
      if (nb < 1e-12) throw ZeroVector(id);
      scores.push_back(dot(image, opt) / (na * nb));
    }
    out.push_back(predict_from_scores(item, scores));
  }
  return out;
}

EvalReport breakdown_by_template(std::span<const MCQPrediction> predictions,
                                 std::span<const MCQItem> items) {
  if (predictions.size() != items.size()) {
    throw ContractError("predictions do not cover the items");
  }
  EvalReport r;
  for (auto t : kTemplates) {
    r.per_template[t] = {};
    r.selection_frequency[t] = 0.0;
    r.option_prevalence[t] = 0.0;
  }
  std::map<TemplateType, std::size_t> selected;
  std::map<TemplateType, std::size_t> prevalence;
  std::size_t option_count = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    const auto& p = predictions[i];
    if (p.item_id != item.id) throw ContractError("prediction " + p.item_id + " is not for item " + item.id);
    auto& stats = r.per_template[item.option_template[item.correct_index]];
    ++stats.count;
    ++r.mcq_total;
    if (p.correct) {
      ++stats.correct;
      ++r.mcq_correct;
    } else {
      ++r.errors;
      if (p.chosen_truth == OptionTruth::false_negation) ++r.false_negation_errors;
    }
    if (p.tie) ++r.ties;
    ++selected[p.chosen_template];
    for (auto t : item.option_template) ++prevalence[t];
    option_count += item.size();
  }
  r.mcq_accuracy = ratio(r.mcq_correct, r.mcq_total);
  for (auto& [t, s] : r.per_template) s.accuracy = ratio(s.correct, s.count);
  for (auto t : kTemplates) {
    r.selection_frequency[t] = ratio(selected[t], r.mcq_total);
    r.option_prevalence[t] = ratio(prevalence[t], option_count);
  }
  r.false_negation_selection_rate = ratio(r.false_negation_errors, r.errors);
  return r;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  if (!r.recall_at_k.empty()) {
    nlohmann::ordered_json rec = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.recall_at_k) rec[std::to_string(k)] = v;
    j["recallAtK"] = rec;
    j["retrievalQueries"] = r.retrieval_queries;
  }
  if (r.mcq_total > 0) {
    nlohmann::ordered_json mcq;
    mcq["total"] = r.mcq_total;
    mcq["correct"] = r.mcq_correct;
    mcq["accuracy"] = r.mcq_accuracy;
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& [t, s] : r.per_template) {
      per[std::string(to_string(t))] = {{"count", s.count}, {"correct", s.correct}, {"accuracy", s.accuracy}};
    }
    mcq["perTemplate"] = per;
    nlohmann::ordered_json sel = nlohmann::ordered_json::object();
    for (const auto& [t, v] : r.selection_frequency) sel[std::string(to_string(t))] = v;
    mcq["templateSelectionFrequency"] = sel;
    nlohmann::ordered_json prev = nlohmann::ordered_json::object();
    for (const auto& [t, v] : r.option_prevalence) prev[std::string(to_string(t))] = v;
    mcq["optionTemplatePrevalence"] = prev;
    mcq["errors"] = r.errors;
    mcq["falseNegationSelectionRate"] = r.false_negation_selection_rate;
    mcq["ties"] = r.ties;
    j["mcq"] = mcq;
  }
  return j;
}

std::string to_csv(const EvalReport& r) {
  std::ostringstream out;
  out.precision(10);
  out << "name,slice,value,count\n";
  for (const auto& [k, v] : r.recall_at_k) {
    out << "recall_at_k," << k << ',' << v << ',' << r.retrieval_queries << '\n';
  }
  if (r.mcq_total > 0) {
    out << "mcq_accuracy,all," << r.mcq_accuracy << ',' << r.mcq_total << '\n';
    for (const auto& [t, s] : r.per_template) {
      out << "mcq_accuracy," << to_string(t) << ',' << s.accuracy << ',' << s.count << '\n';
    }
    for (const auto& [t, v] : r.selection_frequency) {
      out << "template_selection_frequency," << to_string(t) << ',' << v << ',' << r.mcq_total << '\n';
    }
    for (const auto& [t, v] : r.option_prevalence) {
      out << "option_template_prevalence," << to_string(t) << ',' << v << ',' << r.mcq_total << '\n';
    }
    out << "false_negation_selection_rate,errors," << r.false_negation_selection_rate << ','
        << r.errors << '\n';
    out << "ties,all," << r.ties << ',' << r.mcq_total << '\n';
  }
  return out.str();
}

std::vector<double> pool_video_frames(std::span<const std::vector<double>> frames) {
  if (frames.empty()) throw EmptyFrameList();
  const auto d = frames.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& f : frames) {
    if (f.size() != d) throw DimMismatch("video frames differ in dim");
    for (std::size_t i = 0; i < d; ++i) mean[i] += f[i];
  }
  for (auto& x : mean) x /= static_cast<double>(frames.size());
  return unit(mean, "<pooled video>");
}

std::vector<std::size_t> sample_frame_indices(std::size_t frame_count, std::size_t k) {
  if (frame_count == 0) throw EmptyFrameList();
  if (k == 0) throw ContractError("frame sample count must be positive");
  if (k == 1) return {0};
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back((2 * i * (frame_count - 1) + (k - 1)) / (2 * (k - 1)));
  }
  return out;
}

double binary_accuracy(std::span<const MCQPrediction> predictions) {
  std::size_t correct = 0;
  for (const auto& p : predictions) correct += p.correct ? 1 : 0;
  return ratio(correct, predictions.size());
}

}  // namespace negsuite
