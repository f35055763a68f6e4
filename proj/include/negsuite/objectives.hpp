#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace negsuite {

struct LossConfig {
  double alpha = 0.99;       // weight on the contrastive term
  double temperature = 0.07;

  // Throws ContractError unless 0 <= alpha <= 1 and temperature > 0.
  void validate() const;
};

struct LossResult {
  double value = 0.0;
  Eigen::MatrixXd grad;  // same shape as the input scores
};

// Symmetric InfoNCE over a paired N x N similarity matrix (pairs on the
// diagonal). Scores are divided by the temperature inside. Throws NonSquare.
LossResult clip_loss(const Eigen::MatrixXd& S, const LossConfig& cfg);

// Mean cross-entropy over M rows of already-scaled logits (M x C).
// Throws IndexOutOfRange.
LossResult mcq_loss(const Eigen::MatrixXd& logits, std::span<const std::size_t> correct);

struct CombinedLoss {
  double value = 0.0;
  Eigen::MatrixXd clip_grad;  // alpha * clip gradient
  Eigen::MatrixXd mcq_grad;   // (1 - alpha) * mcq gradient
};

// alpha * clip + (1 - alpha) * mcq. The endpoints return the sub-loss
// values exactly.
CombinedLoss combined_loss(const LossResult& clip, const LossResult& mcq, const LossConfig& cfg);

// f(x) -> (value, gradient).
using GradFn = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

// Max over coordinates of |central difference - analytic| / max(1e-8, |analytic|).
// Throws NonFinite and ContractError for h outside [1e-6, 1e-3].
double finite_difference_check(const GradFn& fn, const Eigen::VectorXd& point, double h = 1e-4);

}  // namespace negsuite
