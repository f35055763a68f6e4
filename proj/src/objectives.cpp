#include "negsuite/objectives.hpp"

#include <cmath>
#include <string>

#include "negsuite/errors.hpp"

namespace negsuite {

namespace {

// Per-row softmax cross-entropy against `target(i)`. Returns the summed loss
// and writes softmax - onehot into `grad`.
template <typename Target>
double row_cross_entropy(const Eigen::MatrixXd& z, Target target, Eigen::MatrixXd& grad) {
  grad.resize(z.rows(), z.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < z.cols(); ++j) sum += std::exp(z(i, j) - m);
    const double lse = m + std::log(sum);
    const auto c = static_cast<Eigen::Index>(target(i));
    total += lse - z(i, c);
    for (Eigen::Index j = 0; j < z.cols(); ++j) grad(i, j) = std::exp(z(i, j) - lse);
    grad(i, c) -= 1.0;
  }
  return total;
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NonFinite(std::string(what) + " contains non-finite entries");
}

}  // namespace

void LossConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("alpha must lie in [0, 1]");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ContractError("temperature must be positive");
  }
}

LossResult clip_loss(const Eigen::MatrixXd& S, const LossConfig& cfg) {
  cfg.validate();
  if (S.rows() != S.cols() || S.rows() == 0) {
    throw NonSquare("clip_loss needs a non-empty square matrix, got " + std::to_string(S.rows()) +
                    "x" + std::to_string(S.cols()));
  }
  require_finite(S, "similarity matrix");
  const auto n = static_cast<double>(S.rows());
  const Eigen::MatrixXd z = S / cfg.temperature;
  const Eigen::MatrixXd zt = z.transpose();
  auto diag = [](Eigen::Index i) { return i; };
  Eigen::MatrixXd g_rows;
  Eigen::MatrixXd g_cols;
  const double rows = row_cross_entropy(z, diag, g_rows) / n;
  const double cols = row_cross_entropy(zt, diag, g_cols) / n;

  LossResult r;
  r.value = 0.5 * (rows + cols);
  r.grad = (g_rows + g_cols.transpose()) * (0.5 / (n * cfg.temperature));
  return r;
}

LossResult mcq_loss(const Eigen::MatrixXd& logits, std::span<const std::size_t> correct) {
  if (static_cast<std::size_t>(logits.rows()) != correct.size()) {
    throw DimMismatch("mcq_loss: " + std::to_string(logits.rows()) + " rows but " +
                      std::to_string(correct.size()) + " targets");
  }
  if (logits.rows() == 0) throw ContractError("mcq_loss on an empty batch");
  for (std::size_t i = 0; i < correct.size(); ++i) {
    if (correct[i] >= static_cast<std::size_t>(logits.cols())) {
      throw IndexOutOfRange("correct index " + std::to_string(correct[i]) + " outside [0, " +
                            std::to_string(logits.cols()) + ")");
    }
  }
  require_finite(logits, "logits");
  const auto m = static_cast<double>(logits.rows());
  LossResult r;
  r.value = row_cross_entropy(logits, [&](Eigen::Index i) { return correct[static_cast<std::size_t>(i)]; },
                              r.grad) / m;
  r.grad /= m;
  return r;
}

CombinedLoss combined_loss(const LossResult& clip, const LossResult& mcq, const LossConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(clip.value) || !std::isfinite(mcq.value)) {
    throw NonFinite("combined_loss on a non-finite sub-loss");
  }
  CombinedLoss out;
  out.value = cfg.alpha * clip.value + (1.0 - cfg.alpha) * mcq.value;
  out.clip_grad = cfg.alpha * clip.grad;
  out.mcq_grad = (1.0 - cfg.alpha) * mcq.grad;
  return out;
}

double finite_difference_check(const GradFn& fn, const Eigen::VectorXd& point, double h) {
  if (!(h >= 1e-6 && h <= 1e-3)) throw ContractError("finite-difference step must lie in [1e-6, 1e-3]");
  auto [value, analytic] = fn(point);
  if (!std::isfinite(value)) throw NonFinite("loss is not finite at the base point");
  if (analytic.size() != point.size()) throw DimMismatch("gradient size differs from point size");
  double worst = 0.0;
  Eigen::VectorXd x = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    x(i) = point(i) + h;
    const double up = fn(x).first;
    x(i) = point(i) - h;
    const double down = fn(x).first;
    x(i) = point(i);
    if (!std::isfinite(up) || !std::isfinite(down)) throw NonFinite("loss is not finite near the point");
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(numeric - analytic(i)) / std::max(1e-8, std::abs(analytic(i)));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace negsuite
