#include "dao/losses.hpp"

#include <cmath>
#include <string>

#include "dao/error.hpp"

namespace dao {

int map_score_to_class(double score) {
  if (std::isnan(score)) throw DomainError("cannot map NaN score to a class");
  if (score > 0.5) return 4;
  if (score > 0.049) return 3;
  if (score >= -0.049) return 2;
  if (score >= -0.5) return 1;
  return 0;
}

Tensor mse_loss(const Tensor& predicted, const Tensor& target) {
  if (predicted.numel() != target.numel()) {
    throw DimensionError("mse_loss: " + shape_to_string(predicted.shape()) + " vs " +
                         shape_to_string(target.shape()));
  }
  Tensor diff = reshape(predicted, {predicted.numel()}) - reshape(target, {target.numel()});
  return mean(diff * diff);
}

std::vector<double> ClassLosses::per_class_values() const {
  std::vector<double> out(per_class.size(), 0.0);
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    if (per_class[k]) out[k] = per_class[k]->item();
  }
  return out;
}

ClassLosses ce_loss_per_class(const Tensor& logits, std::span<const int> labels) {
  if (logits.ndim() != 2) throw DimensionError("ce_loss_per_class: logits must be (n x K)");
  const std::size_t n = logits.dim(0), num_classes = logits.dim(1);
  if (labels.size() != n) {
    throw DimensionError("ce_loss_per_class: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
  }
  std::vector<std::size_t> columns(n);
  std::vector<std::vector<std::size_t>> members(num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw ContractError("ce_loss_per_class: label " + std::to_string(labels[i]) + " out of range");
    }
    columns[i] = static_cast<std::size_t>(labels[i]);
    members[columns[i]].push_back(i);
  }

  ClassLosses out;
  out.per_sample = neg(pick_columns(log_softmax_rows(logits), columns));
  out.total = mean(out.per_sample);
  out.per_class.resize(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (!members[k].empty()) out.per_class[k] = mean(gather(out.per_sample, members[k]));
  }
  return out;
}

std::vector<std::size_t> BatchClassStats::present_classes() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] > 0) out.push_back(k);
  }
  return out;
}

BatchClassStats class_stats(std::span<const int> labels, std::size_t num_classes) {
  if (labels.empty()) throw ContractError("class_stats: empty batch");
  BatchClassStats stats;
  stats.counts.assign(num_classes, 0);
  stats.proportions.assign(num_classes, 0.0);
  for (int z : labels) {
    if (z < 0 || static_cast<std::size_t>(z) >= num_classes) {
      throw ContractError("class_stats: label " + std::to_string(z) + " out of range");
    }
    ++stats.counts[static_cast<std::size_t>(z)];
  }
  stats.total = labels.size();
  for (std::size_t k = 0; k < num_classes; ++k) {
    stats.proportions[k] = static_cast<double>(stats.counts[k]) / static_cast<double>(stats.total);
  }
  return stats;
}

std::vector<double> class_weights(const BatchClassStats& stats, double beta) {
  std::vector<double> v(stats.num_classes(), 0.0);
  for (std::size_t k : stats.present_classes()) v[k] = 1.0 / std::pow(stats.proportions[k], beta);
  return v;
}

Tensor imbalanced_loss(const BatchClassStats& stats, std::span<const double> weights,
                       const std::vector<std::optional<Tensor>>& per_class, double alpha) {
  std::vector<Tensor> terms;
  for (std::size_t k : stats.present_classes()) {
    if (!per_class.at(k)) throw ContractError("imbalanced_loss: missing loss for present class " + std::to_string(k));
    const double p = stats.proportions[k];
    // v_k * (p_k * L_ck - alpha * log p_k)
    terms.push_back(add(scale(*per_class[k], weights[k] * p), -weights[k] * alpha * std::log(p)));
  }
  if (terms.empty()) throw ContractError("imbalanced_loss: no classes present");
  return sum(concat(terms));
}

double imbalanced_loss_value(const BatchClassStats& stats, std::span<const double> weights,
                             std::span<const double> per_class, double alpha) {
  double total = 0.0;
  for (std::size_t k : stats.present_classes()) {
    const double p = stats.proportions[k];
    total += weights[k] * (p * per_class[k] - alpha * std::log(p));
  }
  return total;
}

LambdaCoeffs lambda_coeffs(double grad_norm_regression, double grad_norm_classification) {
  if (!(grad_norm_regression >= 0.0) || !(grad_norm_classification >= 0.0)) {
    throw NumericError("lambda_coeffs: gradient norms must be finite and non-negative");
  }
  constexpr double kTiny = 1e-12;
  if (grad_norm_regression < kTiny && grad_norm_classification < kTiny) return {0.5, 0.5, true};
  const double total = grad_norm_regression + grad_norm_classification;
  return {grad_norm_classification / total, grad_norm_regression / total, false};
}

Tensor total_loss(double lambda_r, double lambda_c, const Tensor& w_r, const Tensor& w_c, const Tensor& loss_r,
                  const Tensor& loss_imb) {
  return scale(w_r * loss_r, lambda_r) + scale(w_c * loss_imb, lambda_c);
}

double total_loss_value(double lambda_r, double lambda_c, double w_r, double w_c, double loss_r, double loss_imb) {
  return lambda_r * w_r * loss_r + lambda_c * w_c * loss_imb;
}

double alpha_grad(double lambda_c, double w_c, std::span<const double> weights, const BatchClassStats& stats) {
  double acc = 0.0;
  for (std::size_t k : stats.present_classes()) acc += weights[k] * std::log(stats.proportions[k]);
  return -lambda_c * w_c * acc;
}

double beta_grad(double lambda_c, double w_c, const BatchClassStats& stats, std::span<const double> per_class,
                 double alpha, double beta) {
  double acc = 0.0;
  for (std::size_t k : stats.present_classes()) {
    const double p = stats.proportions[k];
    const double log_p = std::log(p);
    acc += (log_p / std::pow(p, beta)) * (p * per_class[k] - alpha * log_p);
  }
  return -lambda_c * w_c * acc;
}

}  // namespace dao
