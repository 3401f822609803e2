#pragma once

// Task losses and the batch-level imbalance machinery.
//
// Symbols follow the training loop: L_r is the regression MSE, L_c the mean
// cross-entropy, L_ck the mean cross-entropy over class-k samples, p_k the
// batch share of class k, v_k = p_k^-beta, and
//
//   L_imb = sum_{k present} v_k * (p_k * L_ck - alpha * log p_k)
//   L_mtl = lambda_r * w_r * L_r + lambda_c * w_c * L_imb
//
// Classes absent from a batch are skipped: their p_k = 0 leaves v_k and
// log p_k undefined.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dao/tensor.hpp"

namespace dao {

inline constexpr std::size_t kNumClasses = 5;

/// Piecewise score -> class mapping on the thresholds +-0.049 and +-0.5:
/// 4 above 0.5, 3 on (0.049, 0.5], 2 on [-0.049, 0.049], 1 on [-0.5, -0.049),
/// 0 below -0.5. Values outside [-1, 1] follow the same rule. NaN throws DomainError.
int map_score_to_class(double score);

/// Mean squared error of two equal-length vectors. Empty input throws ContractError.
Tensor mse_loss(const Tensor& predicted, const Tensor& target);

struct ClassLosses {
  /// Per-sample -log softmax(logits)[z], length n.
  Tensor per_sample;
  /// Mean over all samples.
  Tensor total;
  /// Mean over the samples of class k; empty for classes absent from the batch.
  std::vector<std::optional<Tensor>> per_class;

  std::vector<double> per_class_values() const;
};

/// Cross-entropy of (n x K) logits against integer labels, with per-class means.
ClassLosses ce_loss_per_class(const Tensor& logits, std::span<const int> labels);

struct BatchClassStats {
  std::vector<std::size_t> counts;
  std::vector<double> proportions;
  std::size_t total = 0;

  std::size_t num_classes() const { return counts.size(); }
  bool present(std::size_t k) const { return counts[k] > 0; }
  std::vector<std::size_t> present_classes() const;
};

BatchClassStats class_stats(std::span<const int> labels, std::size_t num_classes = kNumClasses);

/// v_k = 1 / p_k^beta for present classes; absent classes hold 0 and are never read.
std::vector<double> class_weights(const BatchClassStats& stats, double beta);

/// Differentiable L_imb through the per-class losses. alpha and v are constants here.
Tensor imbalanced_loss(const BatchClassStats& stats, std::span<const double> weights,
                       const std::vector<std::optional<Tensor>>& per_class, double alpha);

/// Plain-number L_imb; `per_class` is indexed by class and read only where present.
double imbalanced_loss_value(const BatchClassStats& stats, std::span<const double> weights,
                             std::span<const double> per_class, double alpha);

struct LambdaCoeffs {
  double regression = 0.5;
  double classification = 0.5;
  /// Both norms were below 1e-12 and the (0.5, 0.5) fallback was returned.
  bool degenerate = false;
};

/// Gradient-norm balancing: each task is weighted by the other task's share
/// of the combined gradient norm.
LambdaCoeffs lambda_coeffs(double grad_norm_regression, double grad_norm_classification);

/// lambda_r * w_r * L_r + lambda_c * w_c * L_imb with differentiable weights and losses.
Tensor total_loss(double lambda_r, double lambda_c, const Tensor& w_r, const Tensor& w_c, const Tensor& loss_r,
                  const Tensor& loss_imb);
double total_loss_value(double lambda_r, double lambda_c, double w_r, double w_c, double loss_r, double loss_imb);

/// dL_mtl/dalpha with task weights held fixed: -lambda_c * w_c * sum_k v_k log p_k.
double alpha_grad(double lambda_c, double w_c, std::span<const double> weights, const BatchClassStats& stats);

/// dL_mtl/dbeta with task weights held fixed. Since dv_k/dbeta = -log p_k / p_k^beta,
///   dL/dbeta = -lambda_c * w_c * sum_k (log p_k / p_k^beta) * (p_k L_ck - alpha log p_k).
double beta_grad(double lambda_c, double w_c, const BatchClassStats& stats, std::span<const double> per_class,
                 double alpha, double beta);

}  // namespace dao
