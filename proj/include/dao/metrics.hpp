#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dao {

struct RegressionMetrics {
  double mse = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  /// NaN when the targets have zero variance (see r2_defined).
  double r2 = 0.0;
  bool r2_defined = true;
};

/// Throws ContractError on empty or unequal inputs.
RegressionMetrics regression_metrics(std::span<const double> predicted, std::span<const double> target);

/// K x K counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);
  ConfusionMatrix(std::size_t num_classes, std::vector<std::uint64_t> counts);

  void add(int truth, int predicted, std::uint64_t n = 1);

  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }
  std::uint64_t support(std::size_t k) const;
  std::uint64_t predicted_count(std::size_t k) const;
  std::uint64_t total() const;
  std::size_t num_classes() const { return k_; }

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
};

/// Support-weighted precision / recall / F1. A per-class ratio whose
/// denominator is zero counts as 0. Precision and recall are accumulated as
/// exact fractions of the counts, so weighted recall equals accuracy bit for
/// bit. Throws ContractError on an empty matrix.
ClassificationMetrics classification_metrics(const ConfusionMatrix& cm);

struct MetricReport {
  RegressionMetrics regression;
  ClassificationMetrics classification;

  /// Flat key/value view: mse, mae, rmse, r2, acc, weighted_precision,
  /// weighted_recall, weighted_f1.
  std::vector<std::pair<std::string, double>> to_key_values() const;
};

}  // namespace dao
