#include "dao/metrics.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "dao/error.hpp"

namespace dao {

namespace {

__extension__ typedef unsigned __int128 u128;

// Non-negative fraction over unsigned 128-bit integers, kept reduced.
struct Fraction {
  u128 num = 0;
  u128 den = 1;

  static u128 gcd(u128 a, u128 b) {
    while (b != 0) {
      const auto t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Fraction make(u128 num, u128 den) {
    if (den == 0) return {0, 1};
    const auto g = gcd(num, den);
    return g == 0 ? Fraction{0, 1} : Fraction{num / g, den / g};
  }

  Fraction operator+(const Fraction& o) const {
    const auto g = gcd(den, o.den);
    return make(num * (o.den / g) + o.num * (den / g), den / g * o.den);
  }
  Fraction operator*(const Fraction& o) const {
    const auto g1 = gcd(num, o.den);
    const auto g2 = gcd(o.num, den);
    const auto a = g1 ? num / g1 : num;
    const auto d = g1 ? o.den / g1 : o.den;
    const auto c = g2 ? o.num / g2 : o.num;
    const auto b = g2 ? den / g2 : den;
    return make(a * c, b * d);
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

}  // namespace

RegressionMetrics regression_metrics(std::span<const double> predicted, std::span<const double> target) {
  if (predicted.empty() || predicted.size() != target.size()) {
    throw ContractError("regression_metrics: need equal non-empty inputs");
  }
  const double n = static_cast<double>(target.size());
  double sq = 0.0, abs_err = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = predicted[i] - target[i];
    sq += d * d;
    abs_err += std::abs(d);
    mean_y += target[i];
  }
  mean_y /= n;
  double ss_tot = 0.0;
  for (double y : target) ss_tot += (y - mean_y) * (y - mean_y);

  RegressionMetrics m;
  m.mse = sq / n;
  m.mae = abs_err / n;
  m.rmse = std::sqrt(m.mse);
  if (ss_tot > 0.0) {
    m.r2 = 1.0 - sq / ss_tot;
  } else {
    m.r2 = std::numeric_limits<double>::quiet_NaN();
    m.r2_defined = false;
  }
  return m;
}

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes) : k_(num_classes), counts_(num_classes * num_classes, 0) {
  if (num_classes == 0) throw ContractError("confusion matrix needs at least one class");
}

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes, std::vector<std::uint64_t> counts)
    : k_(num_classes), counts_(std::move(counts)) {
  if (num_classes == 0 || counts_.size() != num_classes * num_classes) {
    throw ContractError("confusion matrix counts must be K x K");
  }
}

void ConfusionMatrix::add(int truth, int predicted, std::uint64_t n) {
  if (truth < 0 || predicted < 0 || static_cast<std::size_t>(truth) >= k_ || static_cast<std::size_t>(predicted) >= k_) {
    throw ContractError("confusion matrix class out of range");
  }
  counts_[static_cast<std::size_t>(truth) * k_ + static_cast<std::size_t>(predicted)] += n;
}

std::uint64_t ConfusionMatrix::support(std::size_t k) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < k_; ++j) s += at(k, j);
  return s;
}

std::uint64_t ConfusionMatrix::predicted_count(std::size_t k) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += at(i, k);
  return s;
}

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw ContractError("classification_metrics: empty confusion matrix");

  Fraction correct, w_precision, w_recall;
  double w_f1 = 0.0;
  for (std::size_t k = 0; k < cm.num_classes(); ++k) {
    const auto tp = cm.at(k, k);
    const auto support = cm.support(k);
    const auto predicted = cm.predicted_count(k);
    const Fraction weight = Fraction::make(support, total);
    const Fraction precision = Fraction::make(tp, predicted);
    const Fraction recall = Fraction::make(tp, support);
    correct = correct + Fraction::make(tp, 1);
    w_precision = w_precision + precision * weight;
    w_recall = w_recall + recall * weight;
    const double p = precision.value(), r = recall.value();
    const double f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    w_f1 += f1 * weight.value();
  }

  ClassificationMetrics m;
  m.accuracy = (correct * Fraction::make(1, total)).value();
  m.weighted_precision = w_precision.value();
  m.weighted_recall = w_recall.value();
  m.weighted_f1 = w_f1;
  return m;
}

std::vector<std::pair<std::string, double>> MetricReport::to_key_values() const {
  return {{"mse", regression.mse},
          {"mae", regression.mae},
          {"rmse", regression.rmse},
          {"r2", regression.r2},
          {"acc", classification.accuracy},
          {"weighted_precision", classification.weighted_precision},
          {"weighted_recall", classification.weighted_recall},
          {"weighted_f1", classification.weighted_f1}};
}

}  // namespace dao
