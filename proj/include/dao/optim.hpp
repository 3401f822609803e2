#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dao/params.hpp"

namespace dao {

enum class AdamVariant { adam, adamw };

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Decoupled decay, used by the adamw variant only.
  double weight_decay = 0.0;
  AdamVariant variant = AdamVariant::adamw;
};

/// Bias-corrected Adam / AdamW over a ParameterStore.
///
/// AdamW decay is decoupled (p <- p - lr*wd*p before the moment update) and
/// applies to matrices only: biases and scalars are never decayed. Frozen
/// parameters are skipped entirely.
class AdamOptimizer {
 public:
  struct Moments {
    std::string name;
    std::vector<double> m;
    std::vector<double> v;
  };

  explicit AdamOptimizer(AdamOptions options = {}) : options_(options) {}

  void step(ParameterStore& params, const GradientMap& grads, double lr);

  std::size_t timestep() const { return timestep_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<Moments>& moments() const { return moments_; }

  /// Restores serialized state.
  void restore(std::size_t timestep, std::vector<Moments> moments);

 private:
  Moments& moments_for(const std::string& name, std::size_t size);

  AdamOptions options_;
  std::size_t timestep_ = 0;
  std::vector<Moments> moments_;
};

/// Linear warmup from 0, then half-cosine decay to 0 at total_steps.
struct LrSchedule {
  double base_lr = 1e-5;
  std::size_t warmup_steps = 100;
  std::size_t total_steps = 1000;

  double lr_at(std::size_t step) const;
};

}  // namespace dao
