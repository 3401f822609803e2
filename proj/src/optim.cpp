#include "dao/optim.hpp"

#include <cmath>
#include <numbers>

#include "dao/error.hpp"

namespace dao {

AdamOptimizer::Moments& AdamOptimizer::moments_for(const std::string& name, std::size_t size) {
  for (auto& m : moments_) {
    if (m.name == name) {
      if (m.m.size() != size) throw DimensionError("optimizer state for '" + name + "' has the wrong size");
      return m;
    }
  }
  moments_.push_back({name, std::vector<double>(size, 0.0), std::vector<double>(size, 0.0)});
  return moments_.back();
}

void AdamOptimizer::step(ParameterStore& params, const GradientMap& grads, double lr) {
  ++timestep_;
  const double t = static_cast<double>(timestep_);
  const double bias1 = 1.0 - std::pow(options_.beta1, t);
  const double bias2 = 1.0 - std::pow(options_.beta2, t);
  const bool decoupled = options_.variant == AdamVariant::adamw && options_.weight_decay != 0.0;

  for (const auto& entry : params.entries()) {
    if (!entry.trainable) continue;
    const Tensor* grad = grads.find(entry.name);
    if (grad == nullptr) throw ContractError("no gradient supplied for trainable parameter '" + entry.name + "'");
    Tensor value = entry.value;
    if (grad->numel() != value.numel()) {
      throw DimensionError("gradient for '" + entry.name + "' has shape " + shape_to_string(grad->shape()) +
                           ", parameter has " + shape_to_string(value.shape()));
    }
    auto p = value.mutable_data();
    const auto g = grad->data();
    auto& state = moments_for(entry.name, p.size());
    const double keep = decoupled && value.ndim() >= 2 ? 1.0 - lr * options_.weight_decay : 1.0;
    const double b1 = options_.beta1, b2 = options_.beta2, eps = options_.eps;
    const double inv_bias1 = 1.0 / bias1, inv_bias2 = 1.0 / bias2;
    double* m = state.m.data();
    double* v = state.v.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      p[i] = keep * p[i] - lr * (m[i] * inv_bias1) / (std::sqrt(v[i] * inv_bias2) + eps);
    }
  }
}

void AdamOptimizer::restore(std::size_t timestep, std::vector<Moments> moments) {
  for (const auto& m : moments) {
    if (m.m.size() != m.v.size()) throw FormatError("optimizer moments for '" + m.name + "' differ in size");
  }
  timestep_ = timestep;
  moments_ = std::move(moments);
}

double LrSchedule::lr_at(std::size_t step) const {
  if (step > total_steps) return 0.0;
  if (step < warmup_steps) return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (total_steps <= warmup_steps) return base_lr;
  const double progress =
      static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace dao
