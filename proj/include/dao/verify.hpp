#pragma once

// Self-check suite behind `dao verify`: gradient checks of every op, layer
// and loss against central differences, plus the algebraic invariants of the
// loss and metric code.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dao/params.hpp"
#include "dao/random.hpp"

namespace dao {

/// A scalar function of some parameters, rebuilt on every call.
struct GradientProblem {
  std::shared_ptr<ParameterStore> params;
  std::function<Tensor()> loss;
  /// Keeps layer objects referenced by `loss` alive.
  std::shared_ptr<void> owner;
};

struct GradientCase {
  std::string name;
  std::function<GradientProblem(Rng&)> build;
};

/// Every differentiable op, layer and loss, each with random inputs drawn from the Rng.
std::vector<GradientCase> gradient_cases();

/// ||autodiff - central difference|| / (||central difference|| + 1e-8) over
/// all trainable parameters of the problem.
double gradient_relative_error(GradientProblem& problem, double h = 1e-5);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 42;
};

std::vector<CheckResult> run_verification(const VerifyOptions& options = {});

}  // namespace dao
