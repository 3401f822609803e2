#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "dao/nn.hpp"
#include "dao/optim.hpp"
#include "dao/params.hpp"

namespace dao {

struct DaoOptions {
  std::size_t hidden = 16;
  double lr = 1e-3;
  double alpha_init = 0.1;
  double beta_init = 1.0;
  double alpha_min = 0.0;
  double alpha_max = 10.0;
  double beta_min = 0.0;
  double beta_max = 5.0;
  /// Zero the output layer so the first task weights are exactly (0.5, 0.5).
  bool zero_init_output = true;
};

struct TaskWeights {
  Tensor weights;  // softmax output, length 2
  Tensor regression;
  Tensor classification;
};

/// Two-layer task-weight network w = softmax(FC2(relu(FC1([l_r, l_c])))) plus
/// the learnable imbalance scalars alpha and beta. One Adam optimizer (no
/// weight decay) owns FC1, FC2, alpha and beta; alpha and beta are clamped to
/// their bounds after every update.
class DaoController {
 public:
  static constexpr std::uint32_t kSnapshotVersion = 1;

  DaoController(const DaoOptions& options, std::uint64_t seed);

  DaoController(const DaoController&) = delete;
  DaoController& operator=(const DaoController&) = delete;
  DaoController(DaoController&&) = default;
  DaoController& operator=(DaoController&&) = default;

  /// `weighted_losses` is the 2-vector [lambda_r * L_r, lambda_c * L_imb].
  /// Throws NumericError on non-finite input.
  TaskWeights forward(const Tensor& weighted_losses);

  /// One Adam step on the FC layers from `fc_grads`, and on alpha / beta from
  /// their analytic gradients.
  void step(const GradientMap& fc_grads, double alpha_grad, double beta_grad);

  double alpha() const;
  double beta() const;
  const DaoOptions& options() const { return options_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const AdamOptimizer& optimizer() const { return optimizer_; }

  /// Number of forward() and step() calls made on this instance.
  std::uint64_t invocations() const { return invocations_; }

  /// Lossless binary record of parameters, alpha, beta and optimizer state.
  std::string snapshot() const;
  /// Throws FormatError on a corrupt record or a version mismatch.
  static DaoController restore(std::string_view record);

 private:
  DaoController() = default;

  DaoOptions options_;
  ParameterStore params_;
  Linear fc1_;
  Linear fc2_;
  Tensor alpha_;
  Tensor beta_;
  AdamOptimizer optimizer_;
  std::uint64_t invocations_ = 0;
};

}  // namespace dao
