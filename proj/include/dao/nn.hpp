#pragma once

#include <cstddef>
#include <string>

#include "dao/params.hpp"
#include "dao/random.hpp"
#include "dao/tensor.hpp"

namespace dao {

enum class Mode { train, eval };

/// Affine layer y = x W^T + b over a (batch x in) input. W is (out x in).
class Linear {
 public:
  Linear() = default;

  /// Registers "<name>.W" (Xavier-uniform) and "<name>.b" (zeros) in the store.
  static Linear create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                       Rng& rng, bool trainable = true);

  Tensor forward(const Tensor& x) const;

  const std::string& name() const { return name_; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

 private:
  std::string name_;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Tensor weight_;
  Tensor bias_;
};

/// Inverted dropout: in train mode each element is zeroed with probability p
/// and survivors are scaled by 1/(1-p). Eval mode is the identity.
class Dropout {
 public:
  explicit Dropout(double p = 0.0);

  Tensor forward(const Tensor& x, Mode mode, Rng& rng) const;
  double p() const { return p_; }

 private:
  double p_;
};

struct LoraOptions {
  std::size_t rank = 8;
  /// Scaling numerator; the adapter output is multiplied by alpha / rank.
  double alpha = 8.0;
  double dropout = 0.05;
  double init_stddev = 0.02;
};

/// Frozen linear layer plus a trainable low-rank update:
///   y = x W^T + b + (alpha/r) * drop(x) V^T U^T
/// with U (out x r) ~ N(0, init_stddev^2) and V (r x in) = 0, so the adapter
/// contributes nothing until V moves.
class LoraLinear {
 public:
  LoraLinear() = default;

  /// Freezes `base` in the store and registers "<base>.lora_U" / "<base>.lora_V".
  static LoraLinear wrap(ParameterStore& store, const Linear& base, const LoraOptions& options, Rng& rng);

  Tensor forward(const Tensor& x, Mode mode, Rng& rng) const;

  const Linear& base() const { return base_; }
  std::size_t rank() const { return rank_; }
  double scale() const { return scale_; }
  const Tensor& u() const { return u_; }
  const Tensor& v() const { return v_; }

 private:
  Linear base_;
  std::size_t rank_ = 0;
  double scale_ = 1.0;
  Dropout dropout_;
  Tensor u_;
  Tensor v_;
};

}  // namespace dao
