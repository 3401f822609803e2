#include "dao/nn.hpp"

#include <cmath>

#include "dao/error.hpp"

namespace dao {

Linear Linear::create(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
                      Rng& rng, bool trainable) {
  if (in == 0 || out == 0) throw ConfigError("linear layer '" + name + "' needs positive dimensions");
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> w(in * out);
  for (auto& v : w) v = rng.uniform(-limit, limit);

  Linear layer;
  layer.name_ = name;
  layer.in_ = in;
  layer.out_ = out;
  layer.weight_ = store.add(name + ".W", Tensor::from({out, in}, std::move(w)), trainable);
  layer.bias_ = store.add(name + ".b", Tensor::zeros({out}), trainable);
  return layer;
}

Tensor Linear::forward(const Tensor& x) const {
  if (x.ndim() != 2 || x.dim(1) != in_) {
    throw DimensionError("linear '" + name_ + "': expected (batch x " + std::to_string(in_) + ") input, got " +
                         shape_to_string(x.shape()));
  }
  return add_bias(matmul(x, transpose(weight_)), bias_);
}

Dropout::Dropout(double p) : p_(p) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout probability must lie in [0, 1), got " + std::to_string(p));
}

Tensor Dropout::forward(const Tensor& x, Mode mode, Rng& rng) const {
  if (mode == Mode::eval || p_ == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p_);
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = rng.uniform() < p_ ? 0.0 : keep_scale;
  return mul(x, Tensor::from(x.shape(), std::move(mask)));
}

LoraLinear LoraLinear::wrap(ParameterStore& store, const Linear& base, const LoraOptions& options, Rng& rng) {
  if (options.rank < 1) throw ConfigError("LoRA rank must be at least 1");
  LoraLinear layer;
  layer.base_ = base;
  layer.rank_ = options.rank;
  layer.scale_ = options.alpha / static_cast<double>(options.rank);
  layer.dropout_ = Dropout(options.dropout);

  store.set_trainable(base.name() + ".W", false);
  store.set_trainable(base.name() + ".b", false);

  std::vector<double> u(base.out_features() * options.rank);
  for (auto& v : u) v = rng.normal(0.0, options.init_stddev);
  layer.u_ = store.add(base.name() + ".lora_U", Tensor::from({base.out_features(), options.rank}, std::move(u)));
  layer.v_ = store.add(base.name() + ".lora_V", Tensor::zeros({options.rank, base.in_features()}));
  return layer;
}

Tensor LoraLinear::forward(const Tensor& x, Mode mode, Rng& rng) const {
  Tensor out = base_.forward(x);
  Tensor branch = dropout_.forward(x, mode, rng);
  Tensor delta = matmul(matmul(branch, transpose(v_)), transpose(u_));
  return out + dao::scale(delta, scale_);
}

}  // namespace dao
