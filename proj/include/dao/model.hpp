#pragma once

#include <cstddef>
#include <cstdint>

#include "dao/data.hpp"
#include "dao/nn.hpp"
#include "dao/params.hpp"

namespace dao {

struct ModelConfig {
  std::size_t vocab_size = 32768;
  std::size_t d_embed = 64;
  std::size_t d_hidden = 64;
  std::size_t d_mid = 32;
  std::size_t num_classes = 5;
  double head_dropout = 0.1;
  /// 0 disables LoRA (full fine-tuning of the backbone).
  std::size_t lora_rank = 0;
  /// LoRA scaling numerator; 0 means "equal to the rank" (scale 1).
  double lora_alpha = 0.0;
  double lora_dropout = 0.05;
};

/// Hashing-embedding mean-pool encoder with a two-layer tanh trunk, a
/// regression head LL2(sigmoid(LL1(H))) and a classification head
/// LL2(DP2(tanh(LL1(DP1(H))))).
///
/// Parameter names: "backbone.embedding", "backbone.trunk1.*",
/// "backbone.trunk2.*", "head_r.ll1.*", "head_r.ll2.*", "head_c.ll1.*",
/// "head_c.ll2.*". With LoRA on, the backbone is frozen and each trunk layer
/// gains "<layer>.lora_U" / "<layer>.lora_V".
class SentimentModel {
 public:
  SentimentModel(const ModelConfig& config, std::uint64_t seed);

  SentimentModel(const SentimentModel&) = delete;
  SentimentModel& operator=(const SentimentModel&) = delete;
  SentimentModel(SentimentModel&&) = default;
  SentimentModel& operator=(SentimentModel&&) = default;

  /// (batch x d_hidden) sentence representations.
  Tensor encode(const Batch& batch, Mode mode, Rng& rng) const;
  /// Polarity score per sample, shape (batch).
  Tensor regress(const Tensor& hidden) const;
  /// (batch x num_classes) logits; dropout only in train mode.
  Tensor classify(const Tensor& hidden, Mode mode, Rng& rng) const;

  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const ModelConfig& config() const { return config_; }

  /// True for parameters whose gradients define the shared-trunk norm.
  static bool is_backbone(std::string_view name);

 private:
  Tensor trunk_layer(std::size_t index, const Tensor& x, Mode mode, Rng& rng) const;

  ModelConfig config_;
  ParameterStore params_;
  Tensor embedding_;
  Linear trunk_[2];
  LoraLinear lora_[2];
  Linear reg_ll1_, reg_ll2_;
  Linear cls_ll1_, cls_ll2_;
  Dropout cls_dp1_, cls_dp2_;
};

}  // namespace dao
