#include "dao/model.hpp"

#include "dao/error.hpp"

namespace dao {

SentimentModel::SentimentModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), cls_dp1_(config.head_dropout), cls_dp2_(config.head_dropout) {
  if (config.vocab_size < 2 || config.d_embed == 0 || config.d_hidden == 0 || config.d_mid == 0 ||
      config.num_classes < 2) {
    throw ConfigError("model dimensions must be positive (vocab >= 2, classes >= 2)");
  }
  Rng rng(seed);
  std::vector<double> table(config.vocab_size * config.d_embed);
  for (auto& v : table) v = rng.normal();
  embedding_ = params_.add("backbone.embedding", Tensor::from({config.vocab_size, config.d_embed}, std::move(table)));
  trunk_[0] = Linear::create(params_, "backbone.trunk1", config.d_embed, config.d_hidden, rng);
  trunk_[1] = Linear::create(params_, "backbone.trunk2", config.d_hidden, config.d_hidden, rng);
  reg_ll1_ = Linear::create(params_, "head_r.ll1", config.d_hidden, config.d_mid, rng);
  reg_ll2_ = Linear::create(params_, "head_r.ll2", config.d_mid, 1, rng);
  cls_ll1_ = Linear::create(params_, "head_c.ll1", config.d_hidden, config.d_mid, rng);
  cls_ll2_ = Linear::create(params_, "head_c.ll2", config.d_mid, config.num_classes, rng);

  if (config.lora_rank > 0) {
    params_.set_trainable("backbone.*", false);
    LoraOptions options;
    options.rank = config.lora_rank;
    options.alpha = config.lora_alpha > 0.0 ? config.lora_alpha : static_cast<double>(config.lora_rank);
    options.dropout = config.lora_dropout;
    for (std::size_t i = 0; i < 2; ++i) lora_[i] = LoraLinear::wrap(params_, trunk_[i], options, rng);
  }
}

bool SentimentModel::is_backbone(std::string_view name) { return name.starts_with("backbone."); }

Tensor SentimentModel::trunk_layer(std::size_t index, const Tensor& x, Mode mode, Rng& rng) const {
  if (config_.lora_rank > 0) return lora_[index].forward(x, mode, rng);
  return trunk_[index].forward(x);
}

Tensor SentimentModel::encode(const Batch& batch, Mode mode, Rng& rng) const {
  if (batch.size() == 0) throw ContractError("encode: empty batch");
  Tensor pooled = embedding_mean(embedding_, batch.ids, batch.lengths, batch.width);
  return trunk_layer(1, tanh(trunk_layer(0, pooled, mode, rng)), mode, rng);
}

Tensor SentimentModel::regress(const Tensor& hidden) const {
  Tensor out = reg_ll2_.forward(sigmoid(reg_ll1_.forward(hidden)));
  return reshape(out, {out.dim(0)});
}

Tensor SentimentModel::classify(const Tensor& hidden, Mode mode, Rng& rng) const {
  Tensor h = tanh(cls_ll1_.forward(cls_dp1_.forward(hidden, mode, rng)));
  return cls_ll2_.forward(cls_dp2_.forward(h, mode, rng));
}

}  // namespace dao
