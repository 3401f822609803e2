#include <doctest.h>

#include <cmath>

#include "dao/data.hpp"
#include "dao/losses.hpp"
#include "dao/model.hpp"
#include "dao/verify.hpp"

using namespace dao;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.vocab_size = 50;
  c.d_embed = 8;
  c.d_hidden = 6;
  c.d_mid = 4;
  return c;
}

Batch batch_of(const std::vector<std::vector<std::size_t>>& rows) {
  TokenizedCorpus corpus;
  for (const auto& r : rows) {
    corpus.tokens.push_back(r);
    corpus.scores.push_back(0.0);
    corpus.labels.push_back(2);
  }
  std::vector<std::size_t> idx(rows.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return make_batch(corpus, idx);
}

}  // namespace

TEST_CASE("parameter names and LoRA freezing") {
  SentimentModel full(small_config(), 1);
  for (const char* name : {"backbone.embedding", "backbone.trunk1.W", "backbone.trunk2.b", "head_r.ll1.W",
                           "head_r.ll2.b", "head_c.ll1.W", "head_c.ll2.W"}) {
    CHECK(full.params().contains(name));
  }
  CHECK(SentimentModel::is_backbone("backbone.trunk1.W"));
  CHECK_FALSE(SentimentModel::is_backbone("head_c.ll1.W"));

  ModelConfig lc = small_config();
  lc.lora_rank = 2;
  SentimentModel lora(lc, 1);
  for (const auto& e : lora.params().entries()) {
    const bool adapter = e.name.ends_with("lora_U") || e.name.ends_with("lora_V");
    if (SentimentModel::is_backbone(e.name)) {
      CHECK(e.trainable == adapter);
    } else {
      CHECK(e.trainable);
    }
  }
  CHECK(lora.params().scalar_count(true) < full.params().scalar_count(true));

  const std::size_t before = full.params().scalar_count(true);
  full.params().set_trainable("backbone.*", false);
  CHECK(full.params().scalar_count(true) < before);
  full.params().set_trainable("backbone.*", true);
  CHECK(full.params().scalar_count(true) == before);
}

TEST_CASE("frozen backbone receives no gradient") {
  SentimentModel model(small_config(), 2);
  model.params().set_trainable("backbone.*", false);
  Rng rng(1);
  Batch b = batch_of({{1, 2, 3}, {4, 5}});
  Tensor h = model.encode(b, Mode::eval, rng);
  const auto g = backward(sum(model.regress(h)), model.params());
  for (const auto& [name, t] : g.entries()) CHECK_FALSE(SentimentModel::is_backbone(name));
}

TEST_CASE("encoder is deterministic and order-free") {
  SentimentModel model(small_config(), 3);
  Rng rng(1);
  Batch b = batch_of({{7, 8, 9, 10}, {10, 9, 8, 7}, {7, 8, 9, 10}});
  Tensor h = model.encode(b, Mode::eval, rng);
  const std::size_t d = small_config().d_hidden;
  CHECK(h.shape() == Shape{3, d});
  for (std::size_t j = 0; j < d; ++j) {
    CHECK(h[j] == h[2 * d + j]);
    CHECK(std::abs(h[j] - h[d + j]) < 1e-14);
  }
}

TEST_CASE("heads") {
  SentimentModel model(small_config(), 4);
  Rng rng(1);
  Batch b = batch_of({{1, 2}, {3}, {4, 5, 6}});
  Tensor h = model.encode(b, Mode::eval, rng);

  auto& w = model.params().get("head_r.ll2.W");
  for (auto& v : w.mutable_data()) v = 0.0;
  model.params().get("head_r.ll2.b").mutable_data()[0] = 0.3;
  Tensor s = model.regress(h);
  CHECK(s.shape() == Shape{3});
  for (std::size_t i = 0; i < 3; ++i) CHECK(s[i] == 0.3);

  Tensor l1 = model.classify(h, Mode::eval, rng);
  Tensor l2 = model.classify(h, Mode::eval, rng);
  CHECK(l1.shape() == Shape{3, 5});
  for (std::size_t i = 0; i < l1.numel(); ++i) CHECK(l1[i] == l2[i]);

  for (auto& v : model.params().get("head_c.ll2.W").mutable_data()) v = 0.0;
  Tensor zero_h = Tensor::zeros({2, small_config().d_hidden});
  Tensor logits = model.classify(zero_h, Mode::eval, rng);
  Tensor p = softmax(reshape(gather(logits, std::vector<std::size_t>{0, 1, 2, 3, 4}), {5}));
  for (std::size_t k = 0; k < 5; ++k) CHECK(p[k] == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("large hidden and mid widths are accepted") {
  ModelConfig c = small_config();
  c.d_hidden = 1024;
  c.d_mid = 128;
  c.d_embed = 4;
  SentimentModel model(c, 5);
  Rng rng(1);
  Batch b = batch_of({{1, 2}});
  Tensor h = model.encode(b, Mode::eval, rng);
  CHECK(model.regress(h).shape() == Shape{1});
  CHECK(model.classify(h, Mode::eval, rng).shape() == Shape{1, 5});
  CHECK(model.params().get("head_r.ll1.W").shape() == Shape{128, 1024});
  CHECK(model.params().get("head_c.ll2.W").shape() == Shape{5, 128});
}

TEST_CASE("end-to-end gradient through encode") {
  Rng rng(12);
  for (const auto& c : gradient_cases()) {
    if (c.name != "model_end_to_end" && c.name != "model_lora_end_to_end") continue;
    for (int t = 0; t < 5; ++t) {
      GradientProblem p = c.build(rng);
      CHECK(gradient_relative_error(p) < 1e-4);
    }
  }
}
