#include <doctest.h>

#include <cmath>

#include "dao/error.hpp"
#include "dao/nn.hpp"

using namespace dao;

TEST_CASE("linear with identity weights and zero bias is the identity") {
  Rng rng(1);
  ParameterStore store;
  Linear l = Linear::create(store, "fc", 3, 3, rng);
  auto w = l.weight().mutable_data();
  std::fill(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
  Tensor x = Tensor::from({2, 3}, {1, -2, 3, 0.5, 0, -1});
  Tensor y = l.forward(x);
  for (std::size_t i = 0; i < 6; ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("linear with zero weights outputs the bias") {
  Rng rng(1);
  ParameterStore store;
  Linear l = Linear::create(store, "fc", 4, 2, rng);
  auto w = l.weight().mutable_data();
  std::fill(w.begin(), w.end(), 0.0);
  l.bias().mutable_data()[0] = 0.7;
  l.bias().mutable_data()[1] = -1.25;
  Tensor y = l.forward(Tensor::from({3, 4}, std::vector<double>(12, 5.0)));
  CHECK(y.shape() == Shape{3, 2});
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(y[r * 2] == 0.7);
    CHECK(y[r * 2 + 1] == -1.25);
  }
  CHECK_THROWS_AS(l.forward(Tensor::zeros({3, 5})), DimensionError);
}

TEST_CASE("linear registers Xavier-bounded weights and zero biases") {
  Rng rng(3);
  ParameterStore store;
  Linear l = Linear::create(store, "fc", 20, 30, rng);
  CHECK(store.contains("fc.W"));
  CHECK(store.contains("fc.b"));
  const double bound = std::sqrt(6.0 / 50.0);
  for (double v : l.weight().data()) CHECK(std::abs(v) <= bound);
  for (double v : l.bias().data()) CHECK(v == 0.0);
}

TEST_CASE("dropout") {
  Rng rng(5);
  Tensor x = Tensor::vector(std::vector<double>(100, 2.0));
  Dropout d(0.5);
  Tensor e = d.forward(x, Mode::eval, rng);
  for (std::size_t i = 0; i < 100; ++i) CHECK(e[i] == 2.0);
  Dropout none(0.0);
  Tensor t = none.forward(x, Mode::train, rng);
  for (std::size_t i = 0; i < 100; ++i) CHECK(t[i] == 2.0);
  CHECK_THROWS_AS(Dropout(1.0), ConfigError);
  CHECK_THROWS_AS(Dropout(-0.1), ConfigError);
}

TEST_CASE("dropout survivor fraction and expectation over 1e5 elements") {
  Rng rng(6);
  const std::size_t n = 100000;
  Tensor x = Tensor::vector(std::vector<double>(n, 1.0));
  Tensor y = Dropout(0.5).forward(x, Mode::train, rng);
  std::size_t survivors = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] != 0.0) {
      ++survivors;
      CHECK(y[i] == 2.0);
    }
    total += y[i];
  }
  const double frac = static_cast<double>(survivors) / n;
  CHECK(frac >= 0.49);
  CHECK(frac <= 0.51);
  CHECK(std::abs(total / n - 1.0) <= 0.02);
}

TEST_CASE("LoRA adapter starts as the frozen base and counts r(d_out + d_in) parameters") {
  Rng rng(8);
  ParameterStore store;
  Linear base = Linear::create(store, "fc", 12, 7, rng);
  for (auto& v : base.bias().mutable_data()) v = rng.uniform(-1, 1);
  for (std::size_t r : {8u, 16u, 32u, 64u, 128u, 256u, 384u, 512u}) {
    ParameterStore s;
    Linear b = Linear::create(s, "fc", 12, 7, rng);
    LoraOptions o;
    o.rank = r;
    o.alpha = static_cast<double>(r);
    LoraLinear l = LoraLinear::wrap(s, b, o, rng);
    CHECK(s.scalar_count(true) == r * (7 + 12));
    CHECK(l.scale() == 1.0);
  }
  LoraOptions o;
  o.rank = 4;
  LoraLinear lora = LoraLinear::wrap(store, base, o, rng);
  CHECK_FALSE(store.trainable("fc.W"));
  CHECK_FALSE(store.trainable("fc.b"));
  CHECK(store.trainable("fc.lora_U"));
  CHECK(store.trainable("fc.lora_V"));
  std::vector<double> xv(24);
  for (auto& v : xv) v = rng.uniform(-2, 2);
  Tensor x = Tensor::from({2, 12}, xv);
  Tensor a = lora.forward(x, Mode::train, rng);
  Tensor b = base.forward(x);
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);

  LoraOptions bad;
  bad.rank = 0;
  ParameterStore s2;
  Linear b2 = Linear::create(s2, "g", 2, 2, rng);
  CHECK_THROWS_AS(LoraLinear::wrap(s2, b2, bad, rng), ConfigError);
}

TEST_CASE("LoRA output follows the low-rank formula") {
  Rng rng(9);
  ParameterStore store;
  Linear base = Linear::create(store, "fc", 3, 2, rng);
  LoraOptions o;
  o.rank = 1;
  o.alpha = 2.0;
  o.dropout = 0.0;
  LoraLinear lora = LoraLinear::wrap(store, base, o, rng);
  Tensor v = lora.v();
  v.mutable_data()[0] = 1.0;
  v.mutable_data()[1] = 2.0;
  v.mutable_data()[2] = 3.0;
  Tensor x = Tensor::from({1, 3}, {1.0, 1.0, 1.0});
  Tensor y = lora.forward(x, Mode::eval, rng);
  Tensor yb = base.forward(x);
  for (std::size_t j = 0; j < 2; ++j) {
    const double expected = yb[j] + 2.0 * 6.0 * lora.u()[j];
    CHECK(y[j] == doctest::Approx(expected).epsilon(1e-14));
  }
}
