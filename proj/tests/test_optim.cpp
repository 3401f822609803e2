#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dao/error.hpp"
#include "dao/optim.hpp"

using namespace dao;

namespace {

GradientMap grads_of(const ParameterStore& store, double g) {
  GradientMap map;
  for (const auto& e : store.entries()) {
    if (e.trainable) map.set(e.name, Tensor::full(e.value.shape(), g));
  }
  return map;
}

}  // namespace

TEST_CASE("zero gradient without decay leaves parameters unchanged") {
  ParameterStore store;
  store.add("W", Tensor::from({2, 2}, {1, -2, 3, 0.5}));
  AdamOptimizer opt;
  opt.step(store, grads_of(store, 0.0), 0.1);
  const auto w = store.get("W").data();
  CHECK(std::vector<double>(w.begin(), w.end()) == std::vector<double>{1, -2, 3, 0.5});
  CHECK(opt.timestep() == 1);
}

TEST_CASE("first step has the closed form -lr g / (|g| + eps)") {
  ParameterStore store;
  store.add("b", Tensor::vector({0.5, -0.5, 2.0}));
  AdamOptimizer opt;
  const double lr = 0.01, g = -0.3;
  opt.step(store, grads_of(store, g), lr);
  const double delta = -lr * g / (std::abs(g) + 1e-8);
  const auto b = store.get("b").data();
  CHECK(std::abs(b[0] - (0.5 + delta)) < 1e-10);
  CHECK(std::abs(b[2] - (2.0 + delta)) < 1e-10);
}

TEST_CASE("adam and adamw differ by lr * wd * p on matrices only") {
  auto run = [](AdamVariant variant) {
    ParameterStore store;
    store.add("W", Tensor::from({1, 3}, {1.0, -2.0, 0.25}));
    store.add("b", Tensor::vector({3.0}));
    AdamOptions o;
    o.weight_decay = 0.1;
    o.variant = variant;
    AdamOptimizer opt(o);
    opt.step(store, grads_of(store, 0.2), 0.05);
    std::vector<double> out;
    for (const auto& e : store.entries()) out.insert(out.end(), e.value.data().begin(), e.value.data().end());
    return out;
  };
  const auto adam = run(AdamVariant::adam);
  const auto adamw = run(AdamVariant::adamw);
  const std::vector<double> p{1.0, -2.0, 0.25};
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs((adam[i] - adamw[i]) - 0.05 * 0.1 * p[i]) < 1e-15);
  CHECK(adam[3] == adamw[3]);
}

TEST_CASE("bias-corrected recurrence over several steps") {
  ParameterStore store;
  store.add("x", Tensor::vector({1.0}));
  AdamOptimizer opt;
  const std::vector<double> gs{0.5, -0.2, 0.9, 0.1};
  double m = 0, v = 0, x = 1.0;
  for (std::size_t t = 1; t <= gs.size(); ++t) {
    GradientMap g;
    g.set("x", Tensor::vector({gs[t - 1]}));
    opt.step(store, g, 0.01);
    m = 0.9 * m + 0.1 * gs[t - 1];
    v = 0.999 * v + 0.001 * gs[t - 1] * gs[t - 1];
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    x -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(std::abs(store.get("x")[0] - x) < 1e-10);
  }
}

TEST_CASE("frozen parameters are skipped and missing gradients rejected") {
  ParameterStore store;
  store.add("frozen", Tensor::vector({1.0}), false);
  store.add("live", Tensor::vector({1.0}));
  AdamOptimizer opt;
  GradientMap g;
  g.set("live", Tensor::vector({1.0}));
  opt.step(store, g, 0.1);
  CHECK(store.get("frozen")[0] == 1.0);
  CHECK(store.get("live")[0] < 1.0);
  CHECK_THROWS_AS(opt.step(store, GradientMap{}, 0.1), ContractError);
}

TEST_CASE("learning-rate schedule") {
  LrSchedule s{1.0, 100, 1100};
  CHECK(s.lr_at(0) == 0.0);
  CHECK(s.lr_at(50) == 0.5);
  CHECK(s.lr_at(100) == 1.0);
  CHECK(s.lr_at(600) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(s.lr_at(1100)) < 1e-15);
  CHECK(s.lr_at(5000) == 0.0);
  double prev = s.lr_at(100);
  for (std::size_t t = 101; t <= 1100; ++t) {
    CHECK(s.lr_at(t) <= prev);
    prev = s.lr_at(t);
  }
}
