#include <doctest.h>

#include <cmath>

#include "dao/error.hpp"
#include "dao/nn.hpp"
#include "dao/params.hpp"

using namespace dao;

TEST_CASE("store rejects duplicate names and tracks trainable flags") {
  ParameterStore store;
  store.add("a.W", Tensor::zeros({2, 2}));
  store.add("a.b", Tensor::zeros({2}));
  store.add("c.W", Tensor::zeros({3, 1}), false);
  CHECK_THROWS_AS(store.add("a.W", Tensor::zeros({1})), ContractError);
  CHECK(store.scalar_count(false) == 9);
  CHECK(store.scalar_count(true) == 6);
  CHECK(store.set_trainable("a.*", false) == 2);
  CHECK(store.scalar_count(true) == 0);
  CHECK(store.set_trainable("a.*", true) == 2);
  CHECK(store.scalar_count(true) == 6);
  CHECK_FALSE(store.trainable("c.W"));
  CHECK_THROWS_AS(store.get("missing"), ContractError);
}

TEST_CASE("backward maps off-path parameters to zeros and excludes frozen ones") {
  ParameterStore store;
  Tensor x = store.add("x", Tensor::vector({3.0}));
  store.add("unused", Tensor::vector({1.0, 2.0}));
  Tensor frozen = store.add("frozen", Tensor::vector({2.0}), false);
  const auto g = backward(sum(x * x * frozen), store);
  CHECK(g.at("x")[0] == doctest::Approx(12.0));
  CHECK(g.at("unused")[0] == 0.0);
  CHECK(g.at("unused")[1] == 0.0);
  CHECK_FALSE(g.contains("frozen"));
  CHECK(g.size() == 2);
}

TEST_CASE("backward requires a scalar loss") {
  ParameterStore store;
  Tensor x = store.add("x", Tensor::vector({1.0, 2.0}));
  CHECK_THROWS_AS(backward(x * x, store), ContractError);
}

TEST_CASE("sum(W x) gradient has outer-product structure") {
  ParameterStore store;
  Tensor w = store.add("W", Tensor::from({2, 3}, {0.1, 0.2, 0.3, -0.4, 0.5, -0.6}));
  Tensor x = Tensor::from({3, 1}, {1.0, -2.0, 0.5});
  auto f = [&] { return sum(matmul(w, x)); };
  const auto g = backward(f(), store);
  const auto fd = finite_diff([&] { return f().item(); }, store);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(g.at("W")[r * 3 + c] == doctest::Approx(x[c]).epsilon(1e-12));
      CHECK(std::abs(fd.at("W")[r * 3 + c] - x[c]) < 1e-8);
    }
  }
}

TEST_CASE("finite_diff basics") {
  ParameterStore store;
  Tensor x = store.add("x", Tensor::vector({3.0}));
  const auto g = finite_diff([&] { return x[0] * x[0]; }, store);
  CHECK(std::abs(g.at("x")[0] - 6.0) < 1e-8);
  CHECK(x[0] == 3.0);

  const auto zero = finite_diff([] { return 4.0; }, store);
  CHECK(zero.at("x")[0] == 0.0);
}

TEST_CASE("finite_diff agrees with backward on a two-layer network") {
  Rng rng(11);
  ParameterStore store;
  Linear l1 = Linear::create(store, "l1", 4, 6, rng);
  Linear l2 = Linear::create(store, "l2", 6, 2, rng);
  for (auto& v : l1.bias().mutable_data()) v = rng.uniform(-1, 1);
  std::vector<double> xv(12);
  for (auto& v : xv) v = rng.uniform(-1, 1);
  Tensor x = Tensor::from({3, 4}, xv);
  auto f = [&] { return sum(tanh(l2.forward(tanh(l1.forward(x))))); };
  const auto g = backward(f(), store);
  const auto fd = finite_diff([&] { return f().item(); }, store);
  double diff = 0, ref = 0;
  for (const auto& [name, t] : fd.entries()) {
    for (std::size_t i = 0; i < t.numel(); ++i) {
      const double d = g.at(name)[i] - t[i];
      diff += d * d;
      ref += t[i] * t[i];
    }
  }
  CHECK(std::sqrt(diff) / (std::sqrt(ref) + 1e-8) < 1e-4);
}

TEST_CASE("gradient map helpers") {
  GradientMap g;
  g.set("a", Tensor::vector({3, 0}));
  g.set("b", Tensor::vector({4}));
  CHECK(g.l2norm() == doctest::Approx(5.0));
  CHECK(g.l2norm([](std::string_view n) { return n == "a"; }) == doctest::Approx(3.0));
  CHECK(g.all_finite());
  g.set("c", Tensor::vector({std::nan("")}));
  CHECK_FALSE(g.all_finite());
  GradientMap inf;
  inf.set("x", Tensor::vector({1.0, INFINITY}));
  CHECK_FALSE(inf.all_finite());
}
