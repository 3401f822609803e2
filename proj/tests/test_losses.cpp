#include <doctest.h>

#include <cmath>

#include "dao/error.hpp"
#include "dao/losses.hpp"
#include "dao/params.hpp"
#include "dao/random.hpp"

using namespace dao;

namespace {

std::vector<int> random_labels(Rng& rng, std::size_t n) {
  std::vector<int> z(n);
  for (auto& v : z) v = static_cast<int>(rng.below(kNumClasses));
  return z;
}

Tensor random_logits(Rng& rng, std::size_t n) {
  std::vector<double> v(n * kNumClasses);
  for (auto& x : v) x = rng.uniform(-3, 3);
  return Tensor::from({n, kNumClasses}, v);
}

}  // namespace

TEST_CASE("score to class mapping") {
  CHECK(map_score_to_class(0.6) == 4);
  CHECK(map_score_to_class(0.5) == 3);
  CHECK(map_score_to_class(0.049) == 2);
  CHECK(map_score_to_class(-0.049) == 2);
  CHECK(map_score_to_class(-0.5) == 1);
  CHECK(map_score_to_class(-0.51) == 0);
  CHECK(map_score_to_class(0.0) == 2);
  CHECK(map_score_to_class(1.0) == 4);
  CHECK(map_score_to_class(-1.0) == 0);
  CHECK(map_score_to_class(std::nextafter(0.049, 1.0)) == 3);
  CHECK(map_score_to_class(std::nextafter(-0.049, -1.0)) == 1);
  CHECK_THROWS_AS(map_score_to_class(std::nan("")), DomainError);
}

TEST_CASE("mse loss") {
  CHECK(mse_loss(Tensor::vector({0.2, -0.3}), Tensor::vector({0.2, -0.3})).item() == 0.0);
  CHECK(mse_loss(Tensor::vector({0, 1}), Tensor::vector({0, 0})).item() == 0.5);
  ParameterStore s;
  Tensor p = s.add("p", Tensor::vector({0.5, -0.25, 1.0}));
  Tensor y = Tensor::vector({0.1, 0.2, -0.3});
  const auto g = backward(mse_loss(p, y), s);
  const auto fd = finite_diff([&] { return mse_loss(p, y).item(); }, s);
  for (std::size_t i = 0; i < 3; ++i) {
    const double expected = 2.0 * (p[i] - y[i]) / 3.0;
    CHECK(g.at("p")[i] == doctest::Approx(expected).epsilon(1e-14));
    CHECK(std::abs(fd.at("p")[i] - expected) / std::abs(expected) < 1e-6);
  }
  CHECK_THROWS_AS(mse_loss(Tensor::vector({1, 2}), Tensor::vector({1})), DimensionError);
}

TEST_CASE("cross-entropy values") {
  const std::vector<int> labels{0, 3};
  Tensor confident = Tensor::from({2, 5}, {200, 0, 0, 0, 0, 0, 0, 0, 200, 0});
  CHECK(ce_loss_per_class(confident, labels).total.item() < 1e-80);
  Tensor uniform = Tensor::zeros({2, 5});
  CHECK(ce_loss_per_class(uniform, labels).total.item() == doctest::Approx(std::log(5.0)).epsilon(1e-15));
  CHECK(std::log(5.0) == doctest::Approx(1.6094).epsilon(1e-4));
}

TEST_CASE("cross-entropy decomposes as sum_k p_k L_ck") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(20);
    const auto labels = random_labels(rng, n);
    const auto ce = ce_loss_per_class(random_logits(rng, n), labels);
    const auto stats = class_stats(labels);
    double decomposed = 0.0;
    for (std::size_t k : stats.present_classes()) decomposed += stats.proportions[k] * ce.per_class[k]->item();
    CHECK(std::abs(decomposed - ce.total.item()) <= 1e-12);
    for (std::size_t k = 0; k < kNumClasses; ++k) CHECK(ce.per_class[k].has_value() == stats.present(k));
  }
}

TEST_CASE("class stats") {
  const std::vector<int> labels{1, 1, 1, 0, 2, 2, 2, 2, 4, 4};
  const auto s = class_stats(labels);
  CHECK(s.total == 10);
  CHECK(s.proportions[1] == 0.3);
  CHECK(s.proportions[3] == 0.0);
  CHECK(s.present_classes() == std::vector<std::size_t>{0, 1, 2, 4});

  const std::vector<int> single{3, 3, 3};
  const auto one = class_stats(single);
  CHECK(one.proportions[3] == 1.0);
  CHECK(one.present_classes() == std::vector<std::size_t>{3});

  Rng rng(4);
  for (int t = 0; t < 1000; ++t) {
    const auto st = class_stats(random_labels(rng, 1 + rng.below(30)));
    double total = 0.0;
    for (double p : st.proportions) total += p;
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(class_stats(std::vector<int>{}), ContractError);
  CHECK_THROWS_AS(class_stats(std::vector<int>{5}), ContractError);
}

TEST_CASE("class weights") {
  const std::vector<int> quarter{0, 1, 1, 1};
  const auto s = class_stats(quarter);
  CHECK(class_weights(s, 1.0)[0] == doctest::Approx(4.0).epsilon(1e-15));
  for (std::size_t k : s.present_classes()) CHECK(class_weights(s, 0.0)[k] == 1.0);
  CHECK(class_weights(s, 1.0)[3] == 0.0);

  std::vector<int> tenth(10, 2);
  tenth[0] = 4;
  const auto s10 = class_stats(tenth);
  CHECK(class_weights(s10, 2.0)[4] == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("imbalance loss special cases") {
  Rng rng(5);
  const std::vector<int> single{2, 2, 2, 2};
  Tensor logits = random_logits(rng, 4);
  const auto ce = ce_loss_per_class(logits, single);
  const auto stats = class_stats(single);
  const double l = imbalanced_loss(stats, class_weights(stats, 1.7), ce.per_class, 0.9).item();
  CHECK(std::abs(l - ce.total.item()) < 1e-15);

  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(16);
    const auto labels = random_labels(rng, n);
    const auto c = ce_loss_per_class(random_logits(rng, n), labels);
    const auto st = class_stats(labels);
    CHECK(std::abs(imbalanced_loss(st, class_weights(st, 0.0), c.per_class, 0.0).item() - c.total.item()) <= 1e-12);
    const double a = rng.uniform(0, 2), b = rng.uniform(0, 3);
    const double tensor_value = imbalanced_loss(st, class_weights(st, b), c.per_class, a).item();
    const double plain = imbalanced_loss_value(st, class_weights(st, b), c.per_class_values(), a);
    CHECK(std::abs(tensor_value - plain) <= 1e-12 * std::max(1.0, std::abs(plain)));
  }
}

TEST_CASE("lambda coefficients") {
  auto eq = lambda_coeffs(2.0, 2.0);
  CHECK(eq.regression == 0.5);
  CHECK(eq.classification == 0.5);
  auto l = lambda_coeffs(3.0, 1.0);
  CHECK(l.regression == 0.25);
  CHECK(l.classification == 0.75);
  auto scaled = lambda_coeffs(3.0 * 17.5, 1.0 * 17.5);
  CHECK(std::abs(scaled.regression - 0.25) < 1e-15);
  auto degenerate = lambda_coeffs(0.0, 0.0);
  CHECK(degenerate.degenerate);
  CHECK(degenerate.regression == 0.5);
  CHECK_THROWS_AS(lambda_coeffs(std::nan(""), 1.0), NumericError);
}

TEST_CASE("total loss") {
  CHECK(total_loss_value(1, 1, 1, 0, 0.37, 5.0) == 0.37);
  CHECK(total_loss_value(1, 1, 0.9, 0.1, 0.2, 1.5) == doctest::Approx(0.9 * 0.2 + 0.1 * 1.5).epsilon(1e-15));
  const double a = total_loss_value(0.4, 0.6, 0.7, 0.3, 0.25, 0.0);
  const double b = total_loss_value(0.4, 0.6, 0.7, 0.3, 0.5, 0.0);
  CHECK(b == 2.0 * a);
  Tensor t = total_loss(0.4, 0.6, Tensor::scalar(0.7), Tensor::scalar(0.3), Tensor::scalar(0.25), Tensor::scalar(2.0));
  CHECK(t.item() == doctest::Approx(0.4 * 0.7 * 0.25 + 0.6 * 0.3 * 2.0).epsilon(1e-15));
}

TEST_CASE("alpha gradient") {
  const std::vector<int> single{1, 1, 1};
  const auto s1 = class_stats(single);
  CHECK(alpha_grad(0.7, 0.4, class_weights(s1, 1.0), s1) == 0.0);

  const std::vector<int> balanced{0, 1, 2, 3, 4};
  const auto sb = class_stats(balanced);
  const double g = alpha_grad(1.0, 0.5, class_weights(sb, 0.0), sb);
  CHECK(g == doctest::Approx(2.5 * std::log(5.0)).epsilon(1e-14));
  CHECK(g == doctest::Approx(4.0236).epsilon(1e-4));
}

TEST_CASE("beta gradient") {
  const std::vector<int> single{1, 1, 1};
  const auto s1 = class_stats(single);
  const std::vector<double> per_class{0.4, 1.2, 0.8, 0.5, 0.9};
  CHECK(beta_grad(0.7, 0.4, s1, per_class, 0.3, 1.0) == 0.0);

  const std::vector<int> balanced{0, 1, 2, 3, 4};
  const auto sb = class_stats(balanced);
  const double g = beta_grad(0.6, 0.5, sb, per_class, 0.0, 1.0);
  auto total = [&](double beta) {
    return total_loss_value(0.4, 0.6, 0.5, 0.5, 0.1, imbalanced_loss_value(sb, class_weights(sb, beta), per_class, 0.0));
  };
  const double h = 1e-6;
  const double fd = (total(1.0 + h) - total(1.0 - h)) / (2 * h);
  CHECK(g > 0.0);
  CHECK(std::abs(g - fd) / std::abs(fd) < 1e-5);
  for (std::size_t k = 0; k < kNumClasses; ++k) CHECK(std::log(sb.proportions[k]) * sb.proportions[k] * per_class[k] < 0);
}

TEST_CASE("alpha and beta gradients match finite differences of the total loss") {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    const auto labels = random_labels(rng, 2 + rng.below(15));
    const auto stats = class_stats(labels);
    std::vector<double> per_class(kNumClasses);
    for (auto& v : per_class) v = rng.uniform(0.05, 3);
    const double lr = rng.uniform(0.01, 0.99), wc = rng.uniform(0.01, 0.99);
    const double alpha = rng.uniform(0, 2), beta = rng.uniform(0, 3), loss_r = rng.uniform(0, 1);
    auto total = [&](double a, double b) {
      return total_loss_value(lr, 1 - lr, 1 - wc, wc, loss_r,
                              imbalanced_loss_value(stats, class_weights(stats, b), per_class, a));
    };
    const double h = 1e-6;
    const double fa = (total(alpha + h, beta) - total(alpha - h, beta)) / (2 * h);
    const double fb = (total(alpha, beta + h) - total(alpha, beta - h)) / (2 * h);
    const double ga = alpha_grad(1 - lr, wc, class_weights(stats, beta), stats);
    const double gb = beta_grad(1 - lr, wc, stats, per_class, alpha, beta);
    CHECK(std::abs(ga - fa) / (std::abs(fa) + 1e-8) < 1e-5);
    CHECK(std::abs(gb - fb) / (std::abs(fb) + 1e-8) < 1e-5);
  }
}
