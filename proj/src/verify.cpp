#include "dao/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "dao/controller.hpp"
#include "dao/data.hpp"
#include "dao/losses.hpp"
#include "dao/metrics.hpp"
#include "dao/model.hpp"
#include "dao/nn.hpp"
#include "dao/optim.hpp"

namespace dao {

namespace {

std::vector<double> random_values(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Values bounded away from zero, for ops with a kink there.
std::vector<double> random_nonzero(Rng& rng, std::size_t n, double bound) {
  std::vector<double> v(n);
  for (auto& x : v) {
    do {
      x = rng.uniform(-bound, bound);
    } while (std::abs(x) < 1e-2);
  }
  return v;
}

Tensor random_param(ParameterStore& store, const std::string& name, Rng& rng, Shape shape, double lo = -1.0,
                    double hi = 1.0) {
  const auto n = shape_numel(shape);
  return store.add(name, Tensor::from(std::move(shape), random_values(rng, n, lo, hi)));
}

// Projects an arbitrary-shaped output onto a scalar with fixed random weights.
std::function<Tensor(const Tensor&)> projector(Rng& rng, std::size_t n) {
  Tensor weights = Tensor::vector(random_values(rng, n, -1.0, 1.0));
  return [weights](const Tensor& out) { return sum(reshape(out, {out.numel()}) * weights); };
}

GradientProblem unary_case(Rng& rng, Tensor (*op)(const Tensor&), std::vector<double> values) {
  auto store = std::make_shared<ParameterStore>();
  Tensor x = store->add("x", Tensor::vector(std::move(values)));
  auto project = projector(rng, op(x.detach()).numel());
  return {store, [=] { return project(op(x)); }, nullptr};
}

std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<int> z(n);
  for (auto& v : z) v = static_cast<int>(rng.below(k));
  return z;
}

Batch random_batch(Rng& rng, std::size_t rows, std::size_t width, std::size_t vocab) {
  Batch b;
  b.width = width;
  b.ids.assign(rows * width, kPadId);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t len = 1 + rng.below(width);
    for (std::size_t j = 0; j < len; ++j) b.ids[r * width + j] = 1 + rng.below(vocab - 1);
    b.lengths.push_back(len);
    const double y = rng.uniform(-1.0, 1.0);
    b.scores.push_back(y);
    b.labels.push_back(map_score_to_class(y));
  }
  return b;
}

GradientProblem model_case(Rng& rng, std::size_t lora_rank) {
  ModelConfig mc;
  mc.vocab_size = 30;
  mc.d_embed = 6;
  mc.d_hidden = 5;
  mc.d_mid = 4;
  mc.lora_rank = lora_rank;
  auto model = std::make_shared<SentimentModel>(mc, rng.next_u64());
  if (lora_rank > 0) {
    // Move V off zero so every adapter parameter has a non-trivial gradient.
    for (const auto& e : model->params().entries()) {
      if (e.name.ends_with("lora_V")) {
        Tensor v = e.value;
        for (auto& x : v.mutable_data()) x = rng.uniform(-0.5, 0.5);
      }
    }
  }
  const Batch batch = random_batch(rng, 4, 7, mc.vocab_size);
  const std::uint64_t dropout_seed = rng.next_u64();
  auto store = std::shared_ptr<ParameterStore>(model, &model->params());
  return {store,
          [model, batch, dropout_seed] {
            Rng drop(dropout_seed);
            Tensor h = model->encode(batch, Mode::train, drop);
            Tensor s = model->regress(h);
            Tensor logits = model->classify(h, Mode::train, drop);
            return mse_loss(s, Tensor::vector(batch.scores)) + ce_loss_per_class(logits, batch.labels).total;
          },
          model};
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(3);
  out << std::scientific << v;
  return out.str();
}

}  // namespace

std::vector<GradientCase> gradient_cases() {
  std::vector<GradientCase> cases;
  auto add_case = [&](std::string name, std::function<GradientProblem(Rng&)> build) {
    cases.push_back({std::move(name), std::move(build)});
  };

  add_case("matmul", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor a = random_param(*s, "a", rng, {3, 4});
    Tensor b = random_param(*s, "b", rng, {4, 2});
    auto project = projector(rng, 6);
    return GradientProblem{s, [=] { return project(matmul(a, b)); }, nullptr};
  });
  add_case("transpose", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor a = random_param(*s, "a", rng, {3, 2});
    auto project = projector(rng, 6);
    return GradientProblem{s, [=] { return project(transpose(a)); }, nullptr};
  });
  add_case("add_bias", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor x = random_param(*s, "x", rng, {3, 4});
    Tensor b = random_param(*s, "b", rng, {4});
    auto project = projector(rng, 12);
    return GradientProblem{s, [=] { return project(add_bias(x, b)); }, nullptr};
  });
  add_case("reshape", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor x = random_param(*s, "x", rng, {2, 3});
    auto project = projector(rng, 6);
    return GradientProblem{s, [=] { return project(reshape(x, {3, 2})); }, nullptr};
  });
  auto binary = [&](const std::string& name, Tensor (*op)(const Tensor&, const Tensor&), bool scalar_rhs) {
    add_case(name, [op, scalar_rhs](Rng& rng) {
      auto s = std::make_shared<ParameterStore>();
      Tensor a = random_param(*s, "a", rng, {5});
      Tensor b = random_param(*s, "b", rng, {scalar_rhs ? std::size_t{1} : std::size_t{5}});
      auto project = projector(rng, 5);
      return GradientProblem{s, [=] { return project(op(a, b)); }, nullptr};
    });
  };
  binary("add", static_cast<Tensor (*)(const Tensor&, const Tensor&)>(&add), false);
  binary("sub", &sub, false);
  binary("mul", &mul, false);
  binary("add_scalar_tensor", static_cast<Tensor (*)(const Tensor&, const Tensor&)>(&add), true);
  binary("mul_scalar_tensor", &mul, true);
  add_case("add_constant", [](Rng& rng) {
    const double c = rng.uniform(-2.0, 2.0);
    auto s = std::make_shared<ParameterStore>();
    Tensor x = random_param(*s, "x", rng, {5});
    auto project = projector(rng, 5);
    return GradientProblem{s, [=] { return project(add(x, c)); }, nullptr};
  });
  add_case("scale", [](Rng& rng) {
    const double c = rng.uniform(-2.0, 2.0);
    auto s = std::make_shared<ParameterStore>();
    Tensor x = random_param(*s, "x", rng, {5});
    auto project = projector(rng, 5);
    return GradientProblem{s, [=] { return project(scale(x, c)); }, nullptr};
  });
  add_case("neg", [](Rng& rng) { return unary_case(rng, &neg, random_values(rng, 5, -2.0, 2.0)); });
  add_case("log", [](Rng& rng) {
    return unary_case(rng, static_cast<Tensor (*)(const Tensor&)>(&log), random_values(rng, 5, 0.5, 3.0));
  });
  add_case("exp", [](Rng& rng) {
    return unary_case(rng, static_cast<Tensor (*)(const Tensor&)>(&exp), random_values(rng, 5, -2.0, 2.0));
  });
  add_case("sigmoid", [](Rng& rng) { return unary_case(rng, &sigmoid, random_values(rng, 5, -4.0, 4.0)); });
  add_case("tanh", [](Rng& rng) {
    return unary_case(rng, static_cast<Tensor (*)(const Tensor&)>(&tanh), random_values(rng, 5, -2.0, 2.0));
  });
  add_case("relu", [](Rng& rng) { return unary_case(rng, &relu, random_nonzero(rng, 5, 2.0)); });
  add_case("softmax", [](Rng& rng) { return unary_case(rng, &softmax, random_values(rng, 5, -3.0, 3.0)); });
  add_case("sum", [](Rng& rng) { return unary_case(rng, &sum, random_values(rng, 5, -2.0, 2.0)); });
  add_case("mean", [](Rng& rng) { return unary_case(rng, &mean, random_values(rng, 5, -2.0, 2.0)); });
  add_case("l2norm", [](Rng& rng) { return unary_case(rng, &l2norm, random_nonzero(rng, 5, 2.0)); });
  add_case("log_softmax_rows", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor x = random_param(*s, "x", rng, {3, 5}, -3.0, 3.0);
    auto project = projector(rng, 15);
    return GradientProblem{s, [=] { return project(log_softmax_rows(x)); }, nullptr};
  });
  add_case("gather", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor x = random_param(*s, "x", rng, {6});
    std::vector<std::size_t> idx{0, 3, 3, 5};
    auto project = projector(rng, idx.size());
    return GradientProblem{s, [=] { return project(gather(x, idx)); }, nullptr};
  });
  add_case("pick_columns", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor x = random_param(*s, "x", rng, {4, 3});
    std::vector<std::size_t> cols(4);
    for (auto& c : cols) c = rng.below(3);
    auto project = projector(rng, 4);
    return GradientProblem{s, [=] { return project(pick_columns(x, cols)); }, nullptr};
  });
  add_case("concat", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor a = random_param(*s, "a", rng, {2});
    Tensor b = random_param(*s, "b", rng, {1});
    Tensor c = random_param(*s, "c", rng, {2, 2});
    auto project = projector(rng, 7);
    return GradientProblem{s, [=] { return project(concat({a, b, c})); }, nullptr};
  });
  add_case("embedding_mean", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor table = random_param(*s, "table", rng, {12, 4});
    const Batch batch = random_batch(rng, 3, 5, 12);
    auto project = projector(rng, 12);
    return GradientProblem{
        s, [=] { return project(embedding_mean(table, batch.ids, batch.lengths, batch.width)); }, nullptr};
  });
  add_case("linear", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    auto layer = std::make_shared<Linear>(Linear::create(*s, "fc", 4, 3, rng));
    for (auto& v : layer->bias().mutable_data()) v = rng.uniform(-1.0, 1.0);
    Tensor x = random_param(*s, "x", rng, {2, 4});
    auto project = projector(rng, 6);
    return GradientProblem{s, [=] { return project(layer->forward(x)); }, layer};
  });
  add_case("dropout_train", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor x = random_param(*s, "x", rng, {3, 4});
    const std::uint64_t seed = rng.next_u64();
    auto project = projector(rng, 12);
    return GradientProblem{s,
                           [=] {
                             Rng drop(seed);
                             return project(Dropout(0.3).forward(x, Mode::train, drop));
                           },
                           nullptr};
  });
  add_case("lora_linear", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Linear base = Linear::create(*s, "fc", 5, 3, rng);
    LoraOptions o;
    o.rank = 2;
    o.alpha = 4.0;
    auto layer = std::make_shared<LoraLinear>(LoraLinear::wrap(*s, base, o, rng));
    Tensor v = layer->v();
    for (auto& x : v.mutable_data()) x = rng.uniform(-0.5, 0.5);
    Tensor x = random_param(*s, "x", rng, {2, 5});
    const std::uint64_t seed = rng.next_u64();
    auto project = projector(rng, 6);
    return GradientProblem{s,
                           [=] {
                             Rng drop(seed);
                             return project(layer->forward(x, Mode::train, drop));
                           },
                           layer};
  });
  add_case("mse_loss", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor pred = random_param(*s, "pred", rng, {6});
    Tensor target = Tensor::vector(random_values(rng, 6, -1.0, 1.0));
    return GradientProblem{s, [=] { return mse_loss(pred, target); }, nullptr};
  });
  add_case("ce_loss", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor logits = random_param(*s, "logits", rng, {6, kNumClasses}, -2.0, 2.0);
    const auto labels = random_labels(rng, 6, kNumClasses);
    return GradientProblem{s, [=] { return ce_loss_per_class(logits, labels).total; }, nullptr};
  });
  add_case("ce_per_class", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor logits = random_param(*s, "logits", rng, {8, kNumClasses}, -2.0, 2.0);
    const auto labels = random_labels(rng, 8, kNumClasses);
    const auto mix = random_values(rng, kNumClasses, -1.0, 1.0);
    return GradientProblem{s,
                           [=] {
                             const auto ce = ce_loss_per_class(logits, labels);
                             std::vector<Tensor> terms;
                             for (std::size_t k = 0; k < kNumClasses; ++k) {
                               if (ce.per_class[k]) terms.push_back(scale(*ce.per_class[k], mix[k]));
                             }
                             return sum(concat(terms));
                           },
                           nullptr};
  });
  add_case("imbalanced_loss", [](Rng& rng) {
    auto s = std::make_shared<ParameterStore>();
    Tensor logits = random_param(*s, "logits", rng, {10, kNumClasses}, -2.0, 2.0);
    const auto labels = random_labels(rng, 10, kNumClasses);
    const double alpha = rng.uniform(0.0, 2.0), beta = rng.uniform(0.0, 3.0);
    return GradientProblem{s,
                           [=] {
                             const auto ce = ce_loss_per_class(logits, labels);
                             const auto stats = class_stats(labels);
                             return imbalanced_loss(stats, class_weights(stats, beta), ce.per_class, alpha);
                           },
                           nullptr};
  });
  add_case("dao_total_loss", [](Rng& rng) {
    DaoOptions o;
    o.zero_init_output = false;
    auto dao = std::make_shared<DaoController>(o, rng.next_u64());
    auto s = std::make_shared<ParameterStore>();
    for (const auto& e : dao->params().entries()) {
      if (e.name == "dao.alpha" || e.name == "dao.beta") continue;
      Tensor t = e.value;
      if (e.name == "dao.fc1.b" || e.name == "dao.fc2.b") {
        for (auto& v : t.mutable_data()) v = rng.uniform(-0.5, 0.5);
      }
      s->add(e.name, t);
    }
    Tensor pred = random_param(*s, "pred", rng, {10});
    Tensor logits = random_param(*s, "logits", rng, {10, kNumClasses}, -2.0, 2.0);
    Tensor target = Tensor::vector(random_values(rng, 10, -1.0, 1.0));
    const auto labels = random_labels(rng, 10, kNumClasses);
    const double lambda_r = rng.uniform(0.05, 0.95);
    const double alpha = rng.uniform(0.0, 1.0), beta = rng.uniform(0.0, 2.0);
    const auto stats = class_stats(labels);
    auto losses = [=] {
      const auto ce = ce_loss_per_class(logits, labels);
      return std::pair{mse_loss(pred, target),
                       imbalanced_loss(stats, class_weights(stats, beta), ce.per_class, alpha)};
    };
    // The network input is a detached value, so it is held fixed here.
    const auto initial = losses();
    const Tensor input =
        Tensor::vector({lambda_r * initial.first.item(), (1.0 - lambda_r) * initial.second.item()});
    return GradientProblem{s,
                           [=] {
                             const auto [loss_r, loss_imb] = losses();
                             TaskWeights w = dao->forward(input);
                             return total_loss(lambda_r, 1.0 - lambda_r, w.regression, w.classification,
                                               loss_r, loss_imb);
                           },
                           dao};
  });
  add_case("model_end_to_end", [](Rng& rng) { return model_case(rng, 0); });
  add_case("model_lora_end_to_end", [](Rng& rng) { return model_case(rng, 2); });
  return cases;
}

double gradient_relative_error(GradientProblem& problem, double h) {
  const GradientMap analytic = backward(problem.loss(), *problem.params);
  const GradientMap numeric = finite_diff([&] { return problem.loss().item(); }, *problem.params, h);
  double diff_sq = 0.0, ref_sq = 0.0;
  for (const auto& [name, g] : numeric.entries()) {
    const auto a = analytic.at(name).data();
    const auto n = g.data();
    for (std::size_t i = 0; i < n.size(); ++i) {
      diff_sq += (a[i] - n[i]) * (a[i] - n[i]);
      ref_sq += n[i] * n[i];
    }
  }
  return std::sqrt(diff_sq) / (std::sqrt(ref_sq) + 1e-8);
}

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
  std::vector<CheckResult> results;
  Rng rng(options.seed);

  // Gradients of every op, layer and loss.
  for (const auto& c : gradient_cases()) {
    double worst = 0.0;
    for (std::size_t t = 0; t < options.trials; ++t) {
      GradientProblem p = c.build(rng);
      worst = std::max(worst, gradient_relative_error(p));
    }
    results.push_back({"gradient/" + c.name, worst < 1e-4, "max rel err " + fmt(worst)});
  }

  // Analytic alpha / beta gradients against differences of the total loss.
  {
    double worst_alpha = 0.0, worst_beta = 0.0;
    for (std::size_t t = 0; t < options.trials; ++t) {
      const auto labels = random_labels(rng, 10, 1 + rng.below(kNumClasses));
      const auto stats = class_stats(labels);
      const auto per_class = random_values(rng, kNumClasses, 0.05, 3.0);
      const double lr = rng.uniform(0.01, 0.99), wr = rng.uniform(0.01, 0.99);
      const double alpha = rng.uniform(0.0, 2.0), beta = rng.uniform(0.0, 3.0);
      const double loss_r = rng.uniform(0.0, 1.0);
      auto total = [&](double a, double b) {
        return total_loss_value(lr, 1.0 - lr, wr, 1.0 - wr, loss_r,
                                imbalanced_loss_value(stats, class_weights(stats, b), per_class, a));
      };
      const double h = 1e-6;
      const double fd_a = (total(alpha + h, beta) - total(alpha - h, beta)) / (2 * h);
      const double fd_b = (total(alpha, beta + h) - total(alpha, beta - h)) / (2 * h);
      const double an_a = alpha_grad(1.0 - lr, 1.0 - wr, class_weights(stats, beta), stats);
      const double an_b = beta_grad(1.0 - lr, 1.0 - wr, stats, per_class, alpha, beta);
      worst_alpha = std::max(worst_alpha, std::abs(an_a - fd_a) / (std::abs(fd_a) + 1e-8));
      worst_beta = std::max(worst_beta, std::abs(an_b - fd_b) / (std::abs(fd_b) + 1e-8));
    }
    results.push_back({"analytic/alpha_grad", worst_alpha < 1e-5, "max rel err " + fmt(worst_alpha)});
    results.push_back({"analytic/beta_grad", worst_beta < 1e-5, "max rel err " + fmt(worst_beta)});
  }

  // Simplex outputs of the balancing coefficients and the task-weight network.
  {
    DaoOptions o;
    o.zero_init_output = false;
    DaoController dao(o, rng.next_u64());
    double worst = 0.0;
    bool interior = true;
    for (int t = 0; t < 10000; ++t) {
      const auto lam = lambda_coeffs(rng.uniform(1e-6, 10.0), rng.uniform(1e-6, 10.0));
      const auto w = dao.forward(Tensor::vector({rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)}));
      const double wr = w.regression.item(), wc = w.classification.item();
      worst = std::max({worst, std::abs(lam.regression + lam.classification - 1.0), std::abs(wr + wc - 1.0)});
      interior = interior && lam.regression > 0 && lam.regression < 1 && lam.classification > 0 &&
                 lam.classification < 1 && wr > 0 && wr < 1 && wc > 0 && wc < 1;
    }
    results.push_back({"invariant/simplex", worst <= 1e-12 && interior, "max |sum - 1| " + fmt(worst)});
  }

  // Score-to-class mapping against a threshold-table formulation.
  {
    auto reference = [](double y) {
      if (y < -0.5) return 0;
      if (y < -0.049) return 1;
      if (y <= 0.049) return 2;
      if (y <= 0.5) return 3;
      return 4;
    };
    std::size_t mismatches = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double y = -1.0 + 2.0 * i / (n - 1);
      if (map_score_to_class(y) != reference(y)) ++mismatches;
    }
    for (double y : {0.5, 0.049, -0.049, -0.5, 1.0, -1.0}) {
      if (map_score_to_class(y) != reference(y)) ++mismatches;
    }
    results.push_back({"mapping/score_to_class", mismatches == 0, std::to_string(mismatches) + " mismatches"});
  }

  // Imbalance-loss reductions.
  {
    double worst_identity = 0.0, worst_loop = 0.0;
    for (int t = 0; t < 200; ++t) {
      const std::size_t n = 1 + rng.below(16);
      const auto labels = random_labels(rng, n, kNumClasses);
      Tensor logits = Tensor::from({n, kNumClasses}, random_values(rng, n * kNumClasses, -3.0, 3.0));
      const auto ce = ce_loss_per_class(logits, labels);
      const auto stats = class_stats(labels);
      const double plain = imbalanced_loss(stats, class_weights(stats, 0.0), ce.per_class, 0.0).item();
      worst_identity = std::max(worst_identity, std::abs(plain - ce.total.item()));

      const double alpha = rng.uniform(0.0, 2.0), beta = rng.uniform(0.0, 3.0);
      const double vectorized = imbalanced_loss(stats, class_weights(stats, beta), ce.per_class, alpha).item();
      double looped = 0.0;
      for (std::size_t k = 0; k < kNumClasses; ++k) {
        double ce_sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (static_cast<std::size_t>(labels[i]) != k) continue;
          double top = -1e300;
          for (std::size_t j = 0; j < kNumClasses; ++j) top = std::max(top, logits[i * kNumClasses + j]);
          double z = 0.0;
          for (std::size_t j = 0; j < kNumClasses; ++j) z += std::exp(logits[i * kNumClasses + j] - top);
          ce_sum += -(logits[i * kNumClasses + k] - top - std::log(z));
          ++count;
        }
        if (count == 0) continue;
        const double p = static_cast<double>(count) / static_cast<double>(n);
        looped += std::pow(p, -beta) * (p * ce_sum / static_cast<double>(count) - alpha * std::log(p));
      }
      worst_loop = std::max(worst_loop, std::abs(vectorized - looped));
    }
    results.push_back({"invariant/imbalance_reduces_to_ce", worst_identity <= 1e-12, "max diff " + fmt(worst_identity)});
    results.push_back({"invariant/imbalance_vs_loop", worst_loop <= 1e-10, "max diff " + fmt(worst_loop)});
  }

  // Weighted recall equals accuracy.
  {
    std::size_t failures = 0;
    for (int t = 0; t < 500; ++t) {
      const std::size_t k = 2 + rng.below(5);
      std::vector<std::uint64_t> counts(k * k);
      for (auto& c : counts) c = rng.below(20);
      counts[0] += 1;
      const auto m = classification_metrics(ConfusionMatrix(k, counts));
      if (m.weighted_recall != m.accuracy) ++failures;
    }
    results.push_back({"metrics/weighted_recall_equals_accuracy", failures == 0, std::to_string(failures) + " failures"});
  }

  // LoRA contracts.
  {
    ParameterStore store;
    Linear base = Linear::create(store, "fc", 6, 4, rng);
    for (auto& v : base.bias().mutable_data()) v = rng.uniform(-1.0, 1.0);
    LoraOptions o;
    o.rank = 3;
    o.alpha = 3.0;
    LoraLinear lora = LoraLinear::wrap(store, base, o, rng);
    Tensor x = Tensor::from({5, 6}, random_values(rng, 30, -2.0, 2.0));
    Rng drop(1);
    const Tensor with_adapter = lora.forward(x, Mode::train, drop);
    const Tensor without = base.forward(x);
    const auto a = with_adapter.data();
    const auto b = without.data();
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    results.push_back({"lora/zero_delta_at_init", worst < 1e-12, "max diff " + fmt(worst)});
    const std::size_t expected = o.rank * (4 + 6);
    const std::size_t count = store.scalar_count(true);
    results.push_back({"lora/trainable_count", count == expected,
                       std::to_string(count) + " trainable, expected " + std::to_string(expected)});
  }
  return results;
}

}  // namespace dao
