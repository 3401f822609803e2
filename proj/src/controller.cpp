#include "dao/controller.hpp"

#include <algorithm>
#include <cmath>

#include "dao/binary_io.hpp"
#include "dao/error.hpp"

namespace dao {

namespace {
constexpr std::string_view kSnapshotMagic = "DAOS";

AdamOptions dao_adam_options() {
  AdamOptions o;
  o.variant = AdamVariant::adam;
  o.weight_decay = 0.0;
  return o;
}
}  // namespace

DaoController::DaoController(const DaoOptions& options, std::uint64_t seed)
    : options_(options), optimizer_(dao_adam_options()) {
  if (options.hidden == 0) throw ConfigError("DAO hidden width must be positive");
  if (!(options.alpha_min <= options.alpha_max) || !(options.beta_min <= options.beta_max)) {
    throw ConfigError("DAO clamp bounds are inverted");
  }
  Rng rng(seed);
  fc1_ = Linear::create(params_, "dao.fc1", 2, options.hidden, rng);
  fc2_ = Linear::create(params_, "dao.fc2", options.hidden, 2, rng);
  if (options.zero_init_output) {
    auto w = fc2_.weight().mutable_data();
    std::fill(w.begin(), w.end(), 0.0);
  }
  alpha_ = params_.add("dao.alpha", Tensor::scalar(std::clamp(options.alpha_init, options.alpha_min, options.alpha_max)));
  beta_ = params_.add("dao.beta", Tensor::scalar(std::clamp(options.beta_init, options.beta_min, options.beta_max)));
}

double DaoController::alpha() const { return alpha_.item(); }
double DaoController::beta() const { return beta_.item(); }

TaskWeights DaoController::forward(const Tensor& weighted_losses) {
  ++invocations_;
  if (weighted_losses.numel() != 2) {
    throw DimensionError("DAO input must hold two weighted losses, got " + shape_to_string(weighted_losses.shape()));
  }
  for (double v : weighted_losses.data()) {
    if (!std::isfinite(v)) throw NumericError("DAO input loss is not finite");
  }
  Tensor x = reshape(weighted_losses, {1, 2});
  Tensor hidden = relu(fc1_.forward(x));
  Tensor logits = reshape(fc2_.forward(hidden), {2});
  Tensor w = softmax(logits);
  return {w, element(w, 0), element(w, 1)};
}

void DaoController::step(const GradientMap& fc_grads, double alpha_grad, double beta_grad) {
  ++invocations_;
  GradientMap grads;
  for (const auto& entry : params_.entries()) {
    if (!entry.trainable || entry.value.id() == alpha_.id() || entry.value.id() == beta_.id()) continue;
    const Tensor* g = fc_grads.find(entry.name);
    grads.set(entry.name, g != nullptr ? *g : Tensor::zeros(entry.value.shape()));
  }
  grads.set("dao.alpha", Tensor::scalar(alpha_grad));
  grads.set("dao.beta", Tensor::scalar(beta_grad));
  optimizer_.step(params_, grads, options_.lr);
  alpha_.mutable_data()[0] = std::clamp(alpha_.item(), options_.alpha_min, options_.alpha_max);
  beta_.mutable_data()[0] = std::clamp(beta_.item(), options_.beta_min, options_.beta_max);
}

std::string DaoController::snapshot() const {
  ByteWriter w;
  w.raw(kSnapshotMagic);
  w.u32(kSnapshotVersion);
  w.u64(options_.hidden);
  w.f64(options_.lr);
  w.f64(options_.alpha_init);
  w.f64(options_.beta_init);
  w.f64(options_.alpha_min);
  w.f64(options_.alpha_max);
  w.f64(options_.beta_min);
  w.f64(options_.beta_max);
  w.u32(options_.zero_init_output ? 1 : 0);
  w.u64(invocations_);
  w.u32(static_cast<std::uint32_t>(params_.size()));
  for (const auto& e : params_.entries()) w.tensor(e.name, e.value.shape(), e.value.data());
  w.u64(optimizer_.timestep());
  w.u32(static_cast<std::uint32_t>(optimizer_.moments().size()));
  for (const auto& m : optimizer_.moments()) {
    w.str(m.name);
    w.doubles(m.m);
    w.doubles(m.v);
  }
  return w.take();
}

DaoController DaoController::restore(std::string_view record) {
  ByteReader r(record);
  if (r.raw(kSnapshotMagic.size()) != kSnapshotMagic) throw FormatError("not a DAO snapshot");
  const auto version = r.u32();
  if (version != kSnapshotVersion) {
    throw FormatError("DAO snapshot version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kSnapshotVersion) + ")");
  }
  DaoOptions options;
  options.hidden = r.u64();
  options.lr = r.f64();
  options.alpha_init = r.f64();
  options.beta_init = r.f64();
  options.alpha_min = r.f64();
  options.alpha_max = r.f64();
  options.beta_min = r.f64();
  options.beta_max = r.f64();
  options.zero_init_output = r.u32() != 0;
  const auto invocations = r.u64();

  DaoController dao(options, 0);
  dao.invocations_ = invocations;
  const auto count = r.u32();
  if (count != dao.params_.size()) throw FormatError("DAO snapshot has the wrong parameter count");
  for (std::uint32_t i = 0; i < count; ++i) {
    auto t = r.tensor();
    if (!dao.params_.contains(t.name)) throw FormatError("unknown DAO parameter '" + t.name + "'");
    Tensor& p = dao.params_.get(t.name);
    if (p.shape() != t.shape) throw FormatError("DAO parameter '" + t.name + "' has the wrong shape");
    std::copy(t.values.begin(), t.values.end(), p.mutable_data().begin());
  }
  const auto timestep = r.u64();
  const auto n_moments = r.u32();
  std::vector<AdamOptimizer::Moments> moments;
  for (std::uint32_t i = 0; i < n_moments; ++i) {
    AdamOptimizer::Moments m;
    m.name = r.str();
    m.m = r.doubles();
    m.v = r.doubles();
    if (!dao.params_.contains(m.name) || dao.params_.get(m.name).numel() != m.m.size()) {
      throw FormatError("DAO optimizer state does not match parameter '" + m.name + "'");
    }
    moments.push_back(std::move(m));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after DAO snapshot");
  dao.optimizer_.restore(timestep, std::move(moments));
  return dao;
}

}  // namespace dao
