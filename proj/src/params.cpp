#include "dao/params.hpp"

#include <fnmatch.h>

#include <cmath>

#include "dao/error.hpp"

namespace dao {

Tensor ParameterStore::add(std::string name, Tensor value, bool trainable) {
  if (find(name) != nullptr) throw ContractError("duplicate parameter name '" + name + "'");
  value.set_requires_grad(trainable);
  entries_.push_back({std::move(name), value, trainable});
  return value;
}

const ParameterStore::Entry* ParameterStore::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

bool ParameterStore::contains(std::string_view name) const { return find(name) != nullptr; }

const Tensor& ParameterStore::get(std::string_view name) const {
  const Entry* e = find(name);
  if (e == nullptr) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return e->value;
}

Tensor& ParameterStore::get(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ParameterStore&>(*this).get(name));
}

bool ParameterStore::trainable(std::string_view name) const {
  const Entry* e = find(name);
  if (e == nullptr) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return e->trainable;
}

std::size_t ParameterStore::set_trainable(std::string_view pattern, bool flag) {
  const std::string pat(pattern);
  std::size_t matched = 0;
  for (auto& e : entries_) {
    if (::fnmatch(pat.c_str(), e.name.c_str(), 0) == 0) {
      e.trainable = flag;
      e.value.set_requires_grad(flag);
      ++matched;
    }
  }
  return matched;
}

std::size_t ParameterStore::scalar_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (!trainable_only || e.trainable) n += e.value.numel();
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.value.zero_grad();
}

void GradientMap::set(std::string name, Tensor grad) {
  for (auto& [n, g] : entries_) {
    if (n == name) {
      g = std::move(grad);
      return;
    }
  }
  entries_.emplace_back(std::move(name), std::move(grad));
}

const Tensor* GradientMap::find(std::string_view name) const {
  for (const auto& [n, g] : entries_) {
    if (n == name) return &g;
  }
  return nullptr;
}

const Tensor& GradientMap::at(std::string_view name) const {
  const Tensor* g = find(name);
  if (g == nullptr) throw ContractError("no gradient for '" + std::string(name) + "'");
  return *g;
}

double GradientMap::l2norm(const std::function<bool(std::string_view)>& filter) const {
  double sq = 0.0;
  for (const auto& [name, g] : entries_) {
    if (filter && !filter(name)) continue;
    for (double v : g.data()) sq += v * v;
  }
  return std::sqrt(sq);
}

bool GradientMap::all_finite() const {
  // x - x is NaN exactly when x is NaN or infinite.
  for (const auto& [name, g] : entries_) {
    double probe = 0.0;
    for (double v : g.data()) probe += v - v;
    if (probe != 0.0) return false;
  }
  return true;
}

GradientMap backward(const Tensor& loss, ParameterStore& params) {
  if (!loss.is_scalar()) {
    throw ContractError("backward requires a scalar loss, got shape " + shape_to_string(loss.shape()));
  }
  params.zero_grad();
  loss.backward();
  return collect_gradients(params);
}

GradientMap collect_gradients(ParameterStore& params) {
  GradientMap out;
  for (const auto& e : params.entries()) {
    Tensor value = e.value;
    if (!e.trainable) continue;
    out.set(e.name, Tensor::from(value.shape(), value.take_grad()));
  }
  return out;
}

GradientMap finite_diff(const std::function<double()>& f, ParameterStore& params, double h) {
  if (!(h > 0.0)) throw ContractError("finite_diff: step must be positive");
  GradientMap out;
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    Tensor value = e.value;
    auto data = value.mutable_data();
    std::vector<double> grad(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + h;
      const double up = f();
      data[i] = orig - h;
      const double down = f();
      data[i] = orig;
      grad[i] = (up - down) / (2.0 * h);
    }
    out.set(e.name, Tensor::from(value.shape(), std::move(grad)));
  }
  return out;
}

}  // namespace dao
