#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dao/tensor.hpp"

namespace dao {

/// Named parameter tensors with trainable flags, iterated in insertion order.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    bool trainable = true;
  };

  /// Registers a leaf tensor. Throws ContractError on a duplicate name.
  Tensor add(std::string name, Tensor value, bool trainable = true);

  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);
  bool trainable(std::string_view name) const;

  /// Sets the flag on every name matching a shell-style glob ("backbone.*").
  /// Returns how many entries matched.
  std::size_t set_trainable(std::string_view pattern, bool flag);

  /// Number of scalar parameters, optionally restricted to trainable ones.
  std::size_t scalar_count(bool trainable_only) const;

  void zero_grad();

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  const Entry* find(std::string_view name) const;
  std::vector<Entry> entries_;
};

/// Parameter name -> gradient, in the store's order.
class GradientMap {
 public:
  void set(std::string name, Tensor grad);
  const Tensor* find(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  /// L2 norm over all entries whose name passes the filter (all when empty).
  double l2norm(const std::function<bool(std::string_view)>& filter = {}) const;
  bool all_finite() const;

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

/// Zeroes the store's gradients, back-propagates `loss`, and collects one
/// entry per trainable parameter (zero-filled when not on the loss path).
/// Frozen parameters are excluded. The store's gradients are left cleared.
GradientMap backward(const Tensor& loss, ParameterStore& params);

/// Takes the gradients already accumulated in the store (after Tensor::backward
/// on a loss shared by several stores), leaving them cleared.
GradientMap collect_gradients(ParameterStore& params);

/// Central-difference gradient estimate of a scalar function of the store's
/// trainable parameters: (f(p + h) - f(p - h)) / 2h per coordinate.
GradientMap finite_diff(const std::function<double()>& f, ParameterStore& params, double h = 1e-5);

}  // namespace dao
