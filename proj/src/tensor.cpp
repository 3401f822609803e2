#include "dao/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "dao/error.hpp"

namespace dao {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const { return !backward_fn; }

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

struct TensorAccess {
  static const NodePtr& node(const Tensor& t) {
    if (!t.node_) throw ContractError("use of an undefined tensor");
    return t.node_;
  }
  static Tensor wrap(NodePtr node) { return Tensor(std::move(node)); }
};

namespace {

const NodePtr& node_of(const Tensor& t) { return TensorAccess::node(t); }

NodePtr make_leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape));
  }
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("shape " + shape_to_string(shape) + " does not hold " +
                         std::to_string(data.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return node;
}

// Builds an op result. Graph edges are kept only when some input needs a gradient.
Tensor make_result(Shape shape, std::vector<double> data, std::vector<NodePtr> parents,
                   std::function<void(Node&)> backward_fn) {
  auto node = make_leaf(std::move(shape), std::move(data), false);
  const bool needs = std::any_of(parents.begin(), parents.end(),
                                 [](const NodePtr& p) { return p->requires_grad; });
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return TensorAccess::wrap(std::move(node));
}

void accumulate(Node& target, std::size_t i, double value) { target.ensure_grad()[i] += value; }

void require_same_shape(const Node& a, const Node& b, const char* op) {
  if (a.shape != b.shape) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape) +
                         " vs " + shape_to_string(b.shape));
  }
}

void require_matrix(const Node& a, const char* op) {
  if (a.shape.size() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_to_string(a.shape));
  }
}

// Unary elementwise op whose derivative is expressed through input x and output y.
template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  const auto& an = node_of(a);
  std::vector<double> out(an->data.size());
  std::transform(an->data.begin(), an->data.end(), out.begin(), fwd);
  return make_result(an->shape, std::move(out), {an}, [deriv](Node& self) {
    Node& x = *self.parents[0];
    auto& g = x.ensure_grad();
    for (std::size_t i = 0; i < self.data.size(); ++i) {
      g[i] += self.grad[i] * deriv(x.data[i], self.data[i]);
    }
  });
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// ---- Tensor ---------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(make_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  Shape shape{values.size()};
  return from(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return node_of(*this)->shape; }
std::size_t Tensor::numel() const { return node_of(*this)->data.size(); }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw DimensionError("axis out of range for shape " + shape_to_string(s));
  return s[axis];
}

std::span<const double> Tensor::data() const { return node_of(*this)->data; }
std::span<double> Tensor::mutable_data() { return node_of(*this)->data; }

double Tensor::item() const {
  if (numel() != 1) throw ContractError("item() on non-scalar tensor " + shape_to_string(shape()));
  return data()[0];
}

bool Tensor::requires_grad() const { return node_of(*this)->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  auto& n = *node_of(*this);
  if (!n.is_leaf()) throw ContractError("requires_grad can only be set on leaf tensors");
  n.requires_grad = flag;
}

std::span<const double> Tensor::grad() const { return node_of(*this)->grad; }
bool Tensor::has_grad() const { return !node_of(*this)->grad.empty(); }
void Tensor::zero_grad() {
  auto& g = node_of(*this)->grad;
  std::fill(g.begin(), g.end(), 0.0);
}

std::vector<double> Tensor::take_grad() {
  auto& n = *node_of(*this);
  std::vector<double> out = std::move(n.grad);
  n.grad.clear();
  if (out.empty()) out.assign(n.data.size(), 0.0);
  return out;
}

Tensor Tensor::detach() const {
  const auto& n = node_of(*this);
  return Tensor(make_leaf(n->shape, n->data, false));
}

Tensor Tensor::clone() const { return detach(); }

void Tensor::backward() const {
  const auto& root = node_of(*this);
  if (root->data.size() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " + shape_to_string(root->shape));
  }
  if (!root->requires_grad) return;

  // Iterative post-order DFS; parent order fixes the traversal, so repeated
  // passes over identical graphs visit nodes identically.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (!n->is_leaf()) n->grad.clear();
  }
  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->is_leaf() || n->grad.empty()) continue;
    n->backward_fn(*n);
    n->grad.clear();
    n->grad.shrink_to_fit();
  }
}

// ---- linear algebra -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& an = node_of(a);
  const auto& bn = node_of(b);
  require_matrix(*an, "matmul");
  require_matrix(*bn, "matmul");
  const std::size_t m = an->shape[0], k = an->shape[1], n = bn->shape[1];
  if (bn->shape[0] != k) {
    throw DimensionError("matmul: inner dimensions differ for " + shape_to_string(an->shape) +
                         " x " + shape_to_string(bn->shape));
  }
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = an->data[i * k + p];
      const double* brow = &bn->data[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return make_result({m, n}, std::move(out), {an, bn}, [m, k, n](Node& self) {
    Node& a = *self.parents[0];
    Node& b = *self.parents[1];
    const auto& g = self.grad;
    if (a.requires_grad) {
      auto& ga = a.ensure_grad();  // G * B^T
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * b.data[p * n + j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (b.requires_grad) {
      auto& gb = b.ensure_grad();  // A^T * G
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = a.data[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  const auto& an = node_of(a);
  require_matrix(*an, "transpose");
  const std::size_t r = an->shape[0], c = an->shape[1];
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = an->data[i * c + j];
  return make_result({c, r}, std::move(out), {an}, [r, c](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const auto& xn = node_of(x);
  const auto& bn = node_of(bias);
  require_matrix(*xn, "add_bias");
  const std::size_t m = xn->shape[0], n = xn->shape[1];
  if (bn->data.size() != n) {
    throw DimensionError("add_bias: bias " + shape_to_string(bn->shape) + " does not match rows of " +
                         shape_to_string(xn->shape));
  }
  std::vector<double> out(xn->data);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bn->data[j];
  return make_result(xn->shape, std::move(out), {xn, bn}, [m, n](Node& self) {
    Node& x = *self.parents[0];
    Node& b = *self.parents[1];
    if (x.requires_grad) {
      auto& gx = x.ensure_grad();
      for (std::size_t i = 0; i < m * n; ++i) gx[i] += self.grad[i];
    }
    if (b.requires_grad) {
      auto& gb = b.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  const auto& an = node_of(a);
  if (shape_numel(shape) != an->data.size()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(an->shape) + " as " + shape_to_string(shape));
  }
  return make_result(std::move(shape), an->data, {an}, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  const auto& an = node_of(a);
  const auto& bn = node_of(b);
  if (bn->data.size() == 1 && an->data.size() != 1) {
    std::vector<double> out(an->data);
    for (auto& v : out) v += bn->data[0];
    return make_result(an->shape, std::move(out), {an, bn}, [](Node& self) {
      Node& x = *self.parents[0];
      Node& s = *self.parents[1];
      double total = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (x.requires_grad) accumulate(x, i, self.grad[i]);
        total += self.grad[i];
      }
      if (s.requires_grad) accumulate(s, 0, total);
    });
  }
  require_same_shape(*an, *bn, "add");
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an->data[i] + bn->data[i];
  return make_result(an->shape, std::move(out), {an, bn}, [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, neg(b)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto& an = node_of(a);
  const auto& bn = node_of(b);
  if (bn->data.size() == 1 && an->data.size() != 1) {
    std::vector<double> out(an->data);
    for (auto& v : out) v *= bn->data[0];
    return make_result(an->shape, std::move(out), {an, bn}, [](Node& self) {
      Node& x = *self.parents[0];
      Node& s = *self.parents[1];
      double total = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (x.requires_grad) accumulate(x, i, self.grad[i] * s.data[0]);
        total += self.grad[i] * x.data[i];
      }
      if (s.requires_grad) accumulate(s, 0, total);
    });
  }
  require_same_shape(*an, *bn, "mul");
  std::vector<double> out(an->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an->data[i] * bn->data[i];
  return make_result(an->shape, std::move(out), {an, bn}, [](Node& self) {
    Node& x = *self.parents[0];
    Node& y = *self.parents[1];
    if (x.requires_grad) {
      auto& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y.data[i];
    }
    if (y.requires_grad) {
      auto& g = y.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x.data[i];
    }
  });
}

Tensor add(const Tensor& a, double b) {
  return unary(a, [b](double x) { return x + b; }, [](double, double) { return 1.0; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor log(const Tensor& a) {
  for (double v : a.data()) {
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
  }
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator*(const Tensor& a, double b) { return scale(a, b); }
Tensor operator*(double a, const Tensor& b) { return scale(b, a); }
Tensor operator-(const Tensor& a) { return neg(a); }

// ---- activations ----------------------------------------------------------

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor softmax(const Tensor& x) {
  const auto& xn = node_of(x);
  for (double v : xn->data) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite input");
  }
  const double top = *std::max_element(xn->data.begin(), xn->data.end());
  std::vector<double> out(xn->data.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(xn->data[i] - top);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return make_result(xn->shape, std::move(out), {xn}, [](Node& self) {
    double dot = 0.0;
    for (std::size_t i = 0; i < self.data.size(); ++i) dot += self.grad[i] * self.data[i];
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.data[i] * (self.grad[i] - dot);
  });
}

Tensor log_softmax_rows(const Tensor& x) {
  const auto& xn = node_of(x);
  require_matrix(*xn, "log_softmax_rows");
  const std::size_t m = xn->shape[0], n = xn->shape[1];
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = &xn->data[i * n];
    const double top = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += std::exp(row[j] - top);
    const double lse = top + std::log(total);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] - lse;
  }
  return make_result(xn->shape, std::move(out), {xn}, [m, n](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      double gsum = 0.0;
      for (std::size_t j = 0; j < n; ++j) gsum += self.grad[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        g[i * n + j] += self.grad[i * n + j] - std::exp(self.data[i * n + j]) * gsum;
      }
    }
  });
}

// ---- reductions -----------------------------------------------------------

Tensor sum(const Tensor& x) {
  const auto& xn = node_of(x);
  double total = 0.0;
  for (double v : xn->data) total += v;
  return make_result({1}, {total}, {xn}, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor l2norm(const Tensor& x) {
  const auto& xn = node_of(x);
  double sq = 0.0;
  for (double v : xn->data) sq += v * v;
  return make_result({1}, {std::sqrt(sq)}, {xn}, [](Node& self) {
    const double norm = self.data[0];
    if (norm == 0.0) return;
    Node& x = *self.parents[0];
    auto& g = x.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * x.data[i] / norm;
  });
}

// ---- indexing -------------------------------------------------------------

Tensor element(const Tensor& x, std::size_t index) {
  const std::size_t idx[] = {index};
  return reshape(gather(x, idx), {1});
}

Tensor gather(const Tensor& x, std::span<const std::size_t> indices) {
  const auto& xn = node_of(x);
  if (indices.empty()) throw ContractError("gather: empty index list");
  std::vector<double> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= xn->data.size()) {
      throw DimensionError("gather: index " + std::to_string(indices[i]) + " out of range for " +
                           shape_to_string(xn->shape));
    }
    out[i] = xn->data[indices[i]];
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make_result({indices.size()}, std::move(out), {xn}, [idx = std::move(idx)](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i) g[idx[i]] += self.grad[i];
  });
}

Tensor pick_columns(const Tensor& x, std::span<const std::size_t> columns) {
  const auto& xn = node_of(x);
  require_matrix(*xn, "pick_columns");
  const std::size_t m = xn->shape[0], n = xn->shape[1];
  if (columns.size() != m) {
    throw DimensionError("pick_columns: " + std::to_string(columns.size()) + " columns for " +
                         shape_to_string(xn->shape));
  }
  std::vector<std::size_t> flat(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (columns[i] >= n) throw DimensionError("pick_columns: column " + std::to_string(columns[i]) + " out of range");
    flat[i] = i * n + columns[i];
  }
  return gather(x, flat);
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  std::vector<NodePtr> nodes;
  std::vector<double> out;
  for (const auto& p : parts) {
    nodes.push_back(node_of(p));
    out.insert(out.end(), nodes.back()->data.begin(), nodes.back()->data.end());
  }
  const std::size_t total = out.size();
  return make_result({total}, std::move(out), std::move(nodes), [](Node& self) {
    std::size_t offset = 0;
    for (auto& p : self.parents) {
      const std::size_t len = p->data.size();
      if (p->requires_grad) {
        auto& g = p->ensure_grad();
        for (std::size_t i = 0; i < len; ++i) g[i] += self.grad[offset + i];
      }
      offset += len;
    }
  });
}

Tensor embedding_mean(const Tensor& table, std::span<const std::size_t> ids,
                      std::span<const std::size_t> lengths, std::size_t width) {
  const auto& tn = node_of(table);
  require_matrix(*tn, "embedding_mean");
  const std::size_t vocab = tn->shape[0], d = tn->shape[1];
  const std::size_t batch = lengths.size();
  if (batch == 0 || ids.size() != batch * width) {
    throw DimensionError("embedding_mean: id matrix of " + std::to_string(ids.size()) +
                         " entries does not match " + std::to_string(batch) + " rows of width " +
                         std::to_string(width));
  }
  std::vector<double> out(batch * d, 0.0);
  for (std::size_t r = 0; r < batch; ++r) {
    const std::size_t len = lengths[r];
    if (len == 0 || len > width) throw ContractError("embedding_mean: invalid sequence length");
    for (std::size_t j = 0; j < len; ++j) {
      const std::size_t id = ids[r * width + j];
      if (id >= vocab) {
        throw ContractError("embedding_mean: token id " + std::to_string(id) + " >= vocabulary size " +
                            std::to_string(vocab));
      }
      for (std::size_t c = 0; c < d; ++c) out[r * d + c] += tn->data[id * d + c];
    }
    const double inv = 1.0 / static_cast<double>(len);
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] *= inv;
  }
  std::vector<std::size_t> id_copy(ids.begin(), ids.end());
  std::vector<std::size_t> len_copy(lengths.begin(), lengths.end());
  return make_result({batch, d}, std::move(out), {tn},
                     [id_copy = std::move(id_copy), len_copy = std::move(len_copy), width, d](Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (std::size_t r = 0; r < len_copy.size(); ++r) {
                         const double inv = 1.0 / static_cast<double>(len_copy[r]);
                         for (std::size_t j = 0; j < len_copy[r]; ++j) {
                           const std::size_t id = id_copy[r * width + j];
                           for (std::size_t c = 0; c < d; ++c) g[id * d + c] += self.grad[r * d + c] * inv;
                         }
                       }
                     });
}

}  // namespace dao
