#pragma once

// Dense 64-bit tensors with define-by-run reverse-mode differentiation.
//
// A Tensor is a shared handle: copies alias the same storage and graph node.
// Every op records its inputs and a backward closure when any input requires
// a gradient; the graph is discarded when the last handle to the result goes
// away, so a training step simply rebuilds it.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dao {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {
struct Node;
}

class Tensor {
 public:
  /// Undefined tensor; only assignment and defined() are valid on it.
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }

  const Shape& shape() const;
  std::size_t ndim() const { return shape().size(); }
  std::size_t numel() const;
  std::size_t dim(std::size_t axis) const;
  bool is_scalar() const { return numel() == 1; }

  std::span<const double> data() const;
  /// Direct write access, for optimizers and initializers. Must not be used
  /// on a tensor whose graph is still awaiting backward().
  std::span<double> mutable_data();
  double item() const;
  double operator[](std::size_t i) const { return data()[i]; }

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  /// Accumulated gradient; empty span when nothing has been accumulated.
  std::span<const double> grad() const;
  bool has_grad() const;
  void zero_grad();
  /// Moves the accumulated gradient out (zero-filled if absent), leaving none behind.
  std::vector<double> take_grad();

  /// Same values, no graph history, no gradient requirement.
  Tensor detach() const;
  /// Independent copy of the values.
  Tensor clone() const;

  /// Reverse-mode pass from this scalar. Gradients accumulate additively into
  /// every leaf that requires them; interior gradients are recomputed each call.
  void backward() const;

  /// Identity of the underlying node (aliasing handles compare equal).
  const void* id() const noexcept { return node_.get(); }

 private:
  friend struct TensorAccess;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

// ---- linear algebra -------------------------------------------------------

/// (m x k) * (k x n) -> (m x n).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Adds a length-n bias to every row of an (m x n) matrix.
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor reshape(const Tensor& a, Shape shape);

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double b);
Tensor scale(const Tensor& a, double factor);
Tensor neg(const Tensor& a);
/// Throws DomainError on any non-positive entry.
Tensor log(const Tensor& a);
Tensor exp(const Tensor& a);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, double b);
Tensor operator*(double a, const Tensor& b);
Tensor operator-(const Tensor& a);

// ---- activations ----------------------------------------------------------

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);

/// Softmax over a vector. Throws NumericError on NaN input.
Tensor softmax(const Tensor& x);
/// Row-wise log-softmax of an (m x n) matrix, log-sum-exp stabilized.
Tensor log_softmax_rows(const Tensor& x);

// ---- reductions -----------------------------------------------------------

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Euclidean norm; its gradient at the zero vector is taken to be zero.
Tensor l2norm(const Tensor& x);

// ---- indexing -------------------------------------------------------------

/// Entry i of a tensor as a scalar.
Tensor element(const Tensor& x, std::size_t index);
/// Flat entries at the given indices, as a vector.
Tensor gather(const Tensor& x, std::span<const std::size_t> indices);
/// out[i] = x[i, columns[i]] for an (m x n) matrix.
Tensor pick_columns(const Tensor& x, std::span<const std::size_t> columns);
/// Concatenates the flattened inputs into one vector.
Tensor concat(const std::vector<Tensor>& parts);

/// Mean of embedding rows per sequence. `ids` is a row-major (batch x width)
/// id matrix; row r averages table[ids[r, j]] for j < lengths[r].
Tensor embedding_mean(const Tensor& table, std::span<const std::size_t> ids,
                      std::span<const std::size_t> lengths, std::size_t width);

}  // namespace dao
