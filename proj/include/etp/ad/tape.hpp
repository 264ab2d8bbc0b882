#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <deque>
#include <vector>

#include "etp/ad/tensor.hpp"

namespace etp::ad {

/// Raised when an operation is applied outside its mathematical domain
/// (log of a non-positive value, lgamma of a non-positive value, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Adjoints produced by Tape::backward, indexed by node id.
class Gradients {
 public:
  const Tensor& operator[](Var v) const { return grads_.at(v.id()); }
  const Tensor& at(std::size_t id) const { return grads_.at(id); }
  std::size_t size() const { return grads_.size(); }

 private:
  friend class Tape;
  std::vector<Tensor> grads_;
};

/// Vector-Jacobian rule: receives operand values, the output value, the
/// output adjoint, and one accumulator per operand (null when that operand
/// does not need a gradient).
using VjpRule = std::function<void(const std::vector<const Tensor*>& inputs,
                                   const Tensor& output, const Tensor& grad_out,
                                   const std::vector<Tensor*>& grad_in)>;

/// Dynamic reverse-mode tape. Re-recorded for every loss evaluation; not
/// thread-safe, but independent tapes share nothing.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  /// Differentiable input.
  Var leaf(Tensor value);
  /// Input that never receives a gradient.
  Var constant(Tensor value);

  Var record(Tensor value, const std::vector<Var>& operands, VjpRule rule);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a 1x1 loss. Every node that needs a gradient gets an
  /// adjoint tensor; nodes the loss does not depend on get zeros.
  Gradients backward(Var loss) const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    VjpRule rule;
    bool requires_grad = false;
  };

  // deque keeps value() references stable while later nodes are recorded.
  std::deque<Node> nodes_;
};

// Primitive operations. Shape rules: elementwise binaries need identical
// shapes; add_row adds a 1xC row to every row of an NxC matrix; scale
// multiplies by a 1x1 scalar. Nothing else broadcasts.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var add_row(Var a, Var row);
Var scale(Var a, double c);
Var scale(Var scalar, Var a);
Var add_const(Var a, double c);
Var neg(Var a);

Var relu(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var lgamma(Var a);
Var digamma(Var a);
/// min(a, ceiling); the gradient is zero where the ceiling is active.
Var clamp_max(Var a, double ceiling);

Var softmax_rows(Var a);
Var log_softmax_rows(Var a);

Var sum(Var a);
Var mean(Var a);
Var row_sum(Var a);
Var repeat_cols(Var column, std::size_t cols);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t start, std::size_t count);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double c, Var a) { return scale(a, c); }

}  // namespace etp::ad
