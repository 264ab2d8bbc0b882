#include "etp/ad/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "etp/ad/special.hpp"

namespace etp::ad {

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("Var is not attached to a tape");
  return tape_->value(id_);
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, const std::vector<Var>& operands, VjpRule rule) {
  Node node{std::move(value), {}, nullptr, false};
  for (const Var& op : operands) {
    if (op.tape() != this) throw std::logic_error("operand recorded on a different tape");
    node.parents.push_back(op.id());
    node.requires_grad = node.requires_grad || nodes_[op.id()].requires_grad;
  }
  if (node.requires_grad) node.rule = std::move(rule);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape() != this) throw std::logic_error("loss is not on this tape");
  const Tensor& lv = nodes_.at(loss.id()).value;
  if (lv.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " + to_string(lv.shape()));
  }
  Gradients out;
  out.grads_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].requires_grad) out.grads_[i] = Tensor::zeros_like(nodes_[i].value);
  }
  if (!nodes_[loss.id()].requires_grad) return out;
  out.grads_[loss.id()][0] = 1.0;

  std::vector<const Tensor*> inputs;
  std::vector<Tensor*> grad_in;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.requires_grad || !node.rule) continue;
    inputs.clear();
    grad_in.clear();
    for (std::size_t p : node.parents) {
      inputs.push_back(&nodes_[p].value);
      grad_in.push_back(nodes_[p].requires_grad ? &out.grads_[p] : nullptr);
    }
    node.rule(inputs, node.value, out.grads_[i], grad_in);
  }
  return out;
}

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::logic_error("operation on a detached Var");
  return *a.tape();
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

void require_matrix(const char* op, Var a) {
  if (a.value().rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + to_string(a.shape()));
  }
}

template <typename F, typename D>
Var unary(Var a, F f, D dfdx_from_x_y) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return tape_of(a).record(std::move(y), {a},
                           [dfdx_from_x_y](const auto& in, const Tensor& out, const Tensor& g,
                                           const auto& gin) {
                             if (!gin[0]) return;
                             const Tensor& x = *in[0];
                             Tensor& gx = *gin[0];
                             for (std::size_t i = 0; i < x.size(); ++i) {
                               gx[i] += g[i] * dfdx_from_x_y(x[i], out[i]);
                             }
                           });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  if (B.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ " + to_string(A.shape()) + " x " +
                     to_string(B.shape()));
  }
  Tensor C({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = &C(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A(i, p);
      if (aip == 0.0) continue;
      const double* brow = B.data().data() + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
  return tape_of(a).record(std::move(C), {a, b},
                           [](const auto& in, const Tensor&, const Tensor& G, const auto& gin) {
                             const Tensor& A = *in[0];
                             const Tensor& B = *in[1];
                             const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
                             if (gin[0]) {
                               // dA = G B^T
                               Tensor& gA = *gin[0];
                               for (std::size_t i = 0; i < n; ++i) {
                                 for (std::size_t p = 0; p < k; ++p) {
                                   double s = 0.0;
                                   for (std::size_t j = 0; j < m; ++j) s += G(i, j) * B(p, j);
                                   gA(i, p) += s;
                                 }
                               }
                             }
                             if (gin[1]) {
                               // dB = A^T G
                               Tensor& gB = *gin[1];
                               for (std::size_t i = 0; i < n; ++i) {
                                 for (std::size_t p = 0; p < k; ++p) {
                                   const double aip = A(i, p);
                                   if (aip == 0.0) continue;
                                   for (std::size_t j = 0; j < m; ++j) gB(p, j) += aip * G(i, j);
                                 }
                               }
                             }
                           });
}

Var transpose(Var a) {
  require_matrix("transpose", a);
  const Tensor& A = a.value();
  Tensor T({A.cols(), A.rows()});
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) T(j, i) = A(i, j);
  return tape_of(a).record(std::move(T), {a},
                           [](const auto&, const Tensor&, const Tensor& G, const auto& gin) {
                             if (!gin[0]) return;
                             Tensor& gA = *gin[0];
                             for (std::size_t i = 0; i < gA.rows(); ++i)
                               for (std::size_t j = 0; j < gA.cols(); ++j) gA(i, j) += G(j, i);
                           });
}

namespace {

template <typename F, typename DA, typename DB>
Var binary(const char* op, Var a, Var b, F f, DA da, DB db) {
  require_same_shape(op, a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor z(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = f(x[i], y[i]);
  return tape_of(a).record(std::move(z), {a, b},
                           [da, db](const auto& in, const Tensor&, const Tensor& g,
                                    const auto& gin) {
                             const Tensor& x = *in[0];
                             const Tensor& y = *in[1];
                             if (gin[0])
                               for (std::size_t i = 0; i < x.size(); ++i)
                                 (*gin[0])[i] += g[i] * da(x[i], y[i]);
                             if (gin[1])
                               for (std::size_t i = 0; i < x.size(); ++i)
                                 (*gin[1])[i] += g[i] * db(x[i], y[i]);
                           });
}

}  // namespace

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var div(Var a, Var b) {
  for (double v : b.value().data()) {
    if (v == 0.0) throw DomainError("div: division by zero");
  }
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Var add_row(Var a, Var row) {
  require_matrix("add_row", a);
  const Tensor& A = a.value();
  const Tensor& r = row.value();
  if (r.rank() != 2 || r.rows() != 1 || r.cols() != A.cols()) {
    throw ShapeError("add_row: row " + to_string(r.shape()) + " does not fit " +
                     to_string(A.shape()));
  }
  Tensor out = A;
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) out(i, j) += r[j];
  return tape_of(a).record(std::move(out), {a, row},
                           [](const auto& in, const Tensor&, const Tensor& G, const auto& gin) {
                             const Tensor& A = *in[0];
                             if (gin[0])
                               for (std::size_t i = 0; i < G.size(); ++i) (*gin[0])[i] += G[i];
                             if (gin[1])
                               for (std::size_t i = 0; i < A.rows(); ++i)
                                 for (std::size_t j = 0; j < A.cols(); ++j)
                                   (*gin[1])[j] += G(i, j);
                           });
}

Var scale(Var a, double c) {
  return unary(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var scale(Var scalar, Var a) {
  const Tensor& s = scalar.value();
  if (s.size() != 1) {
    throw ShapeError("scale: expected a 1x1 scalar, got " + to_string(s.shape()));
  }
  const double c = s[0];
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = c * x[i];
  return tape_of(a).record(std::move(y), {scalar, a},
                           [](const auto& in, const Tensor&, const Tensor& G, const auto& gin) {
                             const double c = (*in[0])[0];
                             const Tensor& x = *in[1];
                             if (gin[0]) {
                               double s = 0.0;
                               for (std::size_t i = 0; i < x.size(); ++i) s += G[i] * x[i];
                               (*gin[0])[0] += s;
                             }
                             if (gin[1])
                               for (std::size_t i = 0; i < x.size(); ++i) (*gin[1])[i] += c * G[i];
                           });
}

Var add_const(Var a, double c) {
  return unary(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  for (double v : a.value().data()) {
    if (!(v > 0.0)) throw DomainError("log: non-positive input " + std::to_string(v));
  }
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var lgamma(Var a) {
  return unary(
      a, [](double x) { return log_gamma(x); }, [](double x, double) { return digamma(x); });
}

Var digamma(Var a) {
  return unary(
      a, [](double x) { return ad::digamma(x); }, [](double x, double) { return trigamma(x); });
}

Var clamp_max(Var a, double ceiling) {
  return unary(
      a, [ceiling](double x) { return x > ceiling ? ceiling : x; },
      [ceiling](double x, double) { return x > ceiling ? 0.0 : 1.0; });
}

Var softmax_rows(Var a) {
  require_matrix("softmax_rows", a);
  const Tensor& X = a.value();
  Tensor Y(X.shape());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    double mx = X(i, 0);
    for (std::size_t j = 1; j < X.cols(); ++j) mx = std::max(mx, X(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < X.cols(); ++j) z += (Y(i, j) = std::exp(X(i, j) - mx));
    for (std::size_t j = 0; j < X.cols(); ++j) Y(i, j) /= z;
  }
  return tape_of(a).record(std::move(Y), {a},
                           [](const auto&, const Tensor& Y, const Tensor& G, const auto& gin) {
                             if (!gin[0]) return;
                             Tensor& gX = *gin[0];
                             for (std::size_t i = 0; i < Y.rows(); ++i) {
                               double dot = 0.0;
                               for (std::size_t j = 0; j < Y.cols(); ++j) dot += G(i, j) * Y(i, j);
                               for (std::size_t j = 0; j < Y.cols(); ++j)
                                 gX(i, j) += Y(i, j) * (G(i, j) - dot);
                             }
                           });
}

Var log_softmax_rows(Var a) {
  require_matrix("log_softmax_rows", a);
  const Tensor& X = a.value();
  Tensor Y(X.shape());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    double mx = X(i, 0);
    for (std::size_t j = 1; j < X.cols(); ++j) mx = std::max(mx, X(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < X.cols(); ++j) z += std::exp(X(i, j) - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < X.cols(); ++j) Y(i, j) = X(i, j) - lse;
  }
  return tape_of(a).record(std::move(Y), {a},
                           [](const auto&, const Tensor& Y, const Tensor& G, const auto& gin) {
                             if (!gin[0]) return;
                             Tensor& gX = *gin[0];
                             for (std::size_t i = 0; i < Y.rows(); ++i) {
                               double gsum = 0.0;
                               for (std::size_t j = 0; j < Y.cols(); ++j) gsum += G(i, j);
                               for (std::size_t j = 0; j < Y.cols(); ++j)
                                 gX(i, j) += G(i, j) - std::exp(Y(i, j)) * gsum;
                             }
                           });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return tape_of(a).record(Tensor::scalar(s), {a},
                           [](const auto&, const Tensor&, const Tensor& G, const auto& gin) {
                             if (!gin[0]) return;
                             for (double& v : gin[0]->data()) v += G[0];
                           });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var row_sum(Var a) {
  require_matrix("row_sum", a);
  const Tensor& X = a.value();
  Tensor Y({X.rows(), 1});
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t j = 0; j < X.cols(); ++j) Y[i] += X(i, j);
  return tape_of(a).record(std::move(Y), {a},
                           [](const auto&, const Tensor&, const Tensor& G, const auto& gin) {
                             if (!gin[0]) return;
                             Tensor& gX = *gin[0];
                             for (std::size_t i = 0; i < gX.rows(); ++i)
                               for (std::size_t j = 0; j < gX.cols(); ++j) gX(i, j) += G[i];
                           });
}

Var repeat_cols(Var column, std::size_t cols) {
  const Tensor& X = column.value();
  if (X.rank() != 2 || X.cols() != 1 || cols == 0) {
    throw ShapeError("repeat_cols: expected an Nx1 column, got " + to_string(X.shape()));
  }
  Tensor Y({X.rows(), cols});
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t j = 0; j < cols; ++j) Y(i, j) = X[i];
  return tape_of(column).record(std::move(Y), {column},
                                [](const auto&, const Tensor&, const Tensor& G, const auto& gin) {
                                  if (!gin[0]) return;
                                  for (std::size_t i = 0; i < G.rows(); ++i)
                                    for (std::size_t j = 0; j < G.cols(); ++j)
                                      (*gin[0])[i] += G(i, j);
                                });
}

Var concat_cols(Var a, Var b) {
  require_matrix("concat_cols", a);
  require_matrix("concat_cols", b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rows() != B.rows()) {
    throw ShapeError("concat_cols: row counts differ " + to_string(A.shape()) + " vs " +
                     to_string(B.shape()));
  }
  const std::size_t p = A.cols(), q = B.cols();
  Tensor C({A.rows(), p + q});
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t j = 0; j < p; ++j) C(i, j) = A(i, j);
    for (std::size_t j = 0; j < q; ++j) C(i, p + j) = B(i, j);
  }
  return tape_of(a).record(std::move(C), {a, b},
                           [p, q](const auto&, const Tensor&, const Tensor& G, const auto& gin) {
                             for (std::size_t i = 0; i < G.rows(); ++i) {
                               if (gin[0])
                                 for (std::size_t j = 0; j < p; ++j) (*gin[0])(i, j) += G(i, j);
                               if (gin[1])
                                 for (std::size_t j = 0; j < q; ++j)
                                   (*gin[1])(i, j) += G(i, p + j);
                             }
                           });
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  require_matrix("slice_cols", a);
  const Tensor& A = a.value();
  if (count == 0 || start + count > A.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of range for " +
                     to_string(A.shape()));
  }
  Tensor S({A.rows(), count});
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) S(i, j) = A(i, start + j);
  return tape_of(a).record(std::move(S), {a},
                           [start](const auto&, const Tensor&, const Tensor& G, const auto& gin) {
                             if (!gin[0]) return;
                             for (std::size_t i = 0; i < G.rows(); ++i)
                               for (std::size_t j = 0; j < G.cols(); ++j)
                                 (*gin[0])(i, start + j) += G(i, j);
                           });
}

}  // namespace etp::ad
