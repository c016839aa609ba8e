#pragma once

// Reverse-mode automatic differentiation over dense matrices.
//
// A Tape records nodes in creation order, so creation order is a topological
// order and backward() is a single reverse sweep. The tape is templated on
// the scalar: Tape<double> for gradients, Tape<Dual> for exact
// Hessian-vector products (forward-over-reverse).

#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "otmeta/dual.hpp"
#include "otmeta/params.hpp"

namespace otmeta::ad {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation needs second-order information that the
/// objective cannot provide.
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

struct Var {
  std::size_t id = 0;
};

namespace detail {

template <typename M>
std::string shape(const M& m) {
  std::ostringstream os;
  os << "[" << m.rows() << "x" << m.cols() << "]";
  return os.str();
}

template <typename T>
T sigmoid(const T& x) {
  using std::exp;
  const T one(1.0);
  return one / (one + exp(-x));
}

template <typename T>
T tanh(const T& x) {
  using std::tanh;
  return tanh(x);
}

}  // namespace detail

template <typename T>
class Tape {
 public:
  using Mat = Matrix<T>;

  Var leaf(Mat value, bool requires_grad = true) { return push(std::move(value), requires_grad, nullptr); }
  Var constant(Mat value) { return leaf(std::move(value), false); }

  const Mat& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient after backward(); zeros for nodes the loss does not reach.
  Mat grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.has_grad ? n.grad : Mat::Zero(n.value.rows(), n.value.cols());
  }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // ---- primitives -------------------------------------------------------

  Var add(Var a, Var b) {
    same_shape("add", a, b);
    return push(value(a) + value(b), any(a, b), [a, b](Tape& t, const Mat& g) {
      t.accumulate(a, g);
      t.accumulate(b, g);
    });
  }

  Var sub(Var a, Var b) {
    same_shape("sub", a, b);
    return push(value(a) - value(b), any(a, b), [a, b](Tape& t, const Mat& g) {
      t.accumulate(a, g);
      t.accumulate(b, -g);
    });
  }

  /// Elementwise product.
  Var mul(Var a, Var b) {
    same_shape("mul", a, b);
    return push(value(a).cwiseProduct(value(b)), any(a, b), [a, b](Tape& t, const Mat& g) {
      if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
      if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
    });
  }

  Var scale(Var a, double s) {
    return push(value(a) * T(s), requires_grad(a), [a, s](Tape& t, const Mat& g) { t.accumulate(a, g * T(s)); });
  }

  Var matmul(Var a, Var b) {
    if (value(a).cols() != value(b).rows())
      throw ShapeError("matmul: shape mismatch " + detail::shape(value(a)) + " vs " + detail::shape(value(b)));
    return push(value(a) * value(b), any(a, b), [a, b](Tape& t, const Mat& g) {
      if (t.requires_grad(a)) t.accumulate(a, g * t.value(b).transpose());
      if (t.requires_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
    });
  }

  /// A [m x n] times column vector x [n x 1].
  Var matvec(Var A, Var x) {
    if (value(x).cols() != 1 || value(A).cols() != value(x).rows())
      throw ShapeError("matvec: shape mismatch " + detail::shape(value(A)) + " vs " + detail::shape(value(x)));
    return matmul(A, x);
  }

  /// x [B x n] plus row vector b [1 x n] on every row.
  Var add_bias(Var x, Var b) {
    if (value(b).rows() != 1 || value(b).cols() != value(x).cols())
      throw ShapeError("add_bias: shape mismatch " + detail::shape(value(x)) + " vs " + detail::shape(value(b)));
    Mat out = value(x);
    out.rowwise() += value(b).row(0);
    return push(std::move(out), any(x, b), [x, b](Tape& t, const Mat& g) {
      t.accumulate(x, g);
      if (t.requires_grad(b)) t.accumulate(b, g.colwise().sum());
    });
  }

  /// Column concatenation [a | b].
  Var concat(Var a, Var b) {
    if (value(a).rows() != value(b).rows())
      throw ShapeError("concat: shape mismatch " + detail::shape(value(a)) + " vs " + detail::shape(value(b)));
    const Eigen::Index ca = value(a).cols(), cb = value(b).cols();
    Mat out(value(a).rows(), ca + cb);
    out << value(a), value(b);
    return push(std::move(out), any(a, b), [a, b, ca, cb](Tape& t, const Mat& g) {
      t.accumulate(a, g.leftCols(ca));
      t.accumulate(b, g.rightCols(cb));
    });
  }

  Var slice_cols(Var a, Eigen::Index start, Eigen::Index width) {
    if (start < 0 || width < 0 || start + width > value(a).cols())
      throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + width) +
                       ") out of range for " + detail::shape(value(a)));
    const Eigen::Index rows = value(a).rows(), cols = value(a).cols();
    return push(value(a).middleCols(start, width), requires_grad(a), [a, start, width, rows, cols](Tape& t, const Mat& g) {
      Mat full = Mat::Zero(rows, cols);
      full.middleCols(start, width) = g;
      t.accumulate(a, full);
    });
  }

  /// Splits columns into consecutive pieces of the given widths.
  std::vector<Var> split(Var a, const std::vector<Eigen::Index>& widths) {
    Eigen::Index total = 0;
    for (auto w : widths) total += w;
    if (total != value(a).cols())
      throw ShapeError("split: widths sum to " + std::to_string(total) + " but operand is " + detail::shape(value(a)));
    std::vector<Var> out;
    Eigen::Index start = 0;
    for (auto w : widths) {
      out.push_back(slice_cols(a, start, w));
      start += w;
    }
    return out;
  }

  Var sigmoid(Var a) {
    Mat s = value(a).unaryExpr([](const T& x) { return detail::sigmoid(x); });
    return push(s, requires_grad(a), [a, s](Tape& t, const Mat& g) {
      t.accumulate(a, g.cwiseProduct(s.unaryExpr([](const T& y) { return y * (T(1.0) - y); })));
    });
  }

  Var tanh(Var a) {
    Mat y = value(a).unaryExpr([](const T& x) { return detail::tanh(x); });
    return push(y, requires_grad(a), [a, y](Tape& t, const Mat& g) {
      t.accumulate(a, g.cwiseProduct(y.unaryExpr([](const T& v) { return T(1.0) - v * v; })));
    });
  }

  /// Row lookup: out.row(i) = table.row(rows[i]).
  Var gather_rows(Var table, const std::vector<int>& rows) {
    const Mat& tv = value(table);
    Mat out(static_cast<Eigen::Index>(rows.size()), tv.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] < 0 || rows[i] >= tv.rows())
        throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " + detail::shape(tv));
      out.row(static_cast<Eigen::Index>(i)) = tv.row(rows[i]);
    }
    const Eigen::Index tr = tv.rows(), tc = tv.cols();
    return push(std::move(out), requires_grad(table), [table, rows, tr, tc](Tape& t, const Mat& g) {
      Mat full = Mat::Zero(tr, tc);
      for (std::size_t i = 0; i < rows.size(); ++i) full.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
      t.accumulate(table, full);
    });
  }

  /// Row-wise choice: row i from `a` where take_a[i], else from `b`.
  Var select_rows(const std::vector<bool>& take_a, Var a, Var b) {
    same_shape("select_rows", a, b);
    if (static_cast<Eigen::Index>(take_a.size()) != value(a).rows())
      throw ShapeError("select_rows: mask of length " + std::to_string(take_a.size()) + " vs " + detail::shape(value(a)));
    Mat out = value(b);
    for (std::size_t i = 0; i < take_a.size(); ++i)
      if (take_a[i]) out.row(static_cast<Eigen::Index>(i)) = value(a).row(static_cast<Eigen::Index>(i));
    return push(std::move(out), any(a, b), [take_a, a, b](Tape& t, const Mat& g) {
      Mat ga = g, gb = g;
      for (std::size_t i = 0; i < take_a.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        if (take_a[i]) {
          gb.row(r).setZero();
        } else {
          ga.row(r).setZero();
        }
      }
      t.accumulate(a, ga);
      t.accumulate(b, gb);
    });
  }

  /// Sum of all entries, as a [1 x 1] node.
  Var sum(Var a) {
    Mat out(1, 1);
    out(0, 0) = value(a).sum();
    const Eigen::Index r = value(a).rows(), c = value(a).cols();
    return push(std::move(out), requires_grad(a), [a, r, c](Tape& t, const Mat& g) {
      t.accumulate(a, Mat::Constant(r, c, g(0, 0)));
    });
  }

  /// sum_i weights[i] * (logsumexp(logits.row(i)) - logits(i, targets[i])).
  /// Rows with zero weight are skipped entirely.
  Var softmax_cross_entropy(Var logits, const std::vector<int>& targets, const std::vector<double>& weights) {
    const Mat& z = value(logits);
    if (static_cast<Eigen::Index>(targets.size()) != z.rows() || weights.size() != targets.size())
      throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets and " +
                       std::to_string(weights.size()) + " weights vs logits " + detail::shape(z));
    using std::exp;
    using std::log;
    Mat probs = Mat::Zero(z.rows(), z.cols());
    T total(0.0);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double w = weights[static_cast<std::size_t>(i)];
      if (w == 0.0) continue;
      const int y = targets[static_cast<std::size_t>(i)];
      if (y < 0 || y >= z.cols()) throw ShapeError("softmax_cross_entropy: target " + std::to_string(y) + " out of range");
      T m = z(i, 0);
      for (Eigen::Index j = 1; j < z.cols(); ++j)
        if (z(i, j) > m) m = z(i, j);
      T denom(0.0);
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        probs(i, j) = exp(z(i, j) - m);
        denom += probs(i, j);
      }
      for (Eigen::Index j = 0; j < z.cols(); ++j) probs(i, j) /= denom;
      total += T(w) * (m + log(denom) - z(i, y));
    }
    Mat out(1, 1);
    out(0, 0) = total;
    return push(std::move(out), requires_grad(logits), [logits, probs, targets, weights](Tape& t, const Mat& g) {
      Mat d = probs;
      for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const double w = weights[static_cast<std::size_t>(i)];
        if (w == 0.0) {
          d.row(i).setZero();
          continue;
        }
        d(i, targets[static_cast<std::size_t>(i)]) -= T(1.0);
        d.row(i) *= T(w) * g(0, 0);
      }
      t.accumulate(logits, d);
    });
  }

  /// Reverse sweep from a scalar loss. Gradients from an earlier sweep are
  /// cleared first.
  void backward(Var loss) {
    const Mat& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward: loss must be scalar, got " + detail::shape(lv));
    for (auto& n : nodes_) n.has_grad = false;
    nodes_[loss.id].grad = Mat::Constant(1, 1, T(1.0));
    nodes_[loss.id].has_grad = true;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.has_grad || !n.backward) continue;
      n.backward(*this, n.grad);
    }
  }

 private:
  using Backward = std::function<void(Tape&, const Mat&)>;

  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    bool has_grad = false;
    Backward backward;
  };

  Var push(Mat value, bool requires_grad, Backward bw) {
    nodes_.push_back(Node{std::move(value), Mat(), requires_grad, false, requires_grad ? std::move(bw) : Backward()});
    return Var{nodes_.size() - 1};
  }

  void accumulate(Var v, const Mat& g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (n.has_grad) {
      n.grad += g;
    } else {
      n.grad = g;
      n.has_grad = true;
    }
  }

  bool any(Var a, Var b) const { return requires_grad(a) || requires_grad(b); }

  void same_shape(const char* op, Var a, Var b) const {
    const Mat& x = value(a);
    const Mat& y = value(b);
    if (x.rows() != y.rows() || x.cols() != y.cols())
      throw ShapeError(std::string(op) + ": shape mismatch " + detail::shape(x) + " vs " + detail::shape(y));
  }

  std::vector<Node> nodes_;
};

// ---- parameter binding and derivative drivers ------------------------------

/// Leaves for every block, in block order. With a tangent (Dual only) each
/// leaf carries the matching direction.
template <typename T>
std::vector<Var> bind_parameters(Tape<T>& tape, const ParameterVector& p, const ParameterVector* tangent = nullptr) {
  std::vector<Var> vars;
  vars.reserve(p.num_blocks());
  for (std::size_t i = 0; i < p.num_blocks(); ++i) {
    const Eigen::MatrixXd& v = p.block(i).value;
    Matrix<T> m(v.rows(), v.cols());
    for (Eigen::Index r = 0; r < v.rows(); ++r)
      for (Eigen::Index c = 0; c < v.cols(); ++c) {
        if constexpr (std::is_same_v<T, Dual>) {
          m(r, c) = Dual(v(r, c), tangent ? tangent->block(i).value(r, c) : 0.0);
        } else {
          m(r, c) = v(r, c);
        }
      }
    vars.push_back(tape.leaf(std::move(m)));
  }
  return vars;
}

struct ValueAndGradient {
  double value = 0.0;
  ParameterVector gradient;
};

/// `loss_fn(tape, vars)` must be callable for Tape<double> (and Tape<Dual>
/// for the second-order drivers) and return a scalar Var.
template <typename F>
ValueAndGradient value_and_gradient(F&& loss_fn, const ParameterVector& p) {
  Tape<double> tape;
  const auto vars = bind_parameters(tape, p);
  const Var loss = loss_fn(tape, vars);
  tape.backward(loss);
  ValueAndGradient out{tape.value(loss)(0, 0), p.zeros_like()};
  for (std::size_t i = 0; i < vars.size(); ++i) out.gradient.block(i).value = tape.grad(vars[i]);
  return out;
}

struct GradientAndHvp {
  double value = 0.0;
  ParameterVector gradient;
  ParameterVector hvp;
};

/// Exact H v by forward-over-reverse differentiation.
template <typename F>
GradientAndHvp gradient_and_hvp(F&& loss_fn, const ParameterVector& p, const ParameterVector& direction) {
  if (!p.same_layout(direction)) throw ShapeError("hessian_vector_product: direction layout differs from parameters");
  Tape<Dual> tape;
  const auto vars = bind_parameters(tape, p, &direction);
  const Var loss = loss_fn(tape, vars);
  tape.backward(loss);
  GradientAndHvp out{tape.value(loss)(0, 0).v, p.zeros_like(), p.zeros_like()};
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const Matrix<Dual> g = tape.grad(vars[i]);
    out.gradient.block(i).value = g.unaryExpr([](const Dual& x) { return x.v; });
    out.hvp.block(i).value = g.unaryExpr([](const Dual& x) { return x.d; });
  }
  return out;
}

template <typename F>
ParameterVector hessian_vector_product(F&& loss_fn, const ParameterVector& p, const ParameterVector& direction) {
  return gradient_and_hvp(std::forward<F>(loss_fn), p, direction).hvp;
}

/// Central difference of first-order gradients along `direction`.
template <typename F>
ParameterVector fd_hessian_vector_product(F&& loss_fn, const ParameterVector& p, const ParameterVector& direction,
                                          double h = 1e-5) {
  ParameterVector plus = p, minus = p;
  plus.axpy(h, direction);
  minus.axpy(-h, direction);
  ParameterVector out = value_and_gradient(loss_fn, plus).gradient;
  out -= value_and_gradient(loss_fn, minus).gradient;
  out *= 1.0 / (2.0 * h);
  return out;
}

}  // namespace otmeta::ad
