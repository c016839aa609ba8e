#include <gtest/gtest.h>

#include <cmath>

#include "../support/gradcheck.hpp"
#include "otmeta/autodiff.hpp"
#include "otmeta/seq2seq.hpp"

using namespace otmeta;
using ad::Tape;
using ad::Var;

TEST(Autodiff, PrimitivesMatchFiniteDifferences) {
  Rng rng(1234);
  for (const auto& [name, make] : check::primitive_cases()) {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto inst = make(rng);
      worst = std::max(worst, check::check_gradients(inst.inputs, inst.build).max_rel);
    }
    EXPECT_LT(worst, 1e-4) << name;
  }
}

TEST(Autodiff, UniformLogitsGiveLogV) {
  for (int V : {2, 7, 34}) {
    Tape<double> t;
    const Var z = t.leaf(Eigen::MatrixXd::Zero(1, V));
    const Var loss = t.softmax_cross_entropy(z, {V - 1}, {1.0});
    EXPECT_NEAR(t.value(loss)(0, 0), std::log(static_cast<double>(V)), 1e-15);
  }
}

TEST(Autodiff, TanhDerivative) {
  Tape<double> t;
  Eigen::MatrixXd x(1, 3);
  x << -2.0, 0.0, 0.7;
  const Var v = t.leaf(x);
  t.backward(t.sum(t.tanh(v)));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(t.grad(v)(0, i), 1.0 - std::tanh(x(0, i)) * std::tanh(x(0, i)), 1e-15);
}

TEST(Autodiff, NonScalarLossIsRejected) {
  Tape<double> t;
  const Var v = t.leaf(Eigen::MatrixXd::Ones(2, 2));
  EXPECT_THROW(t.backward(t.tanh(v)), ad::ShapeError);
  EXPECT_THROW(t.matmul(v, t.leaf(Eigen::MatrixXd::Ones(3, 1))), ad::ShapeError);
}

TEST(Autodiff, UnusedLeafGetsZeroGradient) {
  Tape<double> t;
  const Var a = t.leaf(Eigen::MatrixXd::Ones(2, 2));
  const Var b = t.leaf(Eigen::MatrixXd::Ones(3, 1));
  t.backward(t.sum(t.mul(a, a)));
  EXPECT_EQ(t.grad(b), Eigen::MatrixXd::Zero(3, 1));
}

TEST(Autodiff, BackwardIsDeterministic) {
  Rng rng(5);
  const auto cases = check::primitive_cases();
  const auto inst = cases.back().second(rng);
  auto run = [&] {
    Tape<double> t;
    std::vector<Var> vars;
    for (const auto& m : inst.inputs) vars.push_back(t.leaf(m));
    t.backward(inst.build(t, vars));
    return t.grad(vars[0]);
  };
  EXPECT_EQ(run(), run());
}

namespace {

// f(p) = 1/2 p^T A p + b^T p with A symmetric, written with tape primitives.
struct Quadratic {
  Eigen::MatrixXd A, b;
  template <typename T>
  Var operator()(Tape<T>& t, const std::vector<Var>& v) const {
    ad::Matrix<T> At = A.cast<T>(), bt = b.cast<T>();
    const Var Ap = t.matvec(t.constant(At), v[0]);
    const Var quad = t.scale(t.sum(t.mul(v[0], Ap)), 0.5);
    return t.add(quad, t.sum(t.mul(t.constant(bt), v[0])));
  }
};

}  // namespace

TEST(Autodiff, HessianVectorProductOfQuadratic) {
  Rng rng(9);
  const int n = 6;
  Eigen::MatrixXd M = check::random_matrix(rng, n, n);
  Quadratic q{M + M.transpose(), check::random_matrix(rng, n, 1)};
  ParameterVector p, v;
  p.add_block("p", check::random_matrix(rng, n, 1));
  v.add_block("p", check::random_matrix(rng, n, 1));
  const auto r = ad::gradient_and_hvp(q, p, v);
  const Eigen::VectorXd Av = q.A * v["p"];
  for (int i = 0; i < n; ++i) EXPECT_NEAR(r.hvp["p"](i), Av(i), 1e-12);
  const Eigen::VectorXd grad = q.A * p["p"] + q.b;
  for (int i = 0; i < n; ++i) EXPECT_NEAR(r.gradient["p"](i), grad(i), 1e-12);
  const auto fd = ad::fd_hessian_vector_product(q, p, v);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(fd["p"](i), Av(i), 1e-6);
}

TEST(Autodiff, Seq2seqHvpMatchesFiniteDifferences) {
  ModelConfig cfg;
  cfg.embed_dim = 4;
  cfg.hidden_dim = 5;
  Rng rng(21);
  const ParameterVector p = init_params(cfg, rng);
  const ParameterVector v = init_params(cfg, rng);
  const std::vector<Example> batch = {{"ka", ".ka."}, {"euz", ".e.u."}, {"", ""}};
  const auto exact = loss_gradient_and_hvp(batch, p, v, cfg).hvp;
  auto f = [&](auto& tape, const std::vector<Var>& vars) { return batch_loss(tape, vars, batch, cfg); };
  const auto fd = ad::fd_hessian_vector_product(f, p, v);
  const Eigen::VectorXd a = exact.flatten(), b = fd.flatten();
  EXPECT_LT((a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff()), 1e-3);
  const auto zero = loss_gradient_and_hvp(batch, p, p.zeros_like(), cfg).hvp;
  EXPECT_EQ(zero.max_abs(), 0.0);
}

TEST(Autodiff, Seq2seqLossGradient) {
  ModelConfig cfg;
  cfg.embed_dim = 3;
  cfg.hidden_dim = 4;
  Rng rng(3);
  const ParameterVector p = init_params(cfg, rng);
  const std::vector<Example> batch = {{"kae", ".ka.e."}, {"b", ""}};
  const auto g = loss_and_gradient(batch, p, cfg);
  const Eigen::VectorXd flat = p.flatten(), grad = g.gradient.flatten();
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto i = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(flat.size())));
    Eigen::VectorXd a = flat, b = flat;
    a(i) += 1e-5;
    b(i) -= 1e-5;
    const double fd = (loss_and_gradient(batch, p.unflatten(a), cfg).value - loss_and_gradient(batch, p.unflatten(b), cfg).value) / 2e-5;
    worst = std::max(worst, check::rel_error(grad(i), fd));
  }
  EXPECT_LT(worst, 1e-4);
}
