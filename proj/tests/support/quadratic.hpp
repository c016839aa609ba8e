#pragma once

// Quadratic objectives with closed-form gradients, Hessians and MAML
// meta-gradients.

#include <memory>

#include "gradcheck.hpp"
#include "otmeta/metalearn.hpp"

namespace otmeta::check {

// L(p) = 1/2 p^T A p + b^T p over a single [n x 1] block.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Eigen::MatrixXd A, Eigen::MatrixXd b, bool exact) : A_(std::move(A)), b_(std::move(b)), exact_(exact) {}
  ad::ValueAndGradient value_and_gradient(const ParameterVector& p) const override {
    const Eigen::MatrixXd& x = p["p"];
    ad::ValueAndGradient out{(0.5 * x.transpose() * A_ * x + b_.transpose() * x)(0, 0), p.zeros_like()};
    out.gradient["p"] = A_ * x + b_;
    return out;
  }
  bool has_exact_hvp() const override { return exact_; }
  ParameterVector hvp(const ParameterVector& p, const ParameterVector& v) const override {
    if (!exact_) return Objective::hvp(p, v);
    ParameterVector out = p.zeros_like();
    out["p"] = A_ * v["p"];
    return out;
  }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& b() const { return b_; }

 private:
  Eigen::MatrixXd A_, b_;
  bool exact_;
};

class QuadraticTask final : public Task {
 public:
  QuadraticTask(Rng& rng, int n, bool exact) {
    auto spd = [&] {
      const Eigen::MatrixXd M = random_matrix(rng, n, n);
      return Eigen::MatrixXd(M * M.transpose() * 0.3 + Eigen::MatrixXd::Identity(n, n) * 0.2);
    };
    train_ = std::make_unique<QuadraticObjective>(spd(), random_matrix(rng, n, 1), exact);
    test_ = std::make_unique<QuadraticObjective>(spd(), random_matrix(rng, n, 1), exact);
  }
  std::size_t num_train_batches() const override { return 1; }
  const Objective& train_batch(std::size_t) const override { return *train_; }
  const Objective& test_objective() const override { return *test_; }
  const QuadraticObjective& train() const { return *train_; }
  const QuadraticObjective& test() const { return *test_; }

 private:
  std::unique_ptr<QuadraticObjective> train_, test_;
};

inline ParameterVector vec(const Eigen::MatrixXd& m) {
  ParameterVector p;
  p.add_block("p", m);
  return p;
}

/// theta_k = (I - lr A) theta_{k-1} - lr b; the meta-gradient is
/// prod_k (I - lr A)^T (A_test theta_K + b_test).
inline Eigen::MatrixXd analytic_meta_gradient(const QuadraticTask& task, const Eigen::MatrixXd& init,
                                              const InnerConfig& inner) {
  const auto n = init.rows();
  const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n, n) - inner.lr * task.train().A();
  Eigen::MatrixXd theta = init;
  for (int k = 0; k < inner.steps; ++k) theta = J * theta - inner.lr * task.train().b();
  Eigen::MatrixXd g = task.test().A() * theta + task.test().b();
  for (int k = 0; k < inner.steps; ++k) g = J.transpose() * g;
  return g;
}

}  // namespace otmeta::check
