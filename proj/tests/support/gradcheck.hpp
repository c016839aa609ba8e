#pragma once

// Central-difference gradient checks shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "otmeta/autodiff.hpp"
#include "otmeta/rng.hpp"

namespace otmeta::check {

using Builder = std::function<ad::Var(ad::Tape<double>&, const std::vector<ad::Var>&)>;

struct GradCheck {
  double max_rel = 0.0;
  std::size_t entries = 0;
};

/// |a - b| / max(|a|, |b|, floor); the floor keeps vanishing entries from
/// dividing roundoff by zero.
inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double evaluate(const std::vector<Eigen::MatrixXd>& inputs, const Builder& build) {
  ad::Tape<double> t;
  std::vector<ad::Var> vars;
  for (const auto& m : inputs) vars.push_back(t.leaf(m));
  return t.value(build(t, vars))(0, 0);
}

/// Compares every entry of every input's reverse-mode gradient with a
/// central difference of step h.
inline GradCheck check_gradients(const std::vector<Eigen::MatrixXd>& inputs, const Builder& build, double h = 1e-5) {
  ad::Tape<double> t;
  std::vector<ad::Var> vars;
  for (const auto& m : inputs) vars.push_back(t.leaf(m));
  const ad::Var loss = build(t, vars);
  t.backward(loss);
  GradCheck out;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Eigen::MatrixXd g = t.grad(vars[k]);
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      auto plus = inputs, minus = inputs;
      plus[k](i) += h;
      minus[k](i) -= h;
      const double fd = (evaluate(plus, build) - evaluate(minus, build)) / (2 * h);
      out.max_rel = std::max(out.max_rel, rel_error(g(i), fd));
      ++out.entries;
    }
  }
  return out;
}

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.uniform_real(-scale, scale);
  return m;
}

struct Instance {
  std::vector<Eigen::MatrixXd> inputs;
  Builder build;
};

/// Random instance generators, one per tape primitive. Every output is
/// contracted against a fixed random matrix so all entries carry gradient.
inline std::vector<std::pair<std::string, std::function<Instance(Rng&)>>> primitive_cases() {
  using ad::Tape;
  using ad::Var;
  auto dim = [](Rng& rng) { return static_cast<Eigen::Index>(1 + rng.index(4)); };
  auto contract = [](Tape<double>& t, Var out, const Eigen::MatrixXd& w) { return t.sum(t.mul(out, t.constant(w))); };
  std::vector<std::pair<std::string, std::function<Instance(Rng&)>>> cases;

  auto binary = [&](std::string name, std::function<Var(Tape<double>&, Var, Var)> op) {
    cases.emplace_back(name, [=](Rng& rng) {
      const auto r = dim(rng), c = dim(rng);
      const auto w = random_matrix(rng, r, c);
      return Instance{{random_matrix(rng, r, c), random_matrix(rng, r, c)},
                      [=](Tape<double>& t, const std::vector<Var>& v) { return contract(t, op(t, v[0], v[1]), w); }};
    });
  };
  binary("add", [](Tape<double>& t, Var a, Var b) { return t.add(a, b); });
  binary("sub", [](Tape<double>& t, Var a, Var b) { return t.sub(a, b); });
  binary("mul", [](Tape<double>& t, Var a, Var b) { return t.mul(a, b); });

  auto unary = [&](std::string name, std::function<Var(Tape<double>&, Var)> op, double scale) {
    cases.emplace_back(name, [=](Rng& rng) {
      const auto r = dim(rng), c = dim(rng);
      const auto w = random_matrix(rng, r, c);
      return Instance{{random_matrix(rng, r, c, scale)},
                      [=](Tape<double>& t, const std::vector<Var>& v) { return contract(t, op(t, v[0]), w); }};
    });
  };
  unary("scale", [](Tape<double>& t, Var a) { return t.scale(a, -1.7); }, 1.0);
  unary("sigmoid", [](Tape<double>& t, Var a) { return t.sigmoid(a); }, 3.0);
  unary("tanh", [](Tape<double>& t, Var a) { return t.tanh(a); }, 3.0);

  cases.emplace_back("matmul", [=](Rng& rng) {
    const auto r = dim(rng), k = dim(rng), c = dim(rng);
    const auto w = random_matrix(rng, r, c);
    return Instance{{random_matrix(rng, r, k), random_matrix(rng, k, c)},
                    [=](Tape<double>& t, const std::vector<Var>& v) { return contract(t, t.matmul(v[0], v[1]), w); }};
  });
  cases.emplace_back("matvec", [=](Rng& rng) {
    const auto r = dim(rng), k = dim(rng);
    const auto w = random_matrix(rng, r, 1);
    return Instance{{random_matrix(rng, r, k), random_matrix(rng, k, 1)},
                    [=](Tape<double>& t, const std::vector<Var>& v) { return contract(t, t.matvec(v[0], v[1]), w); }};
  });
  cases.emplace_back("add_bias", [=](Rng& rng) {
    const auto r = dim(rng), c = dim(rng);
    const auto w = random_matrix(rng, r, c);
    return Instance{{random_matrix(rng, r, c), random_matrix(rng, 1, c)},
                    [=](Tape<double>& t, const std::vector<Var>& v) { return contract(t, t.add_bias(v[0], v[1]), w); }};
  });
  cases.emplace_back("concat", [=](Rng& rng) {
    const auto r = dim(rng), a = dim(rng), b = dim(rng);
    const auto w = random_matrix(rng, r, a + b);
    return Instance{{random_matrix(rng, r, a), random_matrix(rng, r, b)},
                    [=](Tape<double>& t, const std::vector<Var>& v) { return contract(t, t.concat(v[0], v[1]), w); }};
  });
  cases.emplace_back("slice_cols", [=](Rng& rng) {
    const auto r = dim(rng), c = dim(rng) + 1;
    const auto start = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(c)));
    const auto width = static_cast<Eigen::Index>(1 + rng.index(static_cast<std::size_t>(c - start)));
    const auto w = random_matrix(rng, r, width);
    return Instance{{random_matrix(rng, r, c)}, [=](Tape<double>& t, const std::vector<Var>& v) {
                      return contract(t, t.slice_cols(v[0], start, width), w);
                    }};
  });
  cases.emplace_back("split", [=](Rng& rng) {
    const auto r = dim(rng), a = dim(rng), b = dim(rng);
    const auto wa = random_matrix(rng, r, a), wb = random_matrix(rng, r, b);
    return Instance{{random_matrix(rng, r, a + b)}, [=](Tape<double>& t, const std::vector<Var>& v) {
                      const auto parts = t.split(v[0], {a, b});
                      return t.add(contract(t, t.tanh(parts[0]), wa), contract(t, parts[1], wb));
                    }};
  });
  cases.emplace_back("gather_rows", [=](Rng& rng) {
    const auto r = dim(rng) + 1, c = dim(rng);
    std::vector<int> rows;
    for (int i = 0; i < 5; ++i) rows.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(r))));
    const auto w = random_matrix(rng, 5, c);
    return Instance{{random_matrix(rng, r, c)}, [=](Tape<double>& t, const std::vector<Var>& v) {
                      return contract(t, t.gather_rows(v[0], rows), w);
                    }};
  });
  cases.emplace_back("select_rows", [=](Rng& rng) {
    const auto r = dim(rng), c = dim(rng);
    std::vector<bool> mask;
    for (Eigen::Index i = 0; i < r; ++i) mask.push_back(rng.index(2) == 1);
    const auto w = random_matrix(rng, r, c);
    return Instance{{random_matrix(rng, r, c), random_matrix(rng, r, c)}, [=](Tape<double>& t, const std::vector<Var>& v) {
                      return contract(t, t.select_rows(mask, v[0], v[1]), w);
                    }};
  });
  cases.emplace_back("sum", [=](Rng& rng) {
    const auto r = dim(rng), c = dim(rng);
    return Instance{{random_matrix(rng, r, c)}, [=](Tape<double>& t, const std::vector<Var>& v) {
                      return t.sum(t.mul(v[0], v[0]));
                    }};
  });
  cases.emplace_back("softmax_cross_entropy", [=](Rng& rng) {
    const auto r = dim(rng), c = dim(rng) + 1;
    std::vector<int> targets;
    std::vector<double> weights;
    for (Eigen::Index i = 0; i < r; ++i) {
      targets.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(c))));
      weights.push_back(rng.index(4) == 0 ? 0.0 : rng.uniform_real(0.1, 1.0));
    }
    return Instance{{random_matrix(rng, r, c, 3.0)}, [=](Tape<double>& t, const std::vector<Var>& v) {
                      return t.softmax_cross_entropy(v[0], targets, weights);
                    }};
  });
  return cases;
}

}  // namespace otmeta::check
