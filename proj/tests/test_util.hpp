#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "dualdimer/objective.hpp"

namespace testutil {

  using dualdimer::Matrix;
  using dualdimer::Vector;

  inline Vector central_gradient(std::function<double(Vector const&)> const& f, Vector const& x, double h) {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Vector a = x, b = x;
      a[i] += h;
      b[i] -= h;
      g[i] = (f(a) - f(b)) / (2 * h);
    }
    return g;
  }

  inline Matrix central_jacobian(std::function<Vector(Vector const&)> const& f, Vector const& x, double h) {
    Vector const f0 = f(x);
    Matrix j(f0.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Vector a = x, b = x;
      a[i] += h;
      b[i] -= h;
      j.col(i) = (f(a) - f(b)) / (2 * h);
    }
    return j;
  }

  /// |a - b| / max(|a|, |b|, floor), as a vector norm.
  inline double rel_error(Vector const& a, Vector const& b, double floor = 1e-12) {
    return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
  }

  inline Vector uniform_vector(Eigen::Index n, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
    return v;
  }

  inline Matrix random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
    return 0.5 * (a + a.transpose());
  }

  /// E = 0.5 x^T H x + b^T x.
  class QuadraticObjective final : public dualdimer::Objective {
  public:
    QuadraticObjective(Matrix h, Vector b) : m_h(std::move(h)), m_b(std::move(b)) {}
    explicit QuadraticObjective(Matrix h) : m_h(std::move(h)), m_b(Vector::Zero(m_h.rows())) {}

    std::size_t dim() const override { return static_cast<std::size_t>(m_h.rows()); }
    double value_and_grad(Vector const& x, Vector& g) override {
      ++evaluations;
      g = m_h * x + m_b;
      return 0.5 * x.dot(m_h * x) + m_b.dot(x);
    }
    Matrix const& hessian() const { return m_h; }
    long evaluations = 0;

  private:
    Matrix m_h;
    Vector m_b;
  };

}  // namespace testutil
