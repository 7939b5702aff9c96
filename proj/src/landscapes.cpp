#include "dualdimer/landscapes.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dualdimer {

  namespace {

    constexpr double pi = std::numbers::pi;

    void check_dim(Vector const& x, std::size_t dim) {
      if (static_cast<std::size_t>(x.size()) != dim) {
        throw std::invalid_argument("landscape: expected " + std::to_string(dim) + " coordinates, got "
                                    + std::to_string(x.size()));
      }
    }

    class LandscapeObjective final : public Objective {
    public:
      explicit LandscapeObjective(Landscape const& land) : m_dim(land.dim), m_eval(land.eval), m_grad(land.grad) {}

      std::size_t dim() const override { return m_dim; }

      double value_and_grad(Vector const& theta, Vector& grad) override {
        grad = m_grad(theta);
        return m_eval(theta);
      }

    private:
      std::size_t m_dim;
      std::function<double(Vector const&)> m_eval;
      std::function<Vector(Vector const&)> m_grad;
    };

  }  // namespace

  Landscape make_rastrigin4() {
    Landscape land;
    land.name = "rastrigin4";
    land.dim = 4;
    land.min_mask = {0, 1};
    land.max_mask = {2, 3};
    land.eval = [](Vector const& x) {
      check_dim(x, 4);
      double e = 0;
      for (double xi : x) {
        e += xi * xi - 10 * std::cos(2 * pi * xi) + 10;
      }
      return e;
    };
    land.grad = [](Vector const& x) {
      check_dim(x, 4);
      return Vector(x.unaryExpr([](double xi) { return 2 * xi + 20 * pi * std::sin(2 * pi * xi); }));
    };
    land.hess = [](Vector const& x) {
      check_dim(x, 4);
      Matrix h = Matrix::Zero(4, 4);
      for (Eigen::Index i = 0; i < 4; ++i) {
        h(i, i) = 2 + 40 * pi * pi * std::cos(2 * pi * x[i]);
      }
      return h;
    };
    return land;
  }

  // E = -20 exp(-0.2 r) - exp(c) + 20 + e, with r = sqrt(mean x^2) and c = mean cos(2 pi x).
  Landscape make_ackley4() {
    Landscape land;
    land.name = "ackley4";
    land.dim = 4;
    land.min_mask = {0, 1};
    land.max_mask = {2, 3};
    land.eval = [](Vector const& x) {
      check_dim(x, 4);
      double const r = std::sqrt(x.squaredNorm() / 4);
      double const c = x.unaryExpr([](double xi) { return std::cos(2 * pi * xi); }).sum() / 4;
      return -20 * std::exp(-0.2 * r) - std::exp(c) + 20 + std::numbers::e;
    };
    land.grad = [](Vector const& x) {
      check_dim(x, 4);
      double const r = std::sqrt(x.squaredNorm() / 4);
      double const c = x.unaryExpr([](double xi) { return std::cos(2 * pi * xi); }).sum() / 4;
      Vector g = (pi / 2) * std::exp(c) * x.unaryExpr([](double xi) { return std::sin(2 * pi * xi); });
      if (r > 0) {
        g += (std::exp(-0.2 * r) / r) * x;
      }
      return g;
    };
    land.hess = [](Vector const& x) {
      check_dim(x, 4);
      double const r = std::sqrt(x.squaredNorm() / 4);
      Vector const s = x.unaryExpr([](double xi) { return std::sin(2 * pi * xi); });
      Vector const co = x.unaryExpr([](double xi) { return std::cos(2 * pi * xi); });
      double const ec = std::exp(co.sum() / 4);

      Matrix h = ec * (pi * pi * Matrix(co.asDiagonal()) - (pi * pi / 4) * s * s.transpose());
      if (r > 0) {
        double const er = std::exp(-0.2 * r);
        Matrix const xx = x * x.transpose();
        h += er * (Matrix::Identity(4, 4) / r - xx / (4 * r * r * r) - 0.05 * xx / (r * r));
      }
      return h;
    };
    return land;
  }

  Landscape make_styblinski_tang20() {
    Landscape land;
    land.name = "styblinski20";
    land.dim = 20;
    land.min_mask = index_range(0, 10);
    land.max_mask = index_range(10, 20);
    land.eval = [](Vector const& x) {
      check_dim(x, 20);
      double e = 0;
      for (double xi : x) {
        double const x2 = xi * xi;
        e += x2 * x2 - 16 * x2 + 5 * xi;
      }
      return 0.5 * e;
    };
    land.grad = [](Vector const& x) {
      check_dim(x, 20);
      return Vector(x.unaryExpr([](double xi) { return 2 * xi * xi * xi - 16 * xi + 2.5; }));
    };
    land.hess = [](Vector const& x) {
      check_dim(x, 20);
      return Matrix(x.unaryExpr([](double xi) { return 6 * xi * xi - 16; }).asDiagonal());
    };
    return land;
  }

  Landscape make_landscape(std::string const& name) {
    if (name == "rastrigin4") {
      return make_rastrigin4();
    }
    if (name == "ackley4") {
      return make_ackley4();
    }
    if (name == "styblinski20") {
      return make_styblinski_tang20();
    }
    throw std::invalid_argument("unknown landscape '" + name + "'");
  }

  std::unique_ptr<Objective> as_objective(Landscape const& land) { return std::make_unique<LandscapeObjective>(land); }

}  // namespace dualdimer
