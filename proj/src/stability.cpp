#include "dualdimer/stability.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dualdimer {

  double eta_discriminant(Complex beta_a, Complex beta_b) {
    double const a = beta_a.real(), b = beta_a.imag(), c = beta_b.real(), d = beta_b.imag();
    double const lin = 2 * (a + a * c + b * d);
    return lin * lin - 4 * (a * a + b * b) * (c * c + 2 * c + d * d);
  }

  // |1 + eta beta_a + beta_b|^2 < 1  <=>  (a^2 + b^2) eta^2 + 2(a + ac + bd) eta + (c^2 + 2c + d^2) < 0.
  std::optional<EtaInterval> eta_interval(Complex beta_a, Complex beta_b) {
    double const a = beta_a.real(), b = beta_a.imag(), c = beta_b.real(), d = beta_b.imag();
    double const quad = a * a + b * b;
    if (quad == 0) {
      throw std::invalid_argument("eta_interval: beta_A = 0 makes the bound undefined");
    }
    double const disc = eta_discriminant(beta_a, beta_b);
    if (!(disc > 0)) {
      return std::nullopt;
    }
    double const lin = 2 * (a + a * c + b * d);
    double const root = std::sqrt(disc);
    double const lo = std::max(0.0, (-lin - root) / (2 * quad));
    double const hi = (-lin + root) / (2 * quad);
    if (!(hi > lo)) {
      return std::nullopt;
    }
    return EtaInterval{lo, hi};
  }

  ExtremeEigenpairs exact_extreme_eigenpairs(Matrix const& hessian, IndexSet const& w_mask, IndexSet const& alpha_mask) {
    auto block = [&](IndexSet const& mask) {
      auto const k = static_cast<Eigen::Index>(mask.size());
      Matrix m(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
          m(i, j) = hessian(static_cast<Eigen::Index>(mask[i]), static_cast<Eigen::Index>(mask[j]));
        }
      }
      return Eigen::SelfAdjointEigenSolver<Matrix>(m);
    };
    ExtremeEigenpairs out;
    out.v_s = Vector::Zero(hessian.rows());
    out.v_l = Vector::Zero(hessian.rows());
    if (!w_mask.empty()) {
      auto const es = block(w_mask);
      out.beta_s = es.eigenvalues()[0];
      scatter(es.eigenvectors().col(0), w_mask, out.v_s);
    }
    if (!alpha_mask.empty()) {
      auto const es = block(alpha_mask);
      Eigen::Index const last = es.eigenvalues().size() - 1;
      out.beta_l = es.eigenvalues()[last];
      scatter(es.eigenvectors().col(last), alpha_mask, out.v_l);
    }
    return out;
  }

  Vector fixed_point_map(std::function<Vector(Vector const&)> const& grad,
                         Vector const& theta,
                         IndexSet const& w_mask,
                         IndexSet const& alpha_mask,
                         double eta,
                         ExtremeEigenpairs const& eig) {
    Vector const g = grad(theta);
    Vector const g_w = masked(g, w_mask);
    Vector const g_a = masked(g, alpha_mask);
    return theta + eta * (g_a - g_w) - (eig.v_s.dot(g_w) / std::abs(eig.beta_s)) * eig.v_s
           + (eig.v_l.dot(g_a) / std::abs(eig.beta_l)) * eig.v_l;
  }

  JacobianParts jacobian_parts(Matrix const& hessian,
                               IndexSet const& w_mask,
                               IndexSet const& alpha_mask,
                               ExtremeEigenpairs const& eig) {
    if (eig.beta_s == 0 || eig.beta_l == 0) {
      throw std::invalid_argument("jacobian_F: beta_s and beta_l must be nonzero");
    }
    if (hessian.rows() != hessian.cols() || eig.v_s.size() != hessian.rows() || eig.v_l.size() != hessian.rows()) {
      throw std::invalid_argument("jacobian_F: dimension mismatch");
    }
    Eigen::Index const n = hessian.rows();
    Vector sign = Vector::Zero(n);
    for (std::size_t i : w_mask) {
      sign[static_cast<Eigen::Index>(i)] = -1;
    }
    for (std::size_t i : alpha_mask) {
      sign[static_cast<Eigen::Index>(i)] = 1;
    }
    JacobianParts parts;
    parts.a = sign.asDiagonal() * hessian;
    parts.b = -(1 / std::abs(eig.beta_s)) * eig.v_s * (eig.v_s.transpose() * hessian)
              + (1 / std::abs(eig.beta_l)) * eig.v_l * (eig.v_l.transpose() * hessian);
    return parts;
  }

  Matrix jacobian_F(Matrix const& hessian,
                    IndexSet const& w_mask,
                    IndexSet const& alpha_mask,
                    double eta,
                    ExtremeEigenpairs const& eig) {
    auto const parts = jacobian_parts(hessian, w_mask, alpha_mask, eig);
    return Matrix::Identity(hessian.rows(), hessian.cols()) + eta * parts.a + parts.b;
  }

  StabilityReport verify_local_stability(Matrix const& hessian,
                                         IndexSet const& w_mask,
                                         IndexSet const& alpha_mask,
                                         double eta,
                                         std::optional<ExtremeEigenpairs> const& eig) {
    StabilityReport rep;
    rep.eigenpairs = eig ? *eig : exact_extreme_eigenpairs(hessian, w_mask, alpha_mask);

    auto const parts = jacobian_parts(hessian, w_mask, alpha_mask, rep.eigenpairs);
    Matrix const jac = Matrix::Identity(hessian.rows(), hessian.cols()) + eta * parts.a + parts.b;

    Eigen::EigenSolver<Matrix> const es_j(jac, false);
    for (auto const& lam : es_j.eigenvalues()) {
      rep.moduli.push_back(std::abs(lam));
      rep.spectral_radius = std::max(rep.spectral_radius, std::abs(lam));
    }
    rep.admissible = rep.spectral_radius < 1;

    Eigen::VectorXcd const eig_a = Eigen::EigenSolver<Matrix>(parts.a, false).eigenvalues();
    Eigen::VectorXcd const eig_b = Eigen::EigenSolver<Matrix>(parts.b, false).eigenvalues();

    EtaInterval bound{0, std::numeric_limits<double>::infinity()};
    bool empty = false;
    double tightest = std::numeric_limits<double>::infinity();
    auto distinct = [](Eigen::VectorXcd const& v) {
      std::vector<Complex> out;
      for (Complex const z : v) {
        if (std::none_of(out.begin(), out.end(), [&](Complex u) { return std::abs(u - z) <= 1e-12 * (1 + std::abs(z)); }))
          out.push_back(z);
      }
      return out;
    };
    for (Complex const ba : distinct(eig_a)) {
      for (Complex const bb : distinct(eig_b)) {
        auto const iv = eta_interval(ba, bb);
        rep.pairs.push_back({ba, bb, iv});
        if (!iv) {
          if (!empty) {
            rep.binding_a = ba;
            rep.binding_b = bb;
            rep.discriminant = eta_discriminant(ba, bb);
          }
          empty = true;
          continue;
        }
        bound.lo = std::max(bound.lo, iv->lo);
        bound.hi = std::min(bound.hi, iv->hi);
        if (!empty && iv->hi < tightest) {
          tightest = iv->hi;
          rep.binding_a = ba;
          rep.binding_b = bb;
          rep.discriminant = eta_discriminant(ba, bb);
        }
      }
    }
    if (!empty && bound.hi > bound.lo) {
      rep.interval = bound;
    }
    return rep;
  }

  StabilityReport verify_local_stability(Landscape const& land,
                                         Vector const& theta_star,
                                         double eta,
                                         std::optional<ExtremeEigenpairs> const& eig) {
    return verify_local_stability(land.hess(theta_star), land.min_mask, land.max_mask, eta, eig);
  }

}  // namespace dualdimer
