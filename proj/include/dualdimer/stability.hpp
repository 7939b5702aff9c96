#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "dualdimer/landscapes.hpp"
#include "dualdimer/objective.hpp"

/**
 * \file stability.hpp
 *
 * @brief Local stability of the Dual-Dimer fixed-point map near a saddle, for problems with an exact Hessian.
 *
 * The fixed-point map is F(theta) = theta + eta (-grad_w E, grad_alpha E) + (-(v_s . grad_w E) v_s / |beta_s|,
 * (v_l . grad_alpha E) v_l / |beta_l|) with the eigenpairs held fixed.
 */

namespace dualdimer {

  using Complex = std::complex<double>;

  /// Open interval (lo, hi) of admissible learning rates.
  struct EtaInterval {
    double lo = 0;
    double hi = 0;

    bool contains(double eta) const { return eta > lo && eta < hi; }
  };

  /// [2(a + ac + bd)]^2 - 4(a^2 + b^2)(c^2 + 2c + d^2) for beta_a = a + bi, beta_b = c + di.
  double eta_discriminant(Complex beta_a, Complex beta_b);

  /**
   * @brief The set of eta > 0 with |1 + eta beta_a + beta_b| < 1, when it is a nonempty open interval.
   *
   * Throws std::invalid_argument when beta_a == 0.
   */
  std::optional<EtaInterval> eta_interval(Complex beta_a, Complex beta_b);

  /// Extreme eigenpairs of the two blocks, with full-length eigenvectors.
  struct ExtremeEigenpairs {
    double beta_s = 0;
    Vector v_s;
    double beta_l = 0;
    Vector v_l;
  };

  /// Exact extreme eigenpairs of the w and alpha diagonal blocks of hessian.
  ExtremeEigenpairs exact_extreme_eigenpairs(Matrix const& hessian, IndexSet const& w_mask, IndexSet const& alpha_mask);

  /// F(theta) for a gradient function, eigenpairs frozen.
  Vector fixed_point_map(std::function<Vector(Vector const&)> const& grad,
                         Vector const& theta,
                         IndexSet const& w_mask,
                         IndexSet const& alpha_mask,
                         double eta,
                         ExtremeEigenpairs const& eig);

  /// The two matrices of dF = I + eta A + B.
  struct JacobianParts {
    Matrix a;
    Matrix b;
  };

  /// Throws std::invalid_argument when beta_s or beta_l is zero.
  JacobianParts jacobian_parts(Matrix const& hessian,
                               IndexSet const& w_mask,
                               IndexSet const& alpha_mask,
                               ExtremeEigenpairs const& eig);

  /// I + eta A + B assembled from the exact Hessian at the saddle.
  Matrix jacobian_F(Matrix const& hessian,
                    IndexSet const& w_mask,
                    IndexSet const& alpha_mask,
                    double eta,
                    ExtremeEigenpairs const& eig);

  /// eta_interval of one (beta_A, beta_B) eigenvalue pair of A and B.
  struct PairBound {
    Complex beta_a;
    Complex beta_b;
    std::optional<EtaInterval> interval;
  };

  struct StabilityReport {
    /// Every eigenvalue of dF has modulus < 1.
    bool admissible = false;
    std::vector<double> moduli;
    double spectral_radius = 0;
    /// Intersection of eta_interval over all (beta_A, beta_B) eigenvalue pairs.
    std::optional<EtaInterval> interval;
    /// Pair that yields the tightest bound (or no interval at all) and its discriminant.
    Complex binding_a;
    Complex binding_b;
    double discriminant = 0;
    /// Every distinct pair of the grid.
    std::vector<PairBound> pairs;
    ExtremeEigenpairs eigenpairs;
  };

  /// Eigenpairs default to the exact extreme eigenpairs of the Hessian blocks.
  StabilityReport verify_local_stability(Matrix const& hessian,
                                         IndexSet const& w_mask,
                                         IndexSet const& alpha_mask,
                                         double eta,
                                         std::optional<ExtremeEigenpairs> const& eig = std::nullopt);

  StabilityReport verify_local_stability(Landscape const& land,
                                         Vector const& theta_star,
                                         double eta,
                                         std::optional<ExtremeEigenpairs> const& eig = std::nullopt);

}  // namespace dualdimer
