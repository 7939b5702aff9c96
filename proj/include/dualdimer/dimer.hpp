#pragma once

#include <optional>
#include <random>

#include "dualdimer/objective.hpp"

/**
 * \file dimer.hpp
 *
 * @brief Gradient-only estimation of the extreme curvature inside a coordinate subspace.
 */

namespace dualdimer {

  enum class CurvatureMode { min, max };

  struct RotationConfig {
    int max_rotations = 10;
    double rot_tol = 1e-3;
  };

  /**
   * @brief A dimer confined to one subspace and its converged curvature.
   *
   * ``axis`` is full length with zeros outside the dimer's mask.
   */
  struct DimerState {
    Vector axis;
    double half_length = 1e-4;
    double curvature = 0;
    CurvatureMode mode = CurvatureMode::min;
    int rotations = 0;
    int gradient_evaluations = 0;
    /// Norm of the rotational residual at the final axis.
    double residual = 0;
  };

  /**
   * @brief Rotate a dimer at theta0 towards the extreme curvature direction of the masked Hessian block.
   *
   * The Hessian-vector product along the axis n is the central difference
   * (grad E(theta0 + dR n) - grad E(theta0 - dR n)) / (2 dR), restricted to the mask. Each rotation moves the axis
   * against (min mode) or along (max mode) the residual r = Hn - C(n) n; the step is chosen by the exact 2x2 Rayleigh-Ritz
   * problem on span{n, r}, which costs one additional Hessian-vector product per rotation. Rotation stops when
   * |r| < rot_tol * max(1, |C|) or after max_rotations.
   *
   * The starting axis is warm_axis projected onto the mask when given (and nonzero there), otherwise a random unit vector
   * in the mask drawn from rng. A gradient difference that is exactly zero returns curvature 0 with the starting axis.
   */
  DimerState estimate_extreme_eigenpair(Objective& obj,
                                        Vector const& theta0,
                                        IndexSet const& mask,
                                        CurvatureMode mode,
                                        double half_length,
                                        RotationConfig const& rot,
                                        std::optional<Vector> const& warm_axis,
                                        std::mt19937_64& rng);

  /// Uniformly random unit vector supported on mask.
  Vector random_unit_in_mask(std::size_t dim, IndexSet const& mask, std::mt19937_64& rng);

}  // namespace dualdimer
