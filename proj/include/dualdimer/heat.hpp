#pragma once

#include <functional>
#include <vector>

#include "dualdimer/dataset.hpp"
#include "dualdimer/objective.hpp"

/**
 * \file heat.hpp
 *
 * @brief Reference solution of u_t = 0.01 (u_xx + u_yy) on [0,1]^2 with zero-Neumann walls.
 *
 * Crank-Nicolson in time and the 5-point Laplacian in space; the Neumann condition is imposed by mirroring the first
 * interior node into a ghost node. Multiplying each row by its trapezoidal node weight makes the system symmetric
 * positive definite, so one sparse LDL^T factorisation serves every step.
 */

namespace dualdimer {

  inline constexpr double heat_diffusivity = 0.01;

  /// 0.5 [sin(4 pi x) + sin(4 pi y)].
  double heat_initial_condition(double x, double y);

  /**
   * @brief Uniform-grid snapshots of the temperature.
   *
   * values[k][i + n * j] is the temperature at (times[k], i h, j h) with h = 1 / (n - 1).
   */
  struct HeatField {
    std::size_t n = 0;
    std::vector<double> times;
    std::vector<Vector> values;

    double spacing() const { return 1.0 / static_cast<double>(n - 1); }
    double at(std::size_t k, std::size_t i, std::size_t j) const {
      return values[k][static_cast<Eigen::Index>(i + n * j)];
    }
  };

  /// Trapezoid-weighted spatial mean of one snapshot; this is the quantity the scheme conserves exactly.
  double discrete_mean(HeatField const& field, std::size_t k);

  /**
   * @brief Integrate to t = 1 and keep snapshots at every multiple of 0.05.
   *
   * Requires fine_n >= 64, fine_dt <= 1e-3 and 0.05 / fine_dt integral. Throws std::runtime_error if the field
   * becomes non-finite.
   */
  HeatField solve_heat(std::size_t fine_n,
                       double fine_dt,
                       std::function<double(double, double)> const& initial = heat_initial_condition);

  /// The 21 x 6 x 6 lattice (t, x, y, T); rejects grids whose nodes do not contain the lattice.
  Dataset sample_training_data(HeatField const& field, std::size_t lattice_n = 6);

  /// The lattice_n x lattice_n field at t = 1 (676 points for the default).
  Dataset reference_at_t1(HeatField const& field, std::size_t lattice_n = 26);

}  // namespace dualdimer
