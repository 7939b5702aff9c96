#pragma once

#include <functional>
#include <memory>
#include <string>

#include "dualdimer/objective.hpp"

/**
 * \file landscapes.hpp
 *
 * @brief Analytical nonconvex-nonconcave minimax benchmarks with closed-form derivatives.
 */

namespace dualdimer {

  /**
   * @brief A benchmark function with a min/max coordinate split.
   *
   * ``hess`` is exact and exists for verification only; searches receive a landscape through as_objective(), which
   * exposes nothing but value and gradient.
   */
  struct Landscape {
    std::string name;
    std::size_t dim = 0;
    IndexSet min_mask;
    IndexSet max_mask;
    std::function<double(Vector const&)> eval;
    std::function<Vector(Vector const&)> grad;
    std::function<Matrix(Vector const&)> hess;
  };

  /// Sum of x^2 - 10 cos(2 pi x) + 10 over 4 coordinates; min over x1,x2 and max over x3,x4.
  Landscape make_rastrigin4();

  /// 4D Ackley; min over x1,x2 and max over x3,x4. The gradient at the exact origin is defined as 0.
  Landscape make_ackley4();

  /// Half the sum of x^4 - 16x^2 + 5x over 20 coordinates; min over x1..x10 and max over x11..x20.
  Landscape make_styblinski_tang20();

  /// Looks up "rastrigin4", "ackley4" or "styblinski20"; throws std::invalid_argument otherwise.
  Landscape make_landscape(std::string const& name);

  /// Wraps the value and gradient of a landscape behind the Objective contract.
  std::unique_ptr<Objective> as_objective(Landscape const& land);

}  // namespace dualdimer
