#pragma once

#include <cstddef>

#include "dualdimer/objective.hpp"

namespace dualdimer {

  struct AdamConfig {
    double eta = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  /// Moment estimates for one block of coordinates.
  struct AdamState {
    AdamConfig config;
    Vector first_moment;
    Vector second_moment;
    long steps = 0;

    AdamState() = default;
    explicit AdamState(std::size_t n, AdamConfig cfg = {});
  };

  /**
   * @brief One bias-corrected Adam update.
   *
   * Returns the descent step -eta * m_hat / (sqrt(v_hat) + eps), or its negation when ascent is set. The moments are
   * always accumulated from grad itself, so ascent and descent differ only in the sign of the returned step.
   */
  Vector adam_step(AdamState& state, Vector const& grad, bool ascent);

}  // namespace dualdimer
