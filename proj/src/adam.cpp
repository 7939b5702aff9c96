#include "dualdimer/adam.hpp"

#include <cmath>

namespace dualdimer {

  AdamState::AdamState(std::size_t n, AdamConfig cfg)
      : config(cfg),
        first_moment(Vector::Zero(static_cast<Eigen::Index>(n))),
        second_moment(Vector::Zero(static_cast<Eigen::Index>(n))) {}

  Vector adam_step(AdamState& state, Vector const& grad, bool ascent) {
    if (grad.size() != state.first_moment.size()) {
      throw std::invalid_argument("adam_step: gradient has " + std::to_string(grad.size()) + " entries, state has "
                                  + std::to_string(state.first_moment.size()));
    }
    auto const& c = state.config;
    ++state.steps;
    state.first_moment = c.beta1 * state.first_moment + (1 - c.beta1) * grad;
    state.second_moment = c.beta2 * state.second_moment + (1 - c.beta2) * grad.cwiseProduct(grad);

    double const bias1 = 1 - std::pow(c.beta1, static_cast<double>(state.steps));
    double const bias2 = 1 - std::pow(c.beta2, static_cast<double>(state.steps));

    Vector step = -c.eta * (state.first_moment.array() / bias1)
                  / ((state.second_moment.array() / bias2).sqrt() + c.epsilon);
    if (ascent) {
      step = -step;
    }
    return step;
  }

}  // namespace dualdimer
