#include "dualdimer/dimer.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dualdimer {

  Vector random_unit_in_mask(std::size_t dim, IndexSet const& mask, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
    while (true) {
      for (std::size_t i : mask) {
        v[static_cast<Eigen::Index>(i)] = normal(rng);
      }
      double const norm = v.norm();
      if (norm > 0) {
        return v / norm;
      }
    }
  }

  namespace {

    // Central-difference Hessian-vector product, gathered to the mask.
    class MaskedCurvature {
    public:
      MaskedCurvature(Objective& obj, Vector const& theta0, IndexSet const& mask, double half_length)
          : m_obj(obj), m_theta0(theta0), m_mask(mask), m_dr(half_length), m_full(Vector::Zero(theta0.size())) {}

      Vector operator()(Vector const& axis_block) {
        scatter(axis_block, m_mask, m_full);
        m_obj.value_and_grad(m_theta0 + m_dr * m_full, m_gp);
        m_obj.value_and_grad(m_theta0 - m_dr * m_full, m_gm);
        evaluations += 2;
        return gather(m_gp - m_gm, m_mask) / (2 * m_dr);
      }

      int evaluations = 0;

    private:
      Objective& m_obj;
      Vector const& m_theta0;
      IndexSet const& m_mask;
      double m_dr;
      Vector m_full;
      Vector m_gp;
      Vector m_gm;
    };

  }  // namespace

  DimerState estimate_extreme_eigenpair(Objective& obj,
                                        Vector const& theta0,
                                        IndexSet const& mask,
                                        CurvatureMode mode,
                                        double half_length,
                                        RotationConfig const& rot,
                                        std::optional<Vector> const& warm_axis,
                                        std::mt19937_64& rng) {
    if (mask.empty()) {
      throw std::invalid_argument("estimate_extreme_eigenpair: empty mask");
    }
    if (!(half_length > 0)) {
      throw std::invalid_argument("estimate_extreme_eigenpair: half_length must be positive");
    }
    for (std::size_t i : mask) {
      if (i >= static_cast<std::size_t>(theta0.size())) {
        throw std::invalid_argument("estimate_extreme_eigenpair: mask index out of range");
      }
    }

    Vector n;
    if (warm_axis && warm_axis->size() == theta0.size()) {
      n = gather(*warm_axis, mask);
    }
    if (n.size() == 0 || !(n.norm() > 0)) {
      n = gather(random_unit_in_mask(static_cast<std::size_t>(theta0.size()), mask, rng), mask);
    }
    n.normalize();

    MaskedCurvature hv(obj, theta0, mask, half_length);
    Vector hn = hv(n);

    DimerState out;
    out.half_length = half_length;
    out.mode = mode;

    auto finish = [&](double curvature, double residual) {
      out.axis = Vector::Zero(theta0.size());
      scatter(n, mask, out.axis);
      out.curvature = curvature;
      out.residual = residual;
      out.gradient_evaluations = hv.evaluations;
      return out;
    };

    if (hn.isZero(0)) {
      return finish(0.0, 0.0);
    }

    double c = n.dot(hn);
    Vector r = hn - c * n;
    double rnorm = r.norm();

    for (int it = 0; it < rot.max_rotations; ++it) {
      if (rnorm < rot.rot_tol * std::max(1.0, std::abs(c))) {
        break;
      }
      Vector theta_dir = r / rnorm;
      theta_dir -= theta_dir.dot(n) * n;
      double const tnorm = theta_dir.norm();
      if (!(tnorm > 0)) {
        break;
      }
      theta_dir /= tnorm;

      Vector const ht = hv(theta_dir);
      double const d = theta_dir.dot(ht);
      double const b = 0.5 * (theta_dir.dot(hn) + n.dot(ht));

      // (cos phi, sin phi) is the eigenvector of [[c, b], [b, d]] with the larger Ritz value.
      double phi = 0.5 * std::atan2(2 * b, c - d);
      if (mode == CurvatureMode::min) {
        phi += std::numbers::pi / 2;
      }
      double const cs = std::cos(phi);
      double const sn = std::sin(phi);

      Vector next = cs * n + sn * theta_dir;
      Vector next_hn = cs * hn + sn * ht;
      double const scale = next.norm();
      n = next / scale;
      hn = next_hn / scale;
      ++out.rotations;

      c = n.dot(hn);
      r = hn - c * n;
      rnorm = r.norm();
    }

    return finish(c, rnorm);
  }

}  // namespace dualdimer
