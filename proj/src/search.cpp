#include "dualdimer/search.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace dualdimer {

  std::string to_string(Method m) { return m == Method::dual_dimer ? "dual_dimer" : "gda"; }

  Method method_from_string(std::string const& s) {
    if (s == "dual_dimer") {
      return Method::dual_dimer;
    }
    if (s == "gda") {
      return Method::gda;
    }
    throw std::invalid_argument("unknown search method '" + s + "'");
  }

  std::string to_string(StopOn s) { return s == StopOn::force_norm ? "force_norm" : "energy"; }

  StopOn stop_on_from_string(std::string const& s) {
    if (s == "force_norm" || s == "force") {
      return StopOn::force_norm;
    }
    if (s == "energy") {
      return StopOn::energy;
    }
    throw std::invalid_argument("unknown stop criterion '" + s + "'");
  }

  std::string to_string(SearchStatus s) {
    switch (s) {
      case SearchStatus::converged_force:
        return "converged_force";
      case SearchStatus::converged_energy:
        return "converged_energy";
      case SearchStatus::not_converged:
        return "not_converged";
      case SearchStatus::diverged:
        return "diverged";
    }
    return "unknown";
  }

  void DualDimerConfig::validate() const {
    if (m_freq <= 0 || !(delta > 0) || !(gamma > 0) || !(eta > 0) || !(epsilon > 0) || max_iter <= 0
        || rotation.max_rotations < 0 || !(rotation.rot_tol > 0) || !(half_length > 0)) {
      throw std::invalid_argument("DualDimerConfig: every hyperparameter must be positive");
    }
  }

  namespace {

    Vector clip_norm(Vector v, double gamma) {
      double const norm = v.norm();
      if (norm > gamma) {
        v *= gamma / norm;
      }
      return v;
    }

    void check_states(ThetaVector const& theta, AdamState const& adam_w, AdamState const& adam_alpha) {
      if (static_cast<std::size_t>(adam_w.first_moment.size()) != theta.w_mask.size()
          || static_cast<std::size_t>(adam_alpha.first_moment.size()) != theta.alpha_mask.size()) {
        throw std::invalid_argument("Adam state sizes do not match the theta masks");
      }
    }

  }  // namespace

  StepParts gda_step(Vector const& grad, ThetaVector const& theta, AdamState& adam_w, AdamState& adam_alpha) {
    check_states(theta, adam_w, adam_alpha);
    Eigen::Index const n = grad.size();
    StepParts out;
    out.descent = Vector::Zero(n);
    out.ascent = Vector::Zero(n);
    out.min_aug = Vector::Zero(n);
    out.max_aug = Vector::Zero(n);
    scatter(adam_step(adam_w, gather(grad, theta.w_mask), false), theta.w_mask, out.descent);
    scatter(adam_step(adam_alpha, gather(grad, theta.alpha_mask), true), theta.alpha_mask, out.ascent);
    out.delta = out.descent + out.ascent;
    return out;
  }

  StepParts gda_step(Objective& obj, ThetaVector const& theta, AdamState& adam_w, AdamState& adam_alpha) {
    Vector grad;
    obj.value_and_grad(theta.values, grad);
    return gda_step(grad, theta, adam_w, adam_alpha);
  }

  StepParts dual_dimer_step(Vector const& grad,
                            ThetaVector const& theta,
                            EigenCache const& eig,
                            AdamState& adam_w,
                            AdamState& adam_alpha,
                            DualDimerConfig const& cfg) {
    StepParts out = gda_step(grad, theta, adam_w, adam_alpha);

    if (eig.min_dimer && std::abs(eig.min_dimer->curvature) > cfg.delta) {
      Vector const& v = eig.min_dimer->axis;
      Vector const g_w = masked(grad, theta.w_mask);
      out.min_aug = clip_norm(-(v.dot(g_w) / std::abs(eig.min_dimer->curvature)) * v, cfg.gamma);
      out.delta += out.min_aug;
    }
    if (eig.max_dimer && std::abs(eig.max_dimer->curvature) > cfg.delta) {
      Vector const& v = eig.max_dimer->axis;
      Vector const g_a = masked(grad, theta.alpha_mask);
      out.max_aug = clip_norm((v.dot(g_a) / std::abs(eig.max_dimer->curvature)) * v, cfg.gamma);
      out.delta += out.max_aug;
    }
    return out;
  }

  StepParts dual_dimer_step(Objective& obj,
                            ThetaVector const& theta,
                            EigenCache const& eig,
                            AdamState& adam_w,
                            AdamState& adam_alpha,
                            DualDimerConfig const& cfg) {
    Vector grad;
    obj.value_and_grad(theta.values, grad);
    return dual_dimer_step(grad, theta, eig, adam_w, adam_alpha, cfg);
  }

  void refresh_eigenpairs(Objective& obj,
                          ThetaVector const& theta,
                          EigenCache& eig,
                          DualDimerConfig const& cfg,
                          std::mt19937_64& rng) {
    auto warm = [&cfg](std::optional<DimerState> const& d) -> std::optional<Vector> {
      if (d && cfg.warm_start) {
        return d->axis;
      }
      return std::nullopt;
    };
    if (!theta.w_mask.empty()) {
      eig.min_dimer = estimate_extreme_eigenpair(obj, theta.values, theta.w_mask, CurvatureMode::min, cfg.half_length,
                                                 cfg.rotation, warm(eig.min_dimer), rng);
    }
    if (!theta.alpha_mask.empty()) {
      eig.max_dimer = estimate_extreme_eigenpair(obj, theta.values, theta.alpha_mask, CurvatureMode::max,
                                                 cfg.half_length, cfg.rotation, warm(eig.max_dimer), rng);
    }
  }

  SearchResult run_search(Method method,
                          Objective& obj,
                          ThetaVector const& theta0,
                          DualDimerConfig const& cfg,
                          std::function<void(TraceRecord const&)> const& on_trace) {
    cfg.validate();
    theta0.validate();
    if (obj.dim() != theta0.size()) {
      throw std::invalid_argument("run_search: objective dimension does not match theta");
    }

    auto const start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

    SearchResult res;
    res.theta = theta0;
    std::mt19937_64 rng(cfg.axis_seed);
    AdamConfig const adam_cfg{cfg.eta};
    AdamState adam_w(theta0.w_mask.size(), adam_cfg);
    AdamState adam_alpha(theta0.alpha_mask.size(), adam_cfg);

    Vector grad;
    double energy = obj.value_and_grad(res.theta.values, grad);
    long evals = 1;
    long t = 0;

    while (true) {
      double const fnorm = grad.norm();
      res.final_energy = energy;
      res.final_force_norm = fnorm;
      if (!std::isfinite(energy) || !std::isfinite(fnorm)) {
        res.status = SearchStatus::diverged;
        break;
      }
      if (cfg.stop_on == StopOn::force_norm && fnorm < cfg.epsilon) {
        res.status = SearchStatus::converged_force;
        break;
      }
      if (cfg.stop_on == StopOn::energy && energy < cfg.epsilon) {
        res.status = SearchStatus::converged_energy;
        break;
      }
      if (t >= cfg.max_iter) {
        res.status = SearchStatus::not_converged;
        break;
      }

      StepParts step;
      if (method == Method::dual_dimer) {
        if (t % cfg.m_freq == 0) {
          refresh_eigenpairs(obj, res.theta, res.eigen, cfg, rng);
          evals += (res.eigen.min_dimer ? res.eigen.min_dimer->gradient_evaluations : 0)
                   + (res.eigen.max_dimer ? res.eigen.max_dimer->gradient_evaluations : 0);
        }
        step = dual_dimer_step(grad, res.theta, res.eigen, adam_w, adam_alpha, cfg);
      } else {
        step = gda_step(grad, res.theta, adam_w, adam_alpha);
      }
      res.theta.values += step.delta;
      ++t;

      energy = obj.value_and_grad(res.theta.values, grad);
      ++evals;

      TraceRecord row;
      row.iter = t;
      row.energy = energy;
      row.breakdown = obj.last_breakdown();
      row.force_norm = grad.norm();
      row.beta_s = res.eigen.beta_s();
      row.beta_l = res.eigen.beta_l();
      row.wall_s = elapsed();
      if (on_trace) {
        on_trace(row);
      }
      res.trace.push_back(std::move(row));
    }

    res.iterations = t;
    res.gradient_evaluations = evals;
    return res;
  }

}  // namespace dualdimer
