#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dualdimer/adam.hpp"
#include "dualdimer/dimer.hpp"
#include "dualdimer/objective.hpp"

/**
 * \file search.hpp
 *
 * @brief Dual-Dimer and gradient descent ascent searches for min-max saddle points.
 */

namespace dualdimer {

  enum class Method { dual_dimer, gda };

  enum class StopOn { force_norm, energy };

  std::string to_string(Method m);
  Method method_from_string(std::string const& s);
  std::string to_string(StopOn s);
  StopOn stop_on_from_string(std::string const& s);

  struct DualDimerConfig {
    /// Eigenpairs are refreshed whenever iter % m_freq == 0.
    int m_freq = 40;
    /// Augmented sub-steps are skipped when |beta| <= delta.
    double delta = 1e-3;
    /// Maximum norm of each augmented sub-step.
    double gamma = 0.1;
    /// Adam learning rate of the descent/ascent sub-steps.
    double eta = 5e-4;
    double epsilon = 1e-4;
    StopOn stop_on = StopOn::force_norm;
    long max_iter = 200000;
    RotationConfig rotation;
    /// Dimer half-length dR.
    double half_length = 1e-4;
    /// Seeds the random initial dimer axes.
    std::uint64_t axis_seed = 0;
    /// Refreshes start from the previous axes; otherwise every refresh draws a fresh random axis.
    bool warm_start = true;

    void validate() const;
  };

  /// Current estimates of the extreme eigenpairs of the w block (min) and the alpha block (max).
  struct EigenCache {
    std::optional<DimerState> min_dimer;
    std::optional<DimerState> max_dimer;

    double beta_s() const { return min_dimer ? min_dimer->curvature : std::numeric_limits<double>::quiet_NaN(); }
    double beta_l() const { return max_dimer ? max_dimer->curvature : std::numeric_limits<double>::quiet_NaN(); }
  };

  struct TraceRecord {
    long iter = 0;
    double energy = 0;
    std::optional<LossBreakdown> breakdown;
    double force_norm = 0;
    double beta_s = std::numeric_limits<double>::quiet_NaN();
    double beta_l = std::numeric_limits<double>::quiet_NaN();
    double wall_s = 0;
  };

  /// Sub-steps of one update; delta is their sum.
  struct StepParts {
    Vector delta;
    Vector descent;
    Vector ascent;
    Vector min_aug;
    Vector max_aug;
  };

  /// Descent on the w block and ascent on the alpha block, both through Adam.
  StepParts gda_step(Vector const& grad, ThetaVector const& theta, AdamState& adam_w, AdamState& adam_alpha);

  /// Evaluates obj at theta and takes a GDA step.
  StepParts gda_step(Objective& obj, ThetaVector const& theta, AdamState& adam_w, AdamState& adam_alpha);

  /**
   * @brief GDA step augmented with eigenvalue-rescaled projections on the two extreme eigenvectors.
   *
   * min_aug = -(v_s . grad_w) v_s / |beta_s| when |beta_s| > delta, max_aug = (v_l . grad_alpha) v_l / |beta_l| when
   * |beta_l| > delta, each rescaled to norm gamma if longer.
   */
  StepParts dual_dimer_step(Vector const& grad,
                            ThetaVector const& theta,
                            EigenCache const& eig,
                            AdamState& adam_w,
                            AdamState& adam_alpha,
                            DualDimerConfig const& cfg);

  StepParts dual_dimer_step(Objective& obj,
                            ThetaVector const& theta,
                            EigenCache const& eig,
                            AdamState& adam_w,
                            AdamState& adam_alpha,
                            DualDimerConfig const& cfg);

  /// Re-rotates both dimers at theta, warm-starting from the axes already in eig.
  void refresh_eigenpairs(Objective& obj,
                          ThetaVector const& theta,
                          EigenCache& eig,
                          DualDimerConfig const& cfg,
                          std::mt19937_64& rng);

  enum class SearchStatus { converged_force, converged_energy, not_converged, diverged };

  std::string to_string(SearchStatus s);

  struct SearchResult {
    ThetaVector theta;
    std::vector<TraceRecord> trace;
    SearchStatus status = SearchStatus::not_converged;
    /// Number of parameter updates performed.
    long iterations = 0;
    double final_energy = 0;
    double final_force_norm = 0;
    EigenCache eigen;
    long gradient_evaluations = 0;

    bool converged() const {
      return status == SearchStatus::converged_force || status == SearchStatus::converged_energy;
    }
  };

  /**
   * @brief Iterate until the stop criterion or max_iter.
   *
   * One trace row is produced per update, describing the iterate after that update, so trace.size() == iterations.
   * on_trace, when set, sees each row as it is produced.
   */
  SearchResult run_search(Method method,
                          Objective& obj,
                          ThetaVector const& theta0,
                          DualDimerConfig const& cfg,
                          std::function<void(TraceRecord const&)> const& on_trace = {});

}  // namespace dualdimer
