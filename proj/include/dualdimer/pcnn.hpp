#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "dualdimer/dataset.hpp"
#include "dualdimer/diffnet.hpp"
#include "dualdimer/objective.hpp"

/**
 * \file pcnn.hpp
 *
 * @brief Physics-constrained losses for the 2D heat problem and the objectives built from them.
 *
 * The network maps (t, x, y) to U. Loss order everywhere is (data, physics, initial, boundary), written T, P, I, S.
 */

namespace dualdimer {

  using LossArray = std::array<double, 4>;

  enum LossIndex : std::size_t { loss_data = 0, loss_physics = 1, loss_initial = 2, loss_boundary = 3 };

  /// exp(alpha_i) / sum_j exp(alpha_j), evaluated after subtracting max(alpha).
  LossArray softmax_weights(LossArray const& alpha);

  /// E_i / sum_j E_j; uniform when every loss is zero.
  LossArray adaptive_weights(LossArray const& losses);

  struct SpaceTimePoint {
    double t = 0;
    double x = 0;
    double y = 0;
  };

  /// A wall node; x_face / y_face mark whether it lies on x in {0,1} and/or y in {0,1}.
  struct BoundaryPoint {
    double t = 0;
    double x = 0;
    double y = 0;
    bool x_face = false;
    bool y_face = false;
  };

  struct SamplePlan {
    Dataset data_points;
    std::vector<SpaceTimePoint> physics_points;
    std::vector<SpaceTimePoint> initial_points;  ///< all at t = 0
    std::vector<BoundaryPoint> boundary_points;

    /// Throws std::invalid_argument if any of the four sets is empty.
    void validate() const;
  };

  /// Collocation lattice: n_space nodes per side on [0,1], n_time levels on [0,1].
  struct PlanGrid {
    std::size_t n_space = 11;
    std::size_t n_time = 21;
    std::size_t data_space = 6;  ///< nodes per side of the training lattice
  };

  /**
   * @brief Collocation points for the heat losses.
   *
   * Physics: interior nodes at every level t > 0. Initial: all nodes at t = 0. Boundary: wall nodes at every level
   * t > 0. With the default grid this gives 1620, 121 and 800 points. The dataset must be exactly the
   * n_time x data_space x data_space lattice.
   */
  SamplePlan build_sample_plan(Dataset const& dataset, PlanGrid const& grid = {});

  /// Writes data.csv, physics.csv, initial.csv and boundary.csv into dir.
  void write_sample_plan(std::filesystem::path const& dir, SamplePlan const& plan);

  /// Reads the files written by write_sample_plan(); wall faces are recovered from the coordinates.
  SamplePlan read_sample_plan(std::filesystem::path const& dir);

  /// The four losses and, when requested, their gradients with respect to the flat network parameters.
  struct HeatLosses {
    LossArray values{};
    std::array<Vector, 4> grads;
  };

  /**
   * @brief Loss evaluator with the sample points pre-batched.
   *
   * Each loss runs on its own point set with only the derivative channels it needs.
   */
  class HeatLossModel {
  public:
    HeatLossModel(NetSpec const& spec, SamplePlan const& plan);

    NetSpec const& spec() const { return m_spec; }
    std::size_t parameter_count() const { return m_nparams; }

    /// Losses at params; fills grads too when with_grad is set.
    HeatLosses evaluate(NetParams const& params, bool with_grad);

  private:
    NetSpec m_spec;
    std::size_t m_nparams;
    BundleBatch m_data;
    BundleBatch m_initial;
    BundleBatch m_boundary;
    BundleBatch m_physics;
    Eigen::RowVectorXd m_targets;
    Eigen::RowVectorXd m_initial_targets;
    Eigen::RowVectorXd m_x_face;
    Eigen::RowVectorXd m_y_face;
  };

  inline HeatLosses assemble_losses(NetParams const& params, SamplePlan const& plan, bool with_grad = true) {
    HeatLossModel model(params.spec, plan);
    return model.evaluate(params, with_grad);
  }

  /// The default network: (t, x, y) -> 30 -> 20 -> 30 -> 20 -> U.
  NetSpec heat_net_spec();

  /// theta = (network parameters, alpha); returns the two masks for nparams network parameters.
  ThetaVector heat_theta(Vector const& w, LossArray const& alpha = {0, 0, 0, 0});

  /**
   * @brief E(w, alpha) = sum_i softmax(alpha)_i E_i(w), to be minimised over w and maximised over alpha.
   *
   * The losses and their gradients are cached for the last w, so moving alpha alone costs no network pass.
   */
  class MinimaxObjective final : public Objective {
  public:
    MinimaxObjective(NetSpec const& spec, SamplePlan const& plan);

    std::size_t dim() const override { return m_model.parameter_count() + 4; }
    double value_and_grad(Vector const& theta, Vector& grad) override;
    std::optional<LossBreakdown> last_breakdown() const override { return m_last; }

    std::size_t network_passes() const { return m_passes; }

  private:
    HeatLosses const& losses_at(Eigen::Ref<Vector const> const& w);

    HeatLossModel m_model;
    NetParams m_params;
    Vector m_cached_w;
    HeatLosses m_cached;
    std::size_t m_passes = 0;
    std::optional<LossBreakdown> m_last;
  };

  /// E(w) = sum_i lambda_i E_i(w) with lambda from adaptive_weights(), held constant when differentiating.
  class AdaptiveObjective final : public Objective {
  public:
    AdaptiveObjective(NetSpec const& spec, SamplePlan const& plan);

    std::size_t dim() const override { return m_model.parameter_count(); }
    double value_and_grad(Vector const& theta, Vector& grad) override;
    std::optional<LossBreakdown> last_breakdown() const override { return m_last; }

  private:
    HeatLossModel m_model;
    NetParams m_params;
    std::optional<LossBreakdown> m_last;
  };

  /// Network prediction at each (t, x, y) of rows.
  Vector predict(NetParams const& params, Dataset const& rows);

  /// Mean squared difference between the network and rows.
  double mean_squared_error(NetParams const& params, Dataset const& rows);

}  // namespace dualdimer
