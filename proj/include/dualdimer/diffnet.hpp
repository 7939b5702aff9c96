#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualdimer/objective.hpp"

/**
 * \file diffnet.hpp
 *
 * @brief Dense tanh network with exact input derivatives and reverse accumulation to its parameters.
 *
 * Alongside the output U the network propagates, per selected input coordinate j, the first derivative dU/dx_j and the
 * pure second derivative d^2U/dx_j^2. Mixed input derivatives are never formed. Any scalar that is linear in these
 * quantities can then be pulled back to the weights and biases exactly.
 */

namespace dualdimer {

  struct NetSpec {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden_sizes;
    std::size_t output_dim = 1;

    /// Throws std::invalid_argument for zero-width layers or output_dim != 1.
    void validate() const;

    /// input_dim, hidden sizes..., output_dim.
    std::vector<std::size_t> layer_sizes() const;

    bool operator==(NetSpec const&) const = default;
  };

  /// One affine map, weights stored (fan_out x fan_in).
  struct DenseLayer {
    Matrix weights;
    Vector bias;
  };

  /**
   * @brief Weights and biases of a NetSpec.
   *
   * Canonical flattening: layer by layer from the input side, each layer contributing its weight matrix in row-major
   * order followed by its bias vector.
   */
  struct NetParams {
    NetSpec spec;
    std::vector<DenseLayer> layers;

    /// All-zero parameters shaped after spec.
    static NetParams zeros(NetSpec const& spec);

    std::size_t size() const;

    Vector flatten() const;

    /// Inverse of flatten(); throws std::invalid_argument on a length mismatch.
    static NetParams unflatten(NetSpec const& spec, Vector const& flat);

    /// Overwrites every parameter from a flat segment of length size().
    void assign(Eigen::Ref<Vector const> const& flat);
  };

  /// Glorot-uniform weights, zero biases; bit-identical for a fixed (spec, seed).
  NetParams init_params(NetSpec const& spec, std::uint64_t seed);

  double forward(NetParams const& params, std::span<double const> input);

  struct OutputBundle {
    double u = 0;
    Vector du;
    Vector d2u_diag;
  };

  /// Weights on (u, du, d2u_diag) defining the scalar pulled back by backprop_bundle().
  struct BundleCotangent {
    double u = 0;
    Vector du;
    Vector d2u_diag;
  };

  OutputBundle forward_bundle(NetParams const& params, std::span<double const> input);

  /// Gradient of cot.u * u + cot.du . du + cot.d2u_diag . d2u_diag with respect to every parameter.
  NetParams backprop_bundle(NetParams const& params, std::span<double const> input, BundleCotangent const& cot);

  /**
   * @brief Derivative channels to carry through a batch.
   *
   * ``first`` lists the input coordinates whose first derivative is needed, ``second`` those whose pure second
   * derivative is needed. Every entry of ``second`` must also appear in ``first``.
   */
  struct ChannelSet {
    std::vector<std::size_t> first;
    std::vector<std::size_t> second;

    static ChannelSet all(std::size_t input_dim);
  };

  /**
   * @brief Evaluates a fixed set of sample points and their derivative channels in one pass per layer.
   *
   * Per layer all channels of all points are stacked into one matrix so each affine map is a single matrix product.
   * The batch keeps the intermediate activations of the last forward() for the matching backward().
   */
  class BundleBatch {
  public:
    /// inputs is (input_dim x n_points).
    BundleBatch(NetSpec const& spec, Matrix inputs, ChannelSet channels);

    Eigen::Index points() const { return m_inputs.cols(); }

    ChannelSet const& channels() const { return m_channels; }

    void forward(NetParams const& params);

    /// Network output per point.
    auto u() const { return m_out.row(0).head(points()); }

    /// First derivative with respect to input channels().first[k].
    auto du(std::size_t k) const { return m_out.row(0).segment(static_cast<Eigen::Index>(1 + k) * points(), points()); }

    /// Pure second derivative with respect to input channels().second[s].
    auto d2u(std::size_t s) const {
      return m_out.row(0).segment(static_cast<Eigen::Index>(1 + m_channels.first.size() + s) * points(), points());
    }

    /**
     * @brief Pulls a per-point cotangent back to the parameters and adds it to grad.
     *
     * cot is one row of length points() * (1 + first.size() + second.size()) laid out like the outputs: values, then
     * first-derivative channels, then second-derivative channels. Must follow forward() with the same params.
     */
    void backward(NetParams const& params, Eigen::Ref<Eigen::RowVectorXd const> const& cot, NetParams& grad) const;

    /// Length of the cotangent row expected by backward().
    Eigen::Index cotangent_size() const { return points() * channel_count(); }

  private:
    Eigen::Index channel_count() const {
      return static_cast<Eigen::Index>(1 + m_channels.first.size() + m_channels.second.size());
    }

    NetSpec m_spec;
    Matrix m_inputs;
    ChannelSet m_channels;
    std::vector<Eigen::Index> m_second_to_first;

    // Per hidden layer: pre-activations (all channels) and tanh of the value block.
    std::vector<Matrix> m_pre;
    std::vector<Matrix> m_post;
    std::vector<Eigen::ArrayXXd> m_tanh;
    Matrix m_out;
  };

  /// {"spec": {...}, "params": [...]} with parameters in canonical flattening order.
  nlohmann::json params_to_json(NetParams const& params);

  NetParams params_from_json(nlohmann::json const& j);

  nlohmann::json spec_to_json(NetSpec const& spec);

  NetSpec spec_from_json(nlohmann::json const& j);

}  // namespace dualdimer
