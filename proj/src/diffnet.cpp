#include "dualdimer/diffnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dualdimer {

  void NetSpec::validate() const {
    if (input_dim == 0) {
      throw std::invalid_argument("NetSpec: input_dim must be positive");
    }
    if (output_dim != 1) {
      throw std::invalid_argument("NetSpec: only scalar outputs are supported");
    }
    for (std::size_t h : hidden_sizes) {
      if (h == 0) {
        throw std::invalid_argument("NetSpec: hidden layer of width 0");
      }
    }
  }

  std::vector<std::size_t> NetSpec::layer_sizes() const {
    std::vector<std::size_t> sizes{input_dim};
    sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
    sizes.push_back(output_dim);
    return sizes;
  }

  NetParams NetParams::zeros(NetSpec const& spec) {
    spec.validate();
    NetParams p;
    p.spec = spec;
    auto const sizes = spec.layer_sizes();
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      auto const fan_in = static_cast<Eigen::Index>(sizes[l]);
      auto const fan_out = static_cast<Eigen::Index>(sizes[l + 1]);
      p.layers.push_back({Matrix::Zero(fan_out, fan_in), Vector::Zero(fan_out)});
    }
    return p;
  }

  std::size_t NetParams::size() const {
    std::size_t n = 0;
    for (auto const& layer : layers) {
      n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
    }
    return n;
  }

  Vector NetParams::flatten() const {
    Vector flat(static_cast<Eigen::Index>(size()));
    Eigen::Index pos = 0;
    for (auto const& layer : layers) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        flat.segment(pos, layer.weights.cols()) = layer.weights.row(r).transpose();
        pos += layer.weights.cols();
      }
      flat.segment(pos, layer.bias.size()) = layer.bias;
      pos += layer.bias.size();
    }
    return flat;
  }

  NetParams NetParams::unflatten(NetSpec const& spec, Vector const& flat) {
    NetParams p = zeros(spec);
    p.assign(flat);
    return p;
  }

  void NetParams::assign(Eigen::Ref<Vector const> const& flat) {
    if (static_cast<std::size_t>(flat.size()) != size()) {
      throw std::invalid_argument("NetParams: flat vector has " + std::to_string(flat.size()) + " entries, expected "
                                  + std::to_string(size()));
    }
    Eigen::Index pos = 0;
    for (auto& layer : layers) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        layer.weights.row(r) = flat.segment(pos, layer.weights.cols()).transpose();
        pos += layer.weights.cols();
      }
      layer.bias = flat.segment(pos, layer.bias.size());
      pos += layer.bias.size();
    }
  }

  NetParams init_params(NetSpec const& spec, std::uint64_t seed) {
    NetParams p = NetParams::zeros(spec);
    std::mt19937_64 rng(seed);
    for (auto& layer : p.layers) {
      double const limit = std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
          layer.weights(r, c) = dist(rng);
        }
      }
    }
    return p;
  }

  ChannelSet ChannelSet::all(std::size_t input_dim) {
    ChannelSet ch;
    for (std::size_t j = 0; j < input_dim; ++j) {
      ch.first.push_back(j);
      ch.second.push_back(j);
    }
    return ch;
  }

  // ----------------------------------------------------------------------------------------------------------------- //

  BundleBatch::BundleBatch(NetSpec const& spec, Matrix inputs, ChannelSet channels)
      : m_spec(spec), m_inputs(std::move(inputs)), m_channels(std::move(channels)) {
    spec.validate();
    if (static_cast<std::size_t>(m_inputs.rows()) != spec.input_dim) {
      throw std::invalid_argument("BundleBatch: inputs have " + std::to_string(m_inputs.rows()) + " rows, network expects "
                                  + std::to_string(spec.input_dim));
    }
    for (std::size_t j : m_channels.first) {
      if (j >= spec.input_dim) {
        throw std::invalid_argument("BundleBatch: derivative channel out of range");
      }
    }
    for (std::size_t j : m_channels.second) {
      auto it = std::find(m_channels.first.begin(), m_channels.first.end(), j);
      if (it == m_channels.first.end()) {
        throw std::invalid_argument("BundleBatch: second-derivative channel without matching first-derivative channel");
      }
      m_second_to_first.push_back(it - m_channels.first.begin());
    }
  }

  void BundleBatch::forward(NetParams const& params) {
    if (!(params.spec == m_spec)) {
      throw std::invalid_argument("BundleBatch: parameters do not match the batch's network spec");
    }
    Eigen::Index const n = points();
    Eigen::Index const nc = channel_count();
    auto const nf = static_cast<Eigen::Index>(m_channels.first.size());
    auto const ns = static_cast<Eigen::Index>(m_channels.second.size());
    std::size_t const n_layers = params.layers.size();

    m_pre.resize(n_layers - 1);
    m_post.resize(n_layers - 1);

    for (std::size_t l = 0; l < n_layers; ++l) {
      auto const& w = params.layers[l].weights;
      auto const& b = params.layers[l].bias;

      Matrix a(w.rows(), n * nc);
      if (l == 0) {
        a.leftCols(n).noalias() = w * m_inputs;
        for (Eigen::Index k = 0; k < nf; ++k) {
          a.middleCols((1 + k) * n, n) = w.col(static_cast<Eigen::Index>(m_channels.first[k])).replicate(1, n);
        }
        a.rightCols(ns * n).setZero();
      } else {
        a.noalias() = w * m_post[l - 1];
      }
      a.leftCols(n).colwise() += b;

      if (l + 1 == n_layers) {
        m_out = std::move(a);
        break;
      }

      Matrix h(a.rows(), a.cols());
      auto t = h.leftCols(n).array();
      t = a.leftCols(n).array().tanh();
      Eigen::ArrayXXd const s1 = 1 - t.square();
      Eigen::ArrayXXd const s2 = -2 * t * s1;
      for (Eigen::Index k = 0; k < nf; ++k) {
        h.middleCols((1 + k) * n, n).array() = s1 * a.middleCols((1 + k) * n, n).array();
      }
      for (Eigen::Index s = 0; s < ns; ++s) {
        auto const da = a.middleCols((1 + m_second_to_first[s]) * n, n).array();
        h.middleCols((1 + nf + s) * n, n).array() = s2 * da.square() + s1 * a.middleCols((1 + nf + s) * n, n).array();
      }
      m_pre[l] = std::move(a);
      m_post[l] = std::move(h);
    }
  }

  void BundleBatch::backward(NetParams const& params,
                             Eigen::Ref<Eigen::RowVectorXd const> const& cot,
                             NetParams& grad) const {
    Eigen::Index const n = points();
    auto const nf = static_cast<Eigen::Index>(m_channels.first.size());
    auto const ns = static_cast<Eigen::Index>(m_channels.second.size());
    if (cot.size() != cotangent_size()) {
      throw std::invalid_argument("BundleBatch::backward: cotangent has the wrong length");
    }
    if (grad.layers.size() != params.layers.size()) {
      grad = NetParams::zeros(params.spec);
    }

    Matrix abar = cot;
    for (std::size_t l = params.layers.size(); l-- > 0;) {
      auto& g = grad.layers[l];
      if (l == 0) {
        g.weights.noalias() += abar.leftCols(n) * m_inputs.transpose();
        for (Eigen::Index k = 0; k < nf; ++k) {
          g.weights.col(static_cast<Eigen::Index>(m_channels.first[k])) += abar.middleCols((1 + k) * n, n).rowwise().sum();
        }
      } else {
        g.weights.noalias() += abar * m_post[l - 1].transpose();
      }
      g.bias += abar.leftCols(n).rowwise().sum();

      if (l == 0) {
        break;
      }

      Matrix const hbar = params.layers[l].weights.transpose() * abar;
      Matrix const& a = m_pre[l - 1];
      Eigen::ArrayXXd const t = m_post[l - 1].leftCols(n).array();
      Eigen::ArrayXXd const s1 = 1 - t.square();
      Eigen::ArrayXXd const s2 = -2 * t * s1;
      Eigen::ArrayXXd const s3 = s1 * (6 * t.square() - 2);

      Matrix next(hbar.rows(), hbar.cols());
      Eigen::ArrayXXd val = hbar.leftCols(n).array() * s1;
      for (Eigen::Index k = 0; k < nf; ++k) {
        auto const hk = hbar.middleCols((1 + k) * n, n).array();
        next.middleCols((1 + k) * n, n).array() = hk * s1;
        val += hk * s2 * a.middleCols((1 + k) * n, n).array();
      }
      for (Eigen::Index s = 0; s < ns; ++s) {
        Eigen::Index const k = m_second_to_first[s];
        auto const hs = hbar.middleCols((1 + nf + s) * n, n).array();
        auto const da = a.middleCols((1 + k) * n, n).array();
        next.middleCols((1 + nf + s) * n, n).array() = hs * s1;
        next.middleCols((1 + k) * n, n).array() += 2 * hs * s2 * da;
        val += hs * (s3 * da.square() + s2 * a.middleCols((1 + nf + s) * n, n).array());
      }
      next.leftCols(n) = val.matrix();
      abar = std::move(next);
    }
  }

  // ----------------------------------------------------------------------------------------------------------------- //

  namespace {
    Matrix column_input(NetSpec const& spec, std::span<double const> input) {
      if (input.size() != spec.input_dim) {
        throw std::invalid_argument("network input has " + std::to_string(input.size()) + " entries, expected "
                                    + std::to_string(spec.input_dim));
      }
      Matrix x(static_cast<Eigen::Index>(input.size()), 1);
      for (std::size_t j = 0; j < input.size(); ++j) {
        x(static_cast<Eigen::Index>(j), 0) = input[j];
      }
      return x;
    }
  }  // namespace

  double forward(NetParams const& params, std::span<double const> input) {
    BundleBatch batch(params.spec, column_input(params.spec, input), {});
    batch.forward(params);
    return batch.u()[0];
  }

  OutputBundle forward_bundle(NetParams const& params, std::span<double const> input) {
    auto const d = static_cast<Eigen::Index>(params.spec.input_dim);
    BundleBatch batch(params.spec, column_input(params.spec, input), ChannelSet::all(params.spec.input_dim));
    batch.forward(params);
    OutputBundle out;
    out.u = batch.u()[0];
    out.du.resize(d);
    out.d2u_diag.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      out.du[j] = batch.du(static_cast<std::size_t>(j))[0];
      out.d2u_diag[j] = batch.d2u(static_cast<std::size_t>(j))[0];
    }
    return out;
  }

  NetParams backprop_bundle(NetParams const& params, std::span<double const> input, BundleCotangent const& cot) {
    auto const d = static_cast<Eigen::Index>(params.spec.input_dim);
    if (cot.du.size() != d || cot.d2u_diag.size() != d) {
      throw std::invalid_argument("backprop_bundle: cotangent dimensions do not match the network input");
    }
    BundleBatch batch(params.spec, column_input(params.spec, input), ChannelSet::all(params.spec.input_dim));
    batch.forward(params);
    Eigen::RowVectorXd row(batch.cotangent_size());
    row[0] = cot.u;
    row.segment(1, d) = cot.du.transpose();
    row.segment(1 + d, d) = cot.d2u_diag.transpose();
    NetParams grad = NetParams::zeros(params.spec);
    batch.backward(params, row, grad);
    return grad;
  }

  // ----------------------------------------------------------------------------------------------------------------- //

  nlohmann::json spec_to_json(NetSpec const& spec) {
    return {{"input_dim", spec.input_dim}, {"hidden_sizes", spec.hidden_sizes}, {"output_dim", spec.output_dim}};
  }

  NetSpec spec_from_json(nlohmann::json const& j) {
    NetSpec spec;
    spec.input_dim = j.at("input_dim").get<std::size_t>();
    spec.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
    spec.output_dim = j.value("output_dim", std::size_t{1});
    spec.validate();
    return spec;
  }

  nlohmann::json params_to_json(NetParams const& params) {
    Vector const flat = params.flatten();
    return {{"spec", spec_to_json(params.spec)}, {"params", std::vector<double>(flat.begin(), flat.end())}};
  }

  NetParams params_from_json(nlohmann::json const& j) {
    NetSpec const spec = spec_from_json(j.at("spec"));
    auto const values = j.at("params").get<std::vector<double>>();
    return NetParams::unflatten(spec, Eigen::Map<Vector const>(values.data(), static_cast<Eigen::Index>(values.size())));
  }

}  // namespace dualdimer
