#include "dualdimer/pcnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>

#include "dualdimer/heat.hpp"

namespace dualdimer {

  LossArray softmax_weights(LossArray const& alpha) {
    double const top = *std::max_element(alpha.begin(), alpha.end());
    LossArray out{};
    double total = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      out[i] = std::exp(alpha[i] - top);
      total += out[i];
    }
    for (double& v : out) {
      v /= total;
    }
    return out;
  }

  LossArray adaptive_weights(LossArray const& losses) {
    double total = 0;
    for (double e : losses) {
      if (e < 0) {
        throw std::invalid_argument("adaptive_weights: losses must be nonnegative");
      }
      total += e;
    }
    if (total == 0) {
      return {0.25, 0.25, 0.25, 0.25};
    }
    LossArray out{};
    for (std::size_t i = 0; i < 4; ++i) {
      out[i] = losses[i] / total;
    }
    return out;
  }

  void SamplePlan::validate() const {
    if (data_points.empty() || physics_points.empty() || initial_points.empty() || boundary_points.empty()) {
      throw std::invalid_argument("sample plan: every point set must be nonempty");
    }
  }

  namespace {
    // Index of v on a uniform lattice of n nodes over [0,1], or -1 if v is off-lattice.
    long lattice_index(double v, std::size_t n) {
      double const scaled = v * static_cast<double>(n - 1);
      double const r = std::round(scaled);
      if (std::abs(scaled - r) > 1e-9 || r < 0 || r > static_cast<double>(n - 1)) {
        return -1;
      }
      return static_cast<long>(r);
    }

    double node(std::size_t i, std::size_t n) { return static_cast<double>(i) / static_cast<double>(n - 1); }

    bool on_wall(double v) { return v == 0.0 || v == 1.0; }
  }  // namespace

  SamplePlan build_sample_plan(Dataset const& dataset, PlanGrid const& grid) {
    if (grid.n_space < 3 || grid.n_time < 2 || grid.data_space < 2) {
      throw std::invalid_argument("build_sample_plan: degenerate grid");
    }
    std::size_t const expected = grid.n_time * grid.data_space * grid.data_space;
    if (dataset.size() != expected) {
      throw std::invalid_argument("build_sample_plan: dataset has " + std::to_string(dataset.size()) + " rows, expected "
                                  + std::to_string(expected));
    }
    std::set<std::tuple<long, long, long>> seen;
    for (auto const& r : dataset) {
      long const k = lattice_index(r.t, grid.n_time);
      long const i = lattice_index(r.x, grid.data_space);
      long const j = lattice_index(r.y, grid.data_space);
      if (k < 0 || i < 0 || j < 0 || !seen.insert({k, i, j}).second) {
        throw std::invalid_argument("build_sample_plan: dataset does not match the training lattice");
      }
    }

    SamplePlan plan;
    plan.data_points = dataset;
    std::size_t const n = grid.n_space;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        plan.initial_points.push_back({0.0, node(i, n), node(j, n)});
      }
    }
    for (std::size_t k = 1; k < grid.n_time; ++k) {
      double const t = node(k, grid.n_time);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          bool const xf = (i == 0 || i + 1 == n), yf = (j == 0 || j + 1 == n);
          if (xf || yf) {
            plan.boundary_points.push_back({t, node(i, n), node(j, n), xf, yf});
          } else {
            plan.physics_points.push_back({t, node(i, n), node(j, n)});
          }
        }
      }
    }
    return plan;
  }

  namespace {
    template <typename Rows, typename Emit>
    void write_points(std::filesystem::path const& path, std::string const& header, Rows const& rows, Emit emit) {
      std::ofstream out(path);
      if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
      }
      out.precision(std::numeric_limits<double>::max_digits10);
      out << header << '\n';
      for (auto const& r : rows) {
        emit(out, r);
        out << '\n';
      }
    }

    std::vector<SpaceTimePoint> read_points(std::filesystem::path const& path) {
      std::ifstream in(path);
      if (!in) {
        throw std::runtime_error("cannot open " + path.string());
      }
      std::string line;
      if (!std::getline(in, line) || line.rfind("t,x,y", 0) != 0) {
        throw std::runtime_error(path.string() + ": expected a 't,x,y' header");
      }
      std::vector<SpaceTimePoint> out;
      while (std::getline(in, line)) {
        if (line.empty()) {
          continue;
        }
        std::istringstream ss(line);
        SpaceTimePoint p;
        char c1 = 0, c2 = 0;
        if (!(ss >> p.t >> c1 >> p.x >> c2 >> p.y) || c1 != ',' || c2 != ',') {
          throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
        }
        out.push_back(p);
      }
      return out;
    }
  }  // namespace

  void write_sample_plan(std::filesystem::path const& dir, SamplePlan const& plan) {
    std::filesystem::create_directories(dir);
    write_dataset_csv(dir / "data.csv", plan.data_points);
    auto emit = [](std::ostream& o, auto const& p) { o << p.t << ',' << p.x << ',' << p.y; };
    write_points(dir / "physics.csv", "t,x,y", plan.physics_points, emit);
    write_points(dir / "initial.csv", "t,x,y", plan.initial_points, emit);
    write_points(dir / "boundary.csv", "t,x,y", plan.boundary_points, emit);
  }

  SamplePlan read_sample_plan(std::filesystem::path const& dir) {
    SamplePlan plan;
    plan.data_points = read_dataset_csv(dir / "data.csv");
    plan.physics_points = read_points(dir / "physics.csv");
    plan.initial_points = read_points(dir / "initial.csv");
    for (auto const& p : read_points(dir / "boundary.csv")) {
      BoundaryPoint b{p.t, p.x, p.y, on_wall(p.x), on_wall(p.y)};
      if (!b.x_face && !b.y_face) {
        throw std::runtime_error("boundary.csv: point (" + std::to_string(p.x) + ", " + std::to_string(p.y)
                                 + ") is not on a wall");
      }
      plan.boundary_points.push_back(b);
    }
    plan.validate();
    return plan;
  }

  namespace {
    template <typename Points>
    Matrix stack_inputs(Points const& pts) {
      Matrix m(3, static_cast<Eigen::Index>(pts.size()));
      for (std::size_t k = 0; k < pts.size(); ++k) {
        auto const c = static_cast<Eigen::Index>(k);
        m(0, c) = pts[k].t;
        m(1, c) = pts[k].x;
        m(2, c) = pts[k].y;
      }
      return m;
    }

    SamplePlan const& checked(SamplePlan const& plan) {
      plan.validate();
      return plan;
    }
  }  // namespace

  HeatLossModel::HeatLossModel(NetSpec const& spec, SamplePlan const& plan)
      : m_spec(spec),
        m_nparams(NetParams::zeros(spec).size()),
        m_data(spec, stack_inputs(checked(plan).data_points), ChannelSet{}),
        m_initial(spec, stack_inputs(plan.initial_points), ChannelSet{}),
        m_boundary(spec, stack_inputs(plan.boundary_points), ChannelSet{{1, 2}, {}}),
        m_physics(spec, stack_inputs(plan.physics_points), ChannelSet{{0, 1, 2}, {1, 2}}) {
    if (spec.input_dim != 3) {
      throw std::invalid_argument("heat losses need a network with inputs (t, x, y)");
    }
    auto const nd = static_cast<Eigen::Index>(plan.data_points.size());
    m_targets.resize(nd);
    for (Eigen::Index k = 0; k < nd; ++k) {
      m_targets[k] = plan.data_points[static_cast<std::size_t>(k)].value;
    }
    auto const ni = static_cast<Eigen::Index>(plan.initial_points.size());
    m_initial_targets.resize(ni);
    for (Eigen::Index k = 0; k < ni; ++k) {
      auto const& p = plan.initial_points[static_cast<std::size_t>(k)];
      m_initial_targets[k] = heat_initial_condition(p.x, p.y);
    }
    auto const nb = static_cast<Eigen::Index>(plan.boundary_points.size());
    m_x_face.resize(nb);
    m_y_face.resize(nb);
    for (Eigen::Index k = 0; k < nb; ++k) {
      auto const& p = plan.boundary_points[static_cast<std::size_t>(k)];
      m_x_face[k] = p.x_face ? 1.0 : 0.0;
      m_y_face[k] = p.y_face ? 1.0 : 0.0;
    }
  }

  HeatLosses HeatLossModel::evaluate(NetParams const& params, bool with_grad) {
    if (!(params.spec == m_spec)) {
      throw std::invalid_argument("HeatLossModel::evaluate: parameters do not match the network spec");
    }
    HeatLosses out;
    auto pull_back = [&](BundleBatch const& batch, Eigen::RowVectorXd const& cot, std::size_t which) {
      NetParams g = NetParams::zeros(m_spec);
      batch.backward(params, cot, g);
      out.grads[which] = g.flatten();
    };

    {
      m_data.forward(params);
      Eigen::RowVectorXd const r = m_data.u() - m_targets;
      double const n = static_cast<double>(r.size());
      out.values[loss_data] = r.squaredNorm() / n;
      if (with_grad) {
        pull_back(m_data, (2.0 / n) * r, loss_data);
      }
    }
    {
      m_physics.forward(params);
      Eigen::Index const np = m_physics.points();
      Eigen::RowVectorXd const r = m_physics.du(0) - heat_diffusivity * (m_physics.d2u(0) + m_physics.d2u(1));
      double const n = static_cast<double>(np);
      out.values[loss_physics] = r.squaredNorm() / n;
      if (with_grad) {
        Eigen::RowVectorXd cot = Eigen::RowVectorXd::Zero(m_physics.cotangent_size());
        Eigen::RowVectorXd const s = (2.0 / n) * r;
        cot.segment(np, np) = s;  // dU/dt
        cot.segment(4 * np, np) = -heat_diffusivity * s;
        cot.segment(5 * np, np) = -heat_diffusivity * s;
        pull_back(m_physics, cot, loss_physics);
      }
    }
    {
      m_initial.forward(params);
      Eigen::RowVectorXd const r = m_initial.u() - m_initial_targets;
      double const n = static_cast<double>(r.size());
      out.values[loss_initial] = r.squaredNorm() / n;
      if (with_grad) {
        pull_back(m_initial, (2.0 / n) * r, loss_initial);
      }
    }
    {
      m_boundary.forward(params);
      Eigen::Index const nb = m_boundary.points();
      Eigen::RowVectorXd const ux = m_boundary.du(0).cwiseProduct(m_x_face);
      Eigen::RowVectorXd const uy = m_boundary.du(1).cwiseProduct(m_y_face);
      double const n = static_cast<double>(nb);
      out.values[loss_boundary] = (ux.squaredNorm() + uy.squaredNorm()) / n;
      if (with_grad) {
        Eigen::RowVectorXd cot = Eigen::RowVectorXd::Zero(m_boundary.cotangent_size());
        cot.segment(nb, nb) = (2.0 / n) * ux;
        cot.segment(2 * nb, nb) = (2.0 / n) * uy;
        pull_back(m_boundary, cot, loss_boundary);
      }
    }
    return out;
  }

  NetSpec heat_net_spec() { return NetSpec{3, {30, 20, 30, 20}, 1}; }

  ThetaVector heat_theta(Vector const& w, LossArray const& alpha) {
    auto const p = static_cast<std::size_t>(w.size());
    Vector v(w.size() + 4);
    v.head(w.size()) = w;
    for (std::size_t i = 0; i < 4; ++i) {
      v[static_cast<Eigen::Index>(p + i)] = alpha[i];
    }
    return ThetaVector(std::move(v), index_range(0, p), index_range(p, p + 4));
  }

  MinimaxObjective::MinimaxObjective(NetSpec const& spec, SamplePlan const& plan)
      : m_model(spec, plan), m_params(NetParams::zeros(spec)) {}

  HeatLosses const& MinimaxObjective::losses_at(Eigen::Ref<Vector const> const& w) {
    bool const hit = m_cached_w.size() == w.size()
                     && std::equal(w.data(), w.data() + w.size(), m_cached_w.data(),
                                   [](double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); });
    if (!hit) {
      m_params.assign(w);
      m_cached = m_model.evaluate(m_params, true);
      m_cached_w = w;
      ++m_passes;
    }
    return m_cached;
  }

  double MinimaxObjective::value_and_grad(Vector const& theta, Vector& grad) {
    auto const p = static_cast<Eigen::Index>(m_model.parameter_count());
    if (theta.size() != p + 4) {
      throw std::invalid_argument("MinimaxObjective: theta has the wrong length");
    }
    HeatLosses const& l = losses_at(theta.head(p));
    LossArray alpha{};
    for (std::size_t i = 0; i < 4; ++i) {
      alpha[i] = theta[p + static_cast<Eigen::Index>(i)];
    }
    LossArray const lam = softmax_weights(alpha);
    double e = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      e += lam[i] * l.values[i];
    }
    grad.setZero(p + 4);
    for (std::size_t i = 0; i < 4; ++i) {
      grad.head(p) += lam[i] * l.grads[i];
      grad[p + static_cast<Eigen::Index>(i)] = lam[i] * (l.values[i] - e);
    }
    m_last = LossBreakdown{l.values, lam};
    return e;
  }

  AdaptiveObjective::AdaptiveObjective(NetSpec const& spec, SamplePlan const& plan)
      : m_model(spec, plan), m_params(NetParams::zeros(spec)) {}

  double AdaptiveObjective::value_and_grad(Vector const& theta, Vector& grad) {
    if (static_cast<std::size_t>(theta.size()) != m_model.parameter_count()) {
      throw std::invalid_argument("AdaptiveObjective: theta has the wrong length");
    }
    m_params.assign(theta);
    HeatLosses const l = m_model.evaluate(m_params, true);
    LossArray const lam = adaptive_weights(l.values);
    double e = 0;
    grad.setZero(theta.size());
    for (std::size_t i = 0; i < 4; ++i) {
      e += lam[i] * l.values[i];
      grad += lam[i] * l.grads[i];
    }
    m_last = LossBreakdown{l.values, lam};
    return e;
  }

  Vector predict(NetParams const& params, Dataset const& rows) {
    Matrix in(3, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto const c = static_cast<Eigen::Index>(k);
      in(0, c) = rows[k].t;
      in(1, c) = rows[k].x;
      in(2, c) = rows[k].y;
    }
    BundleBatch batch(params.spec, std::move(in), ChannelSet{});
    batch.forward(params);
    return batch.u().transpose();
  }

  double mean_squared_error(NetParams const& params, Dataset const& rows) {
    if (rows.empty()) {
      throw std::invalid_argument("mean_squared_error: no rows");
    }
    Vector const u = predict(params, rows);
    double acc = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      double const d = u[static_cast<Eigen::Index>(k)] - rows[k].value;
      acc += d * d;
    }
    return acc / static_cast<double>(rows.size());
  }

}  // namespace dualdimer
