#include "dualdimer/heat.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dualdimer {

  namespace {
    constexpr double snapshot_dt = 0.05;
    constexpr std::size_t n_snapshots = 21;

    double node_weight(std::size_t i, std::size_t n) { return (i == 0 || i + 1 == n) ? 0.5 : 1.0; }

    // (W L) where W is the trapezoid weight and L the mirrored-ghost Laplacian, both 2D. Symmetric, negative
    // semi-definite, with rows summing to zero.
    Eigen::SparseMatrix<double> weighted_laplacian(std::size_t n) {
      double const inv_h2 = static_cast<double>((n - 1) * (n - 1));
      auto const nn = static_cast<Eigen::Index>(n * n);
      auto id = [n](std::size_t i, std::size_t j) { return static_cast<int>(i + n * j); };

      // In 1D, w_i (L u)_i couples each node to each neighbour with weight 1/h^2 (the ghost doubling at a wall
      // cancels the half weight). The 2D operator is that stencil along x scaled by w_j, plus the same along y.
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(static_cast<std::size_t>(nn) * 8);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          auto couple = [&](std::size_t i2, std::size_t j2, double w) {
            double const v = w * inv_h2;
            trip.emplace_back(id(i, j), id(i2, j2), v);
            trip.emplace_back(id(i, j), id(i, j), -v);
          };
          double const wx = node_weight(i, n), wy = node_weight(j, n);
          if (i > 0) couple(i - 1, j, wy);
          if (i + 1 < n) couple(i + 1, j, wy);
          if (j > 0) couple(i, j - 1, wx);
          if (j + 1 < n) couple(i, j + 1, wx);
        }
      }
      Eigen::SparseMatrix<double> wl(nn, nn);
      wl.setFromTriplets(trip.begin(), trip.end());
      return wl;
    }
  }  // namespace

  double heat_initial_condition(double x, double y) {
    return 0.5 * (std::sin(4 * std::numbers::pi * x) + std::sin(4 * std::numbers::pi * y));
  }

  double discrete_mean(HeatField const& field, std::size_t k) {
    double num = 0, den = 0;
    for (std::size_t j = 0; j < field.n; ++j) {
      for (std::size_t i = 0; i < field.n; ++i) {
        double const w = node_weight(i, field.n) * node_weight(j, field.n);
        num += w * field.at(k, i, j);
        den += w;
      }
    }
    return num / den;
  }

  HeatField solve_heat(std::size_t fine_n, double fine_dt, std::function<double(double, double)> const& initial) {
    if (fine_n < 64) {
      throw std::invalid_argument("solve_heat: fine_n must be at least 64");
    }
    if (!(fine_dt > 0) || fine_dt > 1e-3) {
      throw std::invalid_argument("solve_heat: fine_dt must lie in (0, 1e-3]");
    }
    double const steps_real = snapshot_dt / fine_dt;
    auto const steps_per_snapshot = static_cast<long>(std::llround(steps_real));
    if (std::abs(steps_real - static_cast<double>(steps_per_snapshot)) > 1e-9 * steps_real) {
      throw std::invalid_argument("solve_heat: 0.05 must be an integer multiple of fine_dt");
    }

    std::size_t const n = fine_n;
    double const h = 1.0 / static_cast<double>(n - 1);
    auto const nn = static_cast<Eigen::Index>(n * n);

    Vector weights(nn);
    Vector u(nn);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        auto const idx = static_cast<Eigen::Index>(i + n * j);
        weights[idx] = node_weight(i, n) * node_weight(j, n);
        u[idx] = initial(static_cast<double>(i) * h, static_cast<double>(j) * h);
      }
    }

    Eigen::SparseMatrix<double> const wl = weighted_laplacian(n);
    double const half = 0.5 * fine_dt * heat_diffusivity;

    Eigen::SparseMatrix<double> w_diag(nn, nn);
    w_diag.reserve(Eigen::VectorXi::Constant(nn, 1));
    for (Eigen::Index i = 0; i < nn; ++i) {
      w_diag.insert(i, i) = weights[i];
    }
    w_diag.makeCompressed();

    Eigen::SparseMatrix<double> const lhs = w_diag - half * wl;
    Eigen::SparseMatrix<double> const rhs = w_diag + half * wl;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(lhs);
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("solve_heat: factorisation failed");
    }

    HeatField field;
    field.n = n;
    field.times.push_back(0.0);
    field.values.push_back(u);
    for (std::size_t k = 1; k < n_snapshots; ++k) {
      for (long s = 0; s < steps_per_snapshot; ++s) {
        u = solver.solve(rhs * u);
      }
      if (!u.allFinite()) {
        throw std::runtime_error("solve_heat: non-finite temperature at snapshot " + std::to_string(k));
      }
      field.times.push_back(static_cast<double>(k) * snapshot_dt);
      field.values.push_back(u);
    }
    return field;
  }

  namespace {
    std::size_t lattice_stride(HeatField const& field, std::size_t lattice_n) {
      if (lattice_n < 2 || (field.n - 1) % (lattice_n - 1) != 0) {
        throw std::invalid_argument("heat field with " + std::to_string(field.n) + " nodes per side does not contain a "
                                    + std::to_string(lattice_n) + "-node lattice");
      }
      return (field.n - 1) / (lattice_n - 1);
    }

    double lattice_coord(std::size_t i, std::size_t lattice_n) {
      return static_cast<double>(i) / static_cast<double>(lattice_n - 1);
    }
  }  // namespace

  Dataset sample_training_data(HeatField const& field, std::size_t lattice_n) {
    std::size_t const stride = lattice_stride(field, lattice_n);
    if (field.times.size() != n_snapshots) {
      throw std::invalid_argument("sample_training_data: expected 21 snapshots");
    }
    Dataset rows;
    for (std::size_t k = 0; k < field.times.size(); ++k) {
      for (std::size_t i = 0; i < lattice_n; ++i) {
        for (std::size_t j = 0; j < lattice_n; ++j) {
          rows.push_back({field.times[k], lattice_coord(i, lattice_n), lattice_coord(j, lattice_n),
                          field.at(k, i * stride, j * stride)});
        }
      }
    }
    return rows;
  }

  Dataset reference_at_t1(HeatField const& field, std::size_t lattice_n) {
    std::size_t const stride = lattice_stride(field, lattice_n);
    std::size_t const last = field.times.size() - 1;
    if (std::abs(field.times[last] - 1.0) > 1e-12) {
      throw std::invalid_argument("reference_at_t1: field does not reach t = 1");
    }
    Dataset rows;
    for (std::size_t i = 0; i < lattice_n; ++i) {
      for (std::size_t j = 0; j < lattice_n; ++j) {
        rows.push_back({1.0, lattice_coord(i, lattice_n), lattice_coord(j, lattice_n), field.at(last, i * stride, j * stride)});
      }
    }
    return rows;
  }

}  // namespace dualdimer
