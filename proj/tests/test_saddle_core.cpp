#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "dualdimer/adam.hpp"
#include "dualdimer/dimer.hpp"
#include "dualdimer/landscapes.hpp"
#include "dualdimer/search.hpp"
#include "test_util.hpp"

using namespace dualdimer;
using testutil::QuadraticObjective;

TEST_CASE("theta masks are validated") {
  CHECK_NOTHROW(ThetaVector(Vector::Zero(3), {0, 1}, {2}));
  CHECK_THROWS_AS(ThetaVector(Vector::Zero(3), {0, 1}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(ThetaVector(Vector::Zero(3), {0}, {2}), std::invalid_argument);
  CHECK_THROWS_AS(ThetaVector(Vector::Zero(3), {0, 1}, {5}), std::invalid_argument);
}

TEST_CASE("adam: zero gradient, first step and a hand-rolled recurrence") {
  AdamConfig cfg;
  AdamState zero(2, cfg);
  CHECK(adam_step(zero, Vector::Zero(2), false).isZero());

  AdamState s(3, cfg);
  Vector g(3);
  g << 2.0, -0.5, 1e-3;
  Vector const step1 = adam_step(s, g, false);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(step1[i] == doctest::Approx(-cfg.eta * g[i] / (std::abs(g[i]) + cfg.epsilon)).epsilon(1e-12));
  }

  // Scalar recurrence for two more constant-gradient steps.
  double m = 0, v = 0, expect = 0;
  for (int t = 1; t <= 3; ++t) {
    m = cfg.beta1 * m + (1 - cfg.beta1) * g[0];
    v = cfg.beta2 * v + (1 - cfg.beta2) * g[0] * g[0];
    double const mh = m / (1 - std::pow(cfg.beta1, t)), vh = v / (1 - std::pow(cfg.beta2, t));
    expect = -cfg.eta * mh / (std::sqrt(vh) + cfg.epsilon);
  }
  adam_step(s, g, false);
  Vector const step3 = adam_step(s, g, true);
  CHECK(step3[0] == doctest::Approx(-expect).epsilon(1e-12));
  CHECK(s.steps == 3);
  CHECK_THROWS_AS(adam_step(s, Vector::Zero(2), false), std::invalid_argument);
}

TEST_CASE("dimer on diag(2, -3)") {
  QuadraticObjective obj(Vector((Vector(2) << 2, -3).finished()).asDiagonal());
  std::mt19937_64 rng(1);
  RotationConfig rot{50, 1e-10};
  DimerState const d = estimate_extreme_eigenpair(obj, Vector::Zero(2), {0, 1}, CurvatureMode::min, 1e-4, rot,
                                                  std::nullopt, rng);
  CHECK(d.curvature == doctest::Approx(-3).epsilon(1e-8));
  CHECK(std::abs(std::abs(d.axis[1]) - 1) < 1e-6);
  CHECK(std::abs(d.axis[0]) < 1e-6);
  CHECK(d.axis.norm() == doctest::Approx(1).epsilon(1e-12));

  DimerState const dm = estimate_extreme_eigenpair(obj, Vector::Zero(2), {0, 1}, CurvatureMode::max, 1e-4, rot,
                                                   std::nullopt, rng);
  CHECK(dm.curvature == doctest::Approx(2).epsilon(1e-8));
}

TEST_CASE("dimer on a one-dimensional mask returns the axis curvature in either mode") {
  Matrix h(3, 3);
  h << 4, 1, 0, 1, -2, 0.5, 0, 0.5, 7;
  QuadraticObjective obj(h);
  std::mt19937_64 rng(2);
  for (auto mode : {CurvatureMode::min, CurvatureMode::max}) {
    DimerState const d = estimate_extreme_eigenpair(obj, Vector::Ones(3), {1}, mode, 1e-4, {}, std::nullopt, rng);
    CHECK(d.curvature == doctest::Approx(-2).epsilon(1e-8));
    CHECK(d.axis[0] == 0.0);
    CHECK(d.axis[2] == 0.0);
  }
}

TEST_CASE("dimer axis stays in its mask and flat directions give zero curvature") {
  std::mt19937_64 rng(3);
  Matrix const h = testutil::random_symmetric(6, rng);
  QuadraticObjective obj(h);
  DimerState const d = estimate_extreme_eigenpair(obj, Vector::Zero(6), {1, 3, 4}, CurvatureMode::min, 1e-4, {},
                                                  std::nullopt, rng);
  for (Eigen::Index i : {0, 2, 5}) CHECK(d.axis[i] == 0.0);
  CHECK(d.axis.norm() == doctest::Approx(1).epsilon(1e-12));

  QuadraticObjective flat(Matrix::Zero(3, 3));
  DimerState const z = estimate_extreme_eigenpair(flat, Vector::Zero(3), {0, 1}, CurvatureMode::min, 1e-4, {},
                                                  std::nullopt, rng);
  CHECK(z.curvature == 0.0);

  CHECK_THROWS_AS(estimate_extreme_eigenpair(obj, Vector::Zero(6), {}, CurvatureMode::min, 1e-4, {}, std::nullopt, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_extreme_eigenpair(obj, Vector::Zero(6), {0}, CurvatureMode::min, 0, {}, std::nullopt, rng),
                  std::invalid_argument);
}

TEST_CASE("warm start from the converged axis needs no further rotation") {
  std::mt19937_64 rng(4);
  Matrix const h = testutil::random_symmetric(8, rng);
  QuadraticObjective obj(h);
  IndexSet const mask = index_range(0, 8);
  DimerState const first = estimate_extreme_eigenpair(obj, Vector::Zero(8), mask, CurvatureMode::max, 1e-4,
                                                      {500, 1e-10}, std::nullopt, rng);
  DimerState const again = estimate_extreme_eigenpair(obj, Vector::Zero(8), mask, CurvatureMode::max, 1e-4,
                                                      {500, 1e-6}, first.axis, rng);
  CHECK(again.rotations == 0);
  CHECK(again.curvature == doctest::Approx(first.curvature).epsilon(1e-10));
}

TEST_CASE("an axis on a non-extreme eigenvector has zero residual and stays put") {
  Matrix h = Matrix::Zero(2, 2);
  h.diagonal() << 2, -3;
  QuadraticObjective obj(h);
  IndexSet const mask = index_range(0, 2);
  std::mt19937_64 rng(6);
  Vector const e0 = Vector::Unit(2, 0);
  DimerState const stuck = estimate_extreme_eigenpair(obj, Vector::Zero(2), mask, CurvatureMode::min, 1e-4, {}, e0, rng);
  CHECK(stuck.curvature == doctest::Approx(2));
  CHECK(stuck.rotations == 0);
  DimerState const cold =
      estimate_extreme_eigenpair(obj, Vector::Zero(2), mask, CurvatureMode::min, 1e-4, {}, std::nullopt, rng);
  CHECK(cold.curvature == doctest::Approx(-3).epsilon(1e-6));
}

TEST_CASE("rastrigin eigenpairs at the reference saddle") {
  Landscape const land = make_rastrigin4();
  auto obj = as_objective(land);
  Vector x(4);
  x << -0.9950, -0.9950, 0.5025, 0.5025;
  std::mt19937_64 rng(5);
  DimerState const s = estimate_extreme_eigenpair(*obj, x, land.min_mask, CurvatureMode::min, 1e-4, {}, std::nullopt, rng);
  DimerState const l = estimate_extreme_eigenpair(*obj, x, land.max_mask, CurvatureMode::max, 1e-4, {}, std::nullopt, rng);
  CHECK(s.curvature == doctest::Approx(396.53).epsilon(0.02));
  CHECK(l.curvature == doctest::Approx(-392.62).epsilon(0.02));
}

namespace {
  ThetaVector split4(Vector v) { return ThetaVector(std::move(v), {0, 1}, {2, 3}); }

  DimerState fake_dimer(Vector axis, double curvature) {
    DimerState d;
    d.axis = std::move(axis);
    d.curvature = curvature;
    return d;
  }
}  // namespace

TEST_CASE("dual-dimer step reduces to gda when both guards trigger") {
  Vector grad(4);
  grad << 0.3, -1.2, 0.8, 0.1;
  ThetaVector const th = split4(Vector::Zero(4));
  DualDimerConfig cfg;
  EigenCache eig;
  eig.min_dimer = fake_dimer((Vector(4) << 1, 0, 0, 0).finished(), 0.5 * cfg.delta);
  eig.max_dimer = fake_dimer((Vector(4) << 0, 0, 0, 1).finished(), -cfg.delta);
  AdamState aw(2), aa(2), bw(2), ba(2);
  for (int k = 0; k < 3; ++k) {
    StepParts const d = dual_dimer_step(grad, th, eig, aw, aa, cfg);
    StepParts const g = gda_step(grad, th, bw, ba);
    CHECK(d.delta == g.delta);
    CHECK(d.min_aug.isZero());
    CHECK(d.max_aug.isZero());
  }
}

TEST_CASE("augmented sub-steps: projection, subspace and clipping") {
  DualDimerConfig cfg;
  ThetaVector const th = split4(Vector::Zero(4));
  EigenCache eig;
  Vector const vs = (Vector(4) << 0.6, 0.8, 0, 0).finished();
  Vector const vl = (Vector(4) << 0, 0, 1, 0).finished();
  eig.min_dimer = fake_dimer(vs, 2.0);
  eig.max_dimer = fake_dimer(vl, -4.0);
  AdamState aw(2), aa(2);

  // grad_w orthogonal to v_s gives no min step.
  Vector grad(4);
  grad << 0.8, -0.6, 0.2, 0.5;
  StepParts const p = dual_dimer_step(grad, th, eig, aw, aa, cfg);
  CHECK(p.min_aug.norm() < 1e-15);
  CHECK(p.max_aug[2] == doctest::Approx(0.2 / 4.0));
  CHECK(p.max_aug[0] == 0.0);
  CHECK(p.max_aug[1] == 0.0);

  // Unclipped length 10 gamma is cut to gamma along the same direction.
  double const proj = 10 * cfg.gamma * 2.0;
  grad << proj * 0.6, proj * 0.8, 0, 0;
  StepParts const q = dual_dimer_step(grad, th, eig, aw, aa, cfg);
  CHECK(q.min_aug.norm() == doctest::Approx(cfg.gamma).epsilon(1e-12));
  CHECK((q.min_aug / q.min_aug.norm() + vs).norm() < 1e-12);
  CHECK(q.min_aug[2] == 0.0);
  CHECK(q.min_aug[3] == 0.0);
}

TEST_CASE("gda: zero gradient and pure minimisation") {
  ThetaVector const th = split4(Vector::Zero(4));
  AdamState aw(2), aa(2);
  CHECK(gda_step(Vector::Zero(4), th, aw, aa).delta.isZero());

  QuadraticObjective obj(Matrix::Identity(3, 3));
  ThetaVector const t0(Vector::Ones(3), index_range(0, 3), {});
  DualDimerConfig cfg;
  cfg.eta = 1e-2;
  cfg.max_iter = 5;
  SearchResult const r = run_search(Method::gda, obj, t0, cfg);
  AdamState ref(3, AdamConfig{1e-2});
  Vector x = Vector::Ones(3);
  for (int k = 0; k < 5; ++k) x += adam_step(ref, x, false);
  CHECK((r.theta.values - x).norm() < 1e-15);
}

TEST_CASE("gda on the bilinear saddle w * a does not converge") {
  class Bilinear final : public Objective {
  public:
    std::size_t dim() const override { return 2; }
    double value_and_grad(Vector const& t, Vector& g) override {
      g.resize(2);
      g << t[1], t[0];
      return t[0] * t[1];
    }
  } obj;
  DualDimerConfig cfg;
  cfg.eta = 1e-2;
  cfg.max_iter = 2000;
  SearchResult const r = run_search(Method::gda, obj, ThetaVector(Vector::Ones(2), {0}, {1}), cfg);
  CHECK(r.status == SearchStatus::not_converged);
  // Adam GDA circles the origin at radius no smaller than the start.
  CHECK(r.theta.values.norm() > 1.0);
}

TEST_CASE("run_search bookkeeping") {
  Landscape const land = make_rastrigin4();
  auto obj = as_objective(land);
  DualDimerConfig cfg;

  SUBCASE("start at a saddle returns at once") {
    SearchResult const r = run_search(Method::dual_dimer, *obj, split4(Vector::Zero(4)), cfg);
    CHECK(r.status == SearchStatus::converged_force);
    CHECK(r.iterations <= 1);
  }
  SUBCASE("max_iter exhaustion is a status, and the trace has one row per update") {
    cfg.max_iter = 25;
    Vector x0(4);
    x0 << 1.3, -0.4, 2.1, 0.2;
    std::vector<long> seen;
    SearchResult const r = run_search(Method::dual_dimer, *obj, split4(x0), cfg,
                                      [&](TraceRecord const& t) { seen.push_back(t.iter); });
    CHECK(r.status == SearchStatus::not_converged);
    CHECK(r.iterations == 25);
    CHECK(r.trace.size() == 25);
    CHECK(seen.size() == 25);
    for (std::size_t k = 0; k < seen.size(); ++k) CHECK(seen[k] == static_cast<long>(k + 1));
    CHECK(std::isfinite(r.trace.back().beta_s));
  }
  SUBCASE("deterministic replay") {
    Vector x0(4);
    x0 << 0.3, 1.4, -2.0, 0.9;
    SearchResult const a = run_search(Method::dual_dimer, *obj, split4(x0), cfg);
    SearchResult const b = run_search(Method::dual_dimer, *obj, split4(x0), cfg);
    CHECK(a.iterations == b.iterations);
    CHECK(a.theta.values == b.theta.values);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t k = 0; k < a.trace.size(); ++k) CHECK(a.trace[k].energy == b.trace[k].energy);
  }
  SUBCASE("energy stopping rule") {
    QuadraticObjective q(Matrix::Identity(2, 2));
    DualDimerConfig c;
    c.stop_on = StopOn::energy;
    c.epsilon = 1e-2;
    c.eta = 1e-2;
    SearchResult const r = run_search(Method::gda, q, ThetaVector(Vector::Ones(2), {0, 1}, {}), c);
    CHECK(r.status == SearchStatus::converged_energy);
    CHECK(r.final_energy < 1e-2);
  }
  SUBCASE("invalid config") {
    cfg.gamma = 0;
    CHECK_THROWS_AS(run_search(Method::gda, *obj, split4(Vector::Zero(4)), cfg), std::invalid_argument);
  }
}

TEST_CASE("rastrigin dual-dimer converges to a second-order saddle") {
  Landscape const land = make_rastrigin4();
  auto obj = as_objective(land);
  Vector x0(4);
  x0 << 1.7, -0.6, 0.4, -2.2;
  SearchResult const r = run_search(Method::dual_dimer, *obj, split4(x0), DualDimerConfig{});
  REQUIRE(r.status == SearchStatus::converged_force);
  CHECK(r.final_force_norm < 1e-4);
  Matrix const h = land.hess(r.theta.values);
  CHECK(h(0, 0) > 0);
  CHECK(h(1, 1) > 0);
  CHECK(h(2, 2) < 0);
  CHECK(h(3, 3) < 0);
}
