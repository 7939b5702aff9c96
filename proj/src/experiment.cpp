#include "dualdimer/experiment.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dualdimer/dataset.hpp"
#include "dualdimer/dimer.hpp"
#include "dualdimer/heat.hpp"
#include "dualdimer/landscapes.hpp"
#include "dualdimer/pcnn.hpp"
#include "dualdimer/stability.hpp"

namespace dualdimer {

  using nlohmann::json;

  std::string to_string(TrainMethod m) {
    switch (m) {
      case TrainMethod::dual_dimer: return "dual_dimer";
      case TrainMethod::gda: return "gda";
      case TrainMethod::adaptive_min: return "adaptive_min";
    }
    return "?";
  }

  TrainMethod train_method_from_string(std::string const& s) {
    if (s == "dual_dimer") return TrainMethod::dual_dimer;
    if (s == "gda") return TrainMethod::gda;
    if (s == "adaptive_min") return TrainMethod::adaptive_min;
    throw std::invalid_argument("unknown method '" + s + "' (expected dual_dimer, gda or adaptive_min)");
  }

  std::vector<std::string> known_problems() {
    return {"rastrigin4", "ackley4", "styblinski20", "heat_pcnn", "identity_quadratic"};
  }

  bool is_landscape_problem(std::string const& name) { return name != "heat_pcnn" && name != ""; }

  namespace {
    bool known_problem(std::string const& name) {
      auto const all = known_problems();
      return std::find(all.begin(), all.end(), name) != all.end();
    }

    // 0.5 |w|^2 - 0.5 |alpha|^2 on R^2 x R^2.
    Landscape identity_quadratic() {
      Landscape l;
      l.name = "identity_quadratic";
      l.dim = 4;
      l.min_mask = {0, 1};
      l.max_mask = {2, 3};
      Vector const sign = (Vector(4) << 1, 1, -1, -1).finished();
      l.eval = [sign](Vector const& x) { return 0.5 * x.dot(sign.cwiseProduct(x)); };
      l.grad = [sign](Vector const& x) -> Vector { return sign.cwiseProduct(x); };
      l.hess = [sign](Vector const&) -> Matrix { return sign.asDiagonal(); };
      return l;
    }

    Landscape problem_landscape(std::string const& name) {
      if (name == "identity_quadratic") {
        return identity_quadratic();
      }
      return make_landscape(name);
    }

    // Known second-order saddles used when "analyze" gets no point.
    std::vector<double> reference_point(std::string const& name) {
      if (name == "rastrigin4") return {-0.9950, -0.9950, 0.5025, 0.5025};
      if (name == "ackley4") return {0.9532, 0.0, -2.6489, 0.5255};
      if (name == "styblinski20") {
        std::vector<double> x(20, 0.1567);
        for (std::size_t i = 0; i < 10; ++i) x[i] = (i % 2 == 0) ? -2.9035 : 2.7468;
        return x;
      }
      if (name == "identity_quadratic") return {0, 0, 0, 0};
      throw std::invalid_argument("no reference point for '" + name + "'");
    }

    Vector uniform_start(std::size_t dim, double box, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(-box, box);
      Vector x(static_cast<Eigen::Index>(dim));
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        x[i] = u(rng);
      }
      return x;
    }

    std::string num(double v) {
      if (!std::isfinite(v)) {
        return "";
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return buf;
    }

    json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

    void write_text(std::filesystem::path const& path, std::string const& text) {
      if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
      }
      std::ofstream out(path, std::ios::binary);
      if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
      }
      out << text;
    }

    void write_trace(std::filesystem::path const& path, std::vector<TraceRecord> const& trace) {
      std::string text = trace_header() + "\n";
      for (auto const& r : trace) {
        text += trace_line(r);
        text += '\n';
      }
      write_text(path, text);
    }

    // Runs fn(seed) for every seed on up to `workers` threads; results keep the seed order.
    template <typename Fn>
    std::vector<RunRecord> run_seeds(std::vector<std::uint64_t> const& seeds, int workers, Fn fn) {
      std::vector<RunRecord> out(seeds.size());
      std::atomic<std::size_t> next{0};
      auto work = [&] {
        for (std::size_t k = next++; k < seeds.size(); k = next++) {
          try {
            out[k] = fn(seeds[k]);
          } catch (std::exception const& e) {
            out[k].seed = seeds[k];
            out[k].error = e.what();
          }
        }
      };
      std::size_t const n = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), seeds.size());
      std::vector<std::thread> pool;
      for (std::size_t i = 1; i < n; ++i) {
        pool.emplace_back(work);
      }
      work();
      for (auto& t : pool) {
        t.join();
      }
      return out;
    }

    // Re-estimates both extreme eigenpairs at the final point. Dual-Dimer runs start from their last axes.
    EigenCache final_eigenpairs(Objective& obj,
                                ThetaVector const& theta,
                                SearchResult const& res,
                                DualDimerConfig const& cfg) {
      std::mt19937_64 rng(cfg.axis_seed);
      EigenCache out;
      auto warm = [](std::optional<DimerState> const& d) -> std::optional<Vector> {
        return d ? std::optional<Vector>(d->axis) : std::nullopt;
      };
      if (!theta.w_mask.empty()) {
        out.min_dimer = estimate_extreme_eigenpair(obj, theta.values, theta.w_mask, CurvatureMode::min, cfg.half_length,
                                                   cfg.rotation, warm(res.eigen.min_dimer), rng);
      }
      if (!theta.alpha_mask.empty()) {
        out.max_dimer = estimate_extreme_eigenpair(obj, theta.values, theta.alpha_mask, CurvatureMode::max,
                                                   cfg.half_length, cfg.rotation, warm(res.eigen.max_dimer), rng);
      }
      return out;
    }

    double seconds_since(std::chrono::steady_clock::time_point t0) {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    int count_negative(Matrix const& h, IndexSet const& mask) {
      auto const k = static_cast<Eigen::Index>(mask.size());
      Matrix block(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
          block(i, j) = h(static_cast<Eigen::Index>(mask[i]), static_cast<Eigen::Index>(mask[j]));
        }
      }
      Vector const ev = Eigen::SelfAdjointEigenSolver<Matrix>(block, Eigen::EigenvaluesOnly).eigenvalues();
      return static_cast<int>((ev.array() < 0).count());
    }

    std::string run_tag(ExperimentConfig const& cfg, std::uint64_t seed) {
      return to_string(cfg.method) + "_" + cfg.problem + "_seed" + std::to_string(seed);
    }

    Method search_method(TrainMethod m) { return m == TrainMethod::dual_dimer ? Method::dual_dimer : Method::gda; }

    void apply_json(ExperimentConfig& cfg, json const& j) {
      if (!j.is_object()) {
        throw std::invalid_argument("config must be a JSON object");
      }
      static std::vector<std::string> const keys = {
          "method", "problem", "seeds", "out_dir", "workers", "m_freq", "delta", "gamma", "eta", "epsilon",
          "half_length", "max_iter", "max_rotations", "rot_tol", "stop_on", "start_box", "data_dir", "fine_n",
          "fine_dt", "checkpoint", "point", "analysis", "axis_seed", "warm_start"};
      for (auto const& [key, _] : j.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
          throw std::invalid_argument("unknown config key '" + key + "'");
        }
      }
      auto& s = cfg.search;
      if (j.contains("method")) cfg.method = train_method_from_string(j["method"].get<std::string>());
      if (j.contains("problem")) cfg.problem = j["problem"].get<std::string>();
      if (j.contains("seeds")) {
        cfg.seeds = j["seeds"].is_string() ? parse_seed_list(j["seeds"].get<std::string>())
                                           : j["seeds"].get<std::vector<std::uint64_t>>();
      }
      if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
      if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
      if (j.contains("m_freq")) s.m_freq = j["m_freq"].get<int>();
      if (j.contains("delta")) s.delta = j["delta"].get<double>();
      if (j.contains("gamma")) s.gamma = j["gamma"].get<double>();
      if (j.contains("eta")) s.eta = j["eta"].get<double>();
      if (j.contains("epsilon")) s.epsilon = j["epsilon"].get<double>();
      if (j.contains("half_length")) s.half_length = j["half_length"].get<double>();
      if (j.contains("max_iter")) s.max_iter = j["max_iter"].get<long>();
      if (j.contains("max_rotations")) s.rotation.max_rotations = j["max_rotations"].get<int>();
      if (j.contains("rot_tol")) s.rotation.rot_tol = j["rot_tol"].get<double>();
      if (j.contains("stop_on")) s.stop_on = stop_on_from_string(j["stop_on"].get<std::string>());
      if (j.contains("axis_seed")) s.axis_seed = j["axis_seed"].get<std::uint64_t>();
      if (j.contains("warm_start")) s.warm_start = j["warm_start"].get<bool>();
      if (j.contains("start_box")) cfg.start_box = j["start_box"].get<double>();
      if (j.contains("data_dir")) cfg.data_dir = j["data_dir"].get<std::string>();
      if (j.contains("fine_n")) cfg.fine_n = j["fine_n"].get<std::size_t>();
      if (j.contains("fine_dt")) cfg.fine_dt = j["fine_dt"].get<double>();
      if (j.contains("checkpoint")) cfg.checkpoint = j["checkpoint"].get<std::string>();
      if (j.contains("point")) cfg.point = j["point"].get<std::vector<double>>();
      if (j.contains("analysis")) cfg.analysis = j["analysis"].get<std::string>();
    }

    std::filesystem::path train_csv(ExperimentConfig const& cfg) { return cfg.resolved_data_dir() / "train.csv"; }
    std::filesystem::path reference_csv(ExperimentConfig const& cfg) {
      return cfg.resolved_data_dir() / "reference_t1.csv";
    }
  }  // namespace

  void ExperimentConfig::validate() const {
    if (!known_problem(problem)) {
      std::string list;
      for (auto const& p : known_problems()) list += (list.empty() ? "" : ", ") + p;
      throw std::invalid_argument("unknown problem '" + problem + "' (expected one of " + list + ")");
    }
    if (problem != "heat_pcnn" && method == TrainMethod::adaptive_min) {
      throw std::invalid_argument("adaptive_min applies to heat_pcnn only");
    }
    if (seeds.empty()) {
      throw std::invalid_argument("seed list is empty");
    }
    if (workers < 1) {
      throw std::invalid_argument("workers must be at least 1");
    }
    if (!(start_box > 0)) {
      throw std::invalid_argument("start_box must be positive");
    }
    if (analysis != "full" && analysis != "eigen") {
      throw std::invalid_argument("analysis must be 'full' or 'eigen'");
    }
    search.validate();
  }

  ExperimentConfig default_config(std::string const& problem) {
    ExperimentConfig cfg;
    cfg.problem = problem;
    if (problem == "heat_pcnn") {
      cfg.search.gamma = 1e-5;
      cfg.search.epsilon = 1e-3;
      cfg.search.stop_on = StopOn::energy;
      for (std::uint64_t k = 0; k < 20; ++k) cfg.seeds.push_back(heat_default_seed_base + k);
    } else {
      // On separable landscapes a warm axis can sit on an exact eigenvector that is no longer extreme; its rotational
      // residual is zero, so it never rotates away.
      cfg.search.warm_start = false;
      for (std::uint64_t k = 0; k < 10; ++k) cfg.seeds.push_back(k);
    }
    return cfg;
  }

  ExperimentConfig make_config(json const& file, json const& overrides) {
    std::string problem = "rastrigin4";
    if (file.is_object() && file.contains("problem")) problem = file["problem"].get<std::string>();
    if (overrides.is_object() && overrides.contains("problem")) problem = overrides["problem"].get<std::string>();
    if (!known_problem(problem)) {
      ExperimentConfig bad;
      bad.problem = problem;
      bad.validate();
    }
    ExperimentConfig cfg = default_config(problem);
    if (!file.is_null()) apply_json(cfg, file);
    if (!overrides.is_null()) apply_json(cfg, overrides);
    cfg.problem = problem;
    cfg.validate();
    return cfg;
  }

  json config_to_json(ExperimentConfig const& cfg) {
    auto const& s = cfg.search;
    json j = {{"method", to_string(cfg.method)},
              {"problem", cfg.problem},
              {"seeds", cfg.seeds},
              {"out_dir", cfg.out_dir.string()},
              {"workers", cfg.workers},
              {"m_freq", s.m_freq},
              {"delta", s.delta},
              {"gamma", s.gamma},
              {"eta", s.eta},
              {"epsilon", s.epsilon},
              {"half_length", s.half_length},
              {"max_iter", s.max_iter},
              {"max_rotations", s.rotation.max_rotations},
              {"rot_tol", s.rotation.rot_tol},
              {"warm_start", s.warm_start},
              {"stop_on", to_string(s.stop_on)},
              {"start_box", cfg.start_box},
              {"data_dir", cfg.resolved_data_dir().string()},
              {"fine_n", cfg.fine_n},
              {"fine_dt", cfg.fine_dt},
              {"analysis", cfg.analysis}};
    return j;
  }

  std::vector<std::uint64_t> parse_seed_list(std::string const& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) {
        continue;
      }
      try {
        auto const dash = item.find('-');
        if (dash == std::string::npos) {
          out.push_back(std::stoull(item));
        } else {
          std::uint64_t const a = std::stoull(item.substr(0, dash)), b = std::stoull(item.substr(dash + 1));
          if (b < a) throw std::invalid_argument("");
          for (std::uint64_t k = a; k <= b; ++k) out.push_back(k);
        }
      } catch (std::exception const&) {
        throw std::invalid_argument("bad seed list entry '" + item + "'");
      }
    }
    if (out.empty()) {
      throw std::invalid_argument("seed list is empty");
    }
    return out;
  }

  Stat aggregate(std::vector<double> const& xs) {
    Stat s;
    s.count = xs.size();
    if (xs.empty()) {
      return s;
    }
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
      double ss = 0;
      for (double x : xs) ss += (x - s.mean) * (x - s.mean);
      s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
  }

  namespace {
    std::optional<double> metric(RunRecord const& r, std::string const& name) {
      if (name == "iterations") return static_cast<double>(r.iterations);
      if (name == "wall_time_s") return r.wall_time_s;
      if (name == "final_E") return r.final_E;
      if (name == "final_force_norm") return r.final_force_norm;
      if (name == "final_beta_s") return std::isfinite(r.final_beta_s) ? std::optional(r.final_beta_s) : std::nullopt;
      if (name == "final_beta_l") return std::isfinite(r.final_beta_l) ? std::optional(r.final_beta_l) : std::nullopt;
      if (name == "mse_t1") return r.mse_t1;
      throw std::invalid_argument("unknown metric '" + name + "'");
    }

    std::vector<std::string> const metric_names = {"iterations",   "wall_time_s",  "final_E", "final_force_norm",
                                                   "final_beta_s", "final_beta_l", "mse_t1"};
  }  // namespace

  Stat RunSummary::stat(std::string const& name) const {
    std::vector<double> xs;
    for (auto const& r : runs) {
      if (!r.error.empty()) continue;
      if (auto v = metric(r, name)) xs.push_back(*v);
    }
    return aggregate(xs);
  }

  double RunSummary::median_iterations() const {
    std::vector<double> xs;
    for (auto const& r : runs) {
      if (r.error.empty()) xs.push_back(static_cast<double>(r.iterations));
    }
    if (xs.empty()) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(xs.begin(), xs.end());
    std::size_t const n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  }

  bool RunSummary::all_converged() const {
    return std::all_of(runs.begin(), runs.end(), [](RunRecord const& r) { return r.error.empty() && r.converged(); });
  }

  json summary_to_json(RunSummary const& s) {
    json runs = json::array();
    for (auto const& r : s.runs) {
      json j = {{"seed", r.seed},
                {"status", to_string(r.status)},
                {"iterations", r.iterations},
                {"wall_time_s", r.wall_time_s},
                {"final_E", finite_or_null(r.final_E)},
                {"final_force_norm", finite_or_null(r.final_force_norm)},
                {"final_beta_s", finite_or_null(r.final_beta_s)},
                {"final_beta_l", finite_or_null(r.final_beta_l)},
                {"trace", r.trace_path.string()}};
      if (r.mse_t1) j["mse_t1"] = *r.mse_t1;
      if (r.saddle_order) {
        j["saddle_order"] = *r.saddle_order;
        j["negative_in_min_block"] = *r.negative_in_min_block;
        j["negative_in_max_block"] = *r.negative_in_max_block;
      }
      if (!r.final_theta.empty() && r.final_theta.size() <= 64) j["final_theta"] = r.final_theta;
      if (!r.checkpoint_path.empty()) j["checkpoint"] = r.checkpoint_path.string();
      if (!r.error.empty()) j["error"] = r.error;
      runs.push_back(std::move(j));
    }
    json agg = json::object();
    for (auto const& name : metric_names) {
      Stat const st = s.stat(name);
      if (st.count > 0) agg[name] = {{"mean", st.mean}, {"std", st.std}, {"count", st.count}};
    }
    agg["median_iterations"] = finite_or_null(s.median_iterations());
    return {{"method", s.method}, {"problem", s.problem}, {"runs", runs}, {"aggregate", agg}};
  }

  std::string trace_header() {
    return "iter,E,E_T,E_P,E_I,E_S,lam_T,lam_P,lam_I,lam_S,force_norm,beta_s,beta_l,wall_s";
  }

  std::string trace_line(TraceRecord const& r) {
    std::string s = std::to_string(r.iter) + "," + num(r.energy);
    for (std::size_t i = 0; i < 4; ++i) s += "," + (r.breakdown ? num(r.breakdown->losses[i]) : "");
    for (std::size_t i = 0; i < 4; ++i) s += "," + (r.breakdown ? num(r.breakdown->weights[i]) : "");
    s += "," + num(r.force_norm) + "," + num(r.beta_s) + "," + num(r.beta_l) + "," + num(r.wall_s);
    return s;
  }

  std::vector<TraceRecord> read_trace_csv(std::filesystem::path const& path) {
    std::ifstream in(path);
    if (!in) {
      throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != trace_header()) {
      throw std::runtime_error(path.string() + ": unexpected trace header");
    }
    double const nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<TraceRecord> out;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) f.push_back(cell);
      while (f.size() < 14) f.emplace_back();
      if (f.size() != 14) {
        throw std::runtime_error(path.string() + ": expected 14 columns");
      }
      auto d = [&](std::size_t k) { return f[k].empty() ? nan : std::stod(f[k]); };
      TraceRecord r;
      r.iter = std::stol(f[0]);
      r.energy = d(1);
      if (!f[2].empty()) {
        LossBreakdown b;
        for (std::size_t i = 0; i < 4; ++i) {
          b.losses[i] = d(2 + i);
          b.weights[i] = d(6 + i);
        }
        r.breakdown = b;
      }
      r.force_norm = d(10);
      r.beta_s = d(11);
      r.beta_l = d(12);
      r.wall_s = d(13);
      out.push_back(r);
    }
    return out;
  }

  RunSummary cmd_bench(ExperimentConfig const& cfg) {
    cfg.validate();
    if (!is_landscape_problem(cfg.problem)) {
      throw std::invalid_argument("bench needs a landscape problem, got '" + cfg.problem + "'");
    }
    std::filesystem::create_directories(cfg.out_dir);

    RunSummary summary;
    summary.method = to_string(cfg.method);
    summary.problem = cfg.problem;
    summary.runs = run_seeds(cfg.seeds, cfg.workers, [&](std::uint64_t seed) {
      Landscape const land = problem_landscape(cfg.problem);
      auto obj = as_objective(land);
      ThetaVector const theta0(uniform_start(land.dim, cfg.start_box, seed), land.min_mask, land.max_mask);
      DualDimerConfig sc = cfg.search;
      sc.axis_seed = seed;

      auto const t0 = std::chrono::steady_clock::now();
      SearchResult const res = run_search(search_method(cfg.method), *obj, theta0, sc);
      EigenCache const eig = final_eigenpairs(*obj, res.theta, res, sc);

      RunRecord r;
      r.seed = seed;
      r.status = res.status;
      r.iterations = res.iterations;
      r.wall_time_s = seconds_since(t0);
      r.final_E = res.final_energy;
      r.final_force_norm = res.final_force_norm;
      r.final_beta_s = eig.beta_s();
      r.final_beta_l = eig.beta_l();
      r.final_theta.assign(res.theta.values.data(), res.theta.values.data() + res.theta.values.size());
      if (res.theta.values.allFinite()) {
        Matrix const h = land.hess(res.theta.values);
        r.negative_in_min_block = count_negative(h, land.min_mask);
        r.negative_in_max_block = count_negative(h, land.max_mask);
        r.saddle_order = count_negative(h, index_range(0, land.dim));
      }
      r.trace_path = cfg.out_dir / ("trace_" + run_tag(cfg, seed) + ".csv");
      write_trace(r.trace_path, res.trace);
      return r;
    });
    write_text(cfg.out_dir / "summary.json", summary_to_json(summary).dump(2) + "\n");
    return summary;
  }

  void cmd_gen_data(ExperimentConfig const& cfg) {
    if ((cfg.fine_n - 1) % 25 != 0) {
      throw std::invalid_argument("fine_n must be 1 more than a multiple of 25 so both sampling lattices are grid nodes");
    }
    HeatField const field = solve_heat(cfg.fine_n, cfg.fine_dt);
    std::filesystem::create_directories(cfg.resolved_data_dir());
    write_dataset_csv(train_csv(cfg), sample_training_data(field));
    write_dataset_csv(reference_csv(cfg), reference_at_t1(field));
  }

  RunSummary cmd_train_pcnn(ExperimentConfig const& cfg) {
    cfg.validate();
    if (cfg.problem != "heat_pcnn") {
      throw std::invalid_argument("train-pcnn needs problem heat_pcnn, got '" + cfg.problem + "'");
    }
    if (!std::filesystem::exists(train_csv(cfg)) || !std::filesystem::exists(reference_csv(cfg))) {
      cmd_gen_data(cfg);
    }
    Dataset const train = read_dataset_csv(train_csv(cfg));
    Dataset const reference = read_dataset_csv(reference_csv(cfg));
    SamplePlan const plan = build_sample_plan(train);
    NetSpec const spec = heat_net_spec();
    std::filesystem::create_directories(cfg.out_dir);

    RunSummary summary;
    summary.method = to_string(cfg.method);
    summary.problem = cfg.problem;
    summary.runs = run_seeds(cfg.seeds, cfg.workers, [&](std::uint64_t seed) {
      Vector const w0 = init_params(spec, seed).flatten();
      auto const p = static_cast<std::size_t>(w0.size());
      std::unique_ptr<Objective> obj;
      ThetaVector theta0;
      if (cfg.method == TrainMethod::adaptive_min) {
        obj = std::make_unique<AdaptiveObjective>(spec, plan);
        theta0 = ThetaVector(w0, index_range(0, p), {});
      } else {
        obj = std::make_unique<MinimaxObjective>(spec, plan);
        theta0 = heat_theta(w0);
      }
      DualDimerConfig sc = cfg.search;
      sc.axis_seed = seed;

      auto const t0 = std::chrono::steady_clock::now();
      SearchResult const res = run_search(search_method(cfg.method), *obj, theta0, sc);
      double const wall = seconds_since(t0);

      RunRecord r;
      r.seed = seed;
      r.status = res.status;
      r.iterations = res.iterations;
      r.wall_time_s = wall;
      r.final_E = res.final_energy;
      r.final_force_norm = res.final_force_norm;
      r.trace_path = cfg.out_dir / ("trace_" + run_tag(cfg, seed) + ".csv");
      write_trace(r.trace_path, res.trace);
      if (res.status == SearchStatus::diverged) {
        r.final_beta_s = r.final_beta_l = std::numeric_limits<double>::quiet_NaN();
        return r;
      }

      EigenCache const eig = final_eigenpairs(*obj, res.theta, res, sc);
      r.final_beta_s = eig.beta_s();
      r.final_beta_l = eig.beta_l();
      NetParams const params = NetParams::unflatten(spec, res.theta.values.head(static_cast<Eigen::Index>(p)));
      r.mse_t1 = mean_squared_error(params, reference);

      json ck = {{"method", to_string(cfg.method)},
                 {"seed", seed},
                 {"status", to_string(res.status)},
                 {"iterations", res.iterations},
                 {"net", params_to_json(params)}};
      if (!res.theta.alpha_mask.empty()) {
        std::vector<double> alpha;
        for (std::size_t i : res.theta.alpha_mask) alpha.push_back(res.theta.values[static_cast<Eigen::Index>(i)]);
        ck["alpha"] = alpha;
      }
      r.checkpoint_path = cfg.out_dir / ("checkpoint_" + run_tag(cfg, seed) + ".json");
      write_text(r.checkpoint_path, ck.dump() + "\n");
      return r;
    });
    write_text(cfg.out_dir / "summary.json", summary_to_json(summary).dump(2) + "\n");
    return summary;
  }

  namespace {
    json complex_json(Complex z) { return {{"re", z.real()}, {"im", z.imag()}}; }

    std::vector<double> landscape_point(ExperimentConfig const& cfg) {
      if (!cfg.point.empty()) {
        return cfg.point;
      }
      if (!cfg.checkpoint.empty()) {
        std::ifstream in(cfg.checkpoint);
        if (!in) throw std::runtime_error("cannot open " + cfg.checkpoint.string());
        json const j = json::parse(in);
        if (j.contains("theta")) return j["theta"].get<std::vector<double>>();
        if (j.contains("runs") && !j["runs"].empty() && j["runs"][0].contains("final_theta")) {
          return j["runs"][0]["final_theta"].get<std::vector<double>>();
        }
        throw std::invalid_argument(cfg.checkpoint.string() + " holds no 'theta' or bench run point");
      }
      return reference_point(cfg.problem);
    }

    json analyze_landscape(ExperimentConfig const& cfg) {
      Landscape const land = problem_landscape(cfg.problem);
      std::vector<double> const pt = landscape_point(cfg);
      if (pt.size() != land.dim) {
        throw std::invalid_argument("point has " + std::to_string(pt.size()) + " coordinates, " + cfg.problem + " needs "
                                    + std::to_string(land.dim));
      }
      Vector const x = Eigen::Map<Vector const>(pt.data(), static_cast<Eigen::Index>(pt.size()));
      auto obj = as_objective(land);
      std::mt19937_64 rng(cfg.search.axis_seed);
      DimerState const dmin = estimate_extreme_eigenpair(*obj, x, land.min_mask, CurvatureMode::min,
                                                         cfg.search.half_length, cfg.search.rotation, std::nullopt, rng);
      DimerState const dmax = estimate_extreme_eigenpair(*obj, x, land.max_mask, CurvatureMode::max,
                                                         cfg.search.half_length, cfg.search.rotation, std::nullopt, rng);
      Matrix const h = land.hess(x);
      ExtremeEigenpairs const exact = exact_extreme_eigenpairs(h, land.min_mask, land.max_mask);

      json out = {{"problem", cfg.problem},
                  {"point", pt},
                  {"gradient_norm", land.grad(x).norm()},
                  {"estimated", {{"beta_s", dmin.curvature}, {"beta_l", dmax.curvature}}},
                  {"exact", {{"beta_s", exact.beta_s}, {"beta_l", exact.beta_l}}},
                  {"saddle_conditions_hold", exact.beta_s > 0 && exact.beta_l < 0},
                  {"saddle_order", count_negative(h, index_range(0, land.dim))}};
      if (cfg.analysis == "eigen") {
        return out;
      }
      StabilityReport const rep = verify_local_stability(h, land.min_mask, land.max_mask, cfg.search.eta, exact);
      json st = {{"eta", cfg.search.eta},
                 {"admissible", rep.admissible},
                 {"spectral_radius", rep.spectral_radius},
                 {"moduli", rep.moduli},
                 {"binding_beta_a", complex_json(rep.binding_a)},
                 {"binding_beta_b", complex_json(rep.binding_b)},
                 {"discriminant", rep.discriminant}};
      auto interval_json = [](std::optional<EtaInterval> const& iv) {
        return iv ? json{{"lo", iv->lo}, {"hi", iv->hi}} : json(nullptr);
      };
      st["interval"] = interval_json(rep.interval);
      json pairs = json::array();
      for (auto const& pb : rep.pairs) {
        pairs.push_back({{"beta_a", complex_json(pb.beta_a)}, {"beta_b", complex_json(pb.beta_b)}, {"interval", interval_json(pb.interval)}});
      }
      st["pairs"] = pairs;
      out["stability"] = st;
      return out;
    }

    json analyze_pcnn(ExperimentConfig const& cfg) {
      if (cfg.analysis != "eigen") {
        throw std::invalid_argument(
            "full Jacobian analysis needs an exact Hessian and is limited to small problems; use the eigen mode for "
            "heat_pcnn");
      }
      if (cfg.checkpoint.empty()) {
        throw std::invalid_argument("heat_pcnn analysis needs a checkpoint");
      }
      std::ifstream in(cfg.checkpoint);
      if (!in) throw std::runtime_error("cannot open " + cfg.checkpoint.string());
      json const ck = json::parse(in);
      NetParams const params = params_from_json(ck.at("net"));
      LossArray alpha{0, 0, 0, 0};
      if (ck.contains("alpha")) {
        auto const a = ck["alpha"].get<std::vector<double>>();
        if (a.size() != 4) throw std::invalid_argument("checkpoint alpha must have 4 entries");
        std::copy(a.begin(), a.end(), alpha.begin());
      }
      if (!std::filesystem::exists(train_csv(cfg))) {
        cmd_gen_data(cfg);
      }
      SamplePlan const plan = build_sample_plan(read_dataset_csv(train_csv(cfg)));
      MinimaxObjective obj(params.spec, plan);
      ThetaVector const theta = heat_theta(params.flatten(), alpha);
      std::mt19937_64 rng(cfg.search.axis_seed);
      DimerState const dmin = estimate_extreme_eigenpair(obj, theta.values, theta.w_mask, CurvatureMode::min,
                                                         cfg.search.half_length, cfg.search.rotation, std::nullopt, rng);
      DimerState const dmax = estimate_extreme_eigenpair(obj, theta.values, theta.alpha_mask, CurvatureMode::max,
                                                         cfg.search.half_length, cfg.search.rotation, std::nullopt, rng);
      Vector g;
      double const e = obj.value_and_grad(theta.values, g);
      return {{"problem", cfg.problem},
              {"checkpoint", cfg.checkpoint.string()},
              {"E", e},
              {"force_norm", g.norm()},
              {"estimated", {{"beta_s", dmin.curvature}, {"beta_l", dmax.curvature}}},
              {"beta_s_positive", dmin.curvature > 0},
              {"beta_l_negative", dmax.curvature < 0}};
    }
  }  // namespace

  json cmd_analyze(ExperimentConfig const& cfg) {
    cfg.validate();
    return is_landscape_problem(cfg.problem) ? analyze_landscape(cfg) : analyze_pcnn(cfg);
  }

}  // namespace dualdimer
