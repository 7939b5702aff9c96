#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dualdimer/experiment.hpp"
#include "dualdimer/pcnn.hpp"

using namespace dualdimer;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

  fs::path fresh_dir(std::string const& name) {
    fs::path const d = fs::temp_directory_path() / ("dualdimer_harness_" + name);
    fs::remove_all(d);
    return d;
  }

  std::string slurp(fs::path const& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::size_t line_count(fs::path const& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n;
  }

  std::vector<TraceRecord> stripped_wall(std::vector<TraceRecord> t) {
    for (auto& r : t) r.wall_s = 0;
    return t;
  }

  bool same_trace(std::vector<TraceRecord> const& a, std::vector<TraceRecord> const& b) {
    if (a.size() != b.size()) return false;
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k].iter != b[k].iter || !same(a[k].energy, b[k].energy) || !same(a[k].force_norm, b[k].force_norm)
          || !same(a[k].beta_s, b[k].beta_s) || !same(a[k].beta_l, b[k].beta_l))
        return false;
    }
    return true;
  }

}  // namespace

TEST_CASE("defaults") {
  ExperimentConfig const b = default_config("rastrigin4");
  CHECK(b.search.m_freq == 40);
  CHECK(b.search.delta == 1e-3);
  CHECK(b.search.gamma == 0.1);
  CHECK(b.search.eta == 5e-4);
  CHECK(b.search.epsilon == 1e-4);
  CHECK(b.search.stop_on == StopOn::force_norm);
  CHECK(b.search.half_length == 1e-4);
  CHECK(b.seeds.size() == 10);
  CHECK_FALSE(b.search.warm_start);

  ExperimentConfig const h = default_config("heat_pcnn");
  CHECK(h.search.gamma == 1e-5);
  CHECK(h.search.epsilon == 1e-3);
  CHECK(h.search.stop_on == StopOn::energy);
  CHECK(h.search.warm_start);
  REQUIRE(h.seeds.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(h.seeds[i] == heat_default_seed_base + i);
}

TEST_CASE("config precedence and validation") {
  json const file = {{"problem", "ackley4"}, {"eta", 1e-3}, {"seeds", {1, 2}}, {"workers", 2}};
  ExperimentConfig const a = make_config(file, json::object());
  CHECK(a.problem == "ackley4");
  CHECK(a.search.eta == 1e-3);
  CHECK(a.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(a.workers == 2);

  ExperimentConfig const b = make_config(file, {{"seeds", "5"}, {"problem", "heat_pcnn"}});
  CHECK(b.problem == "heat_pcnn");
  CHECK(b.seeds == std::vector<std::uint64_t>{5});
  CHECK(b.search.eta == 1e-3);
  CHECK(b.search.gamma == 1e-5);
  CHECK(b.search.stop_on == StopOn::energy);

  CHECK(make_config(nullptr, json::object()).problem == "rastrigin4");
  CHECK_THROWS_AS(make_config(nullptr, {{"problem", "himmelblau"}}), std::invalid_argument);
  CHECK_THROWS_AS(make_config({{"problem", "himmelblau"}}, json::object()), std::invalid_argument);
  CHECK_THROWS_AS(make_config({{"learning_rate", 0.1}}, json::object()), std::invalid_argument);
  CHECK_THROWS_AS(make_config(nullptr, {{"method", "adaptive_min"}}), std::invalid_argument);
  CHECK_THROWS_AS(make_config(nullptr, {{"method", "newton"}}), std::invalid_argument);
  CHECK_THROWS_AS(make_config(nullptr, {{"workers", 0}}), std::invalid_argument);

  ExperimentConfig const round = make_config(config_to_json(b), json::object());
  CHECK(config_to_json(round) == config_to_json(b));
}

TEST_CASE("unknown problem is rejected before any compute") {
  ExperimentConfig cfg = default_config("rastrigin4");
  cfg.problem = "himmelblau";
  cfg.out_dir = fresh_dir("unknown");
  CHECK_THROWS_AS(cmd_bench(cfg), std::invalid_argument);
  CHECK_THROWS_AS(cmd_train_pcnn(cfg), std::invalid_argument);
  CHECK_FALSE(fs::exists(cfg.out_dir));
}

TEST_CASE("seed lists") {
  CHECK(parse_seed_list("0-4,9") == std::vector<std::uint64_t>{0, 1, 2, 3, 4, 9});
  CHECK(parse_seed_list("7") == std::vector<std::uint64_t>{7});
  CHECK(parse_seed_list("3,1") == std::vector<std::uint64_t>{3, 1});
  CHECK_THROWS_AS(parse_seed_list(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_seed_list("5-2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_seed_list("a"), std::invalid_argument);
}

TEST_CASE("aggregation") {
  Stat const one = aggregate({4.0});
  CHECK(one.mean == 4.0);
  CHECK(one.std == 0.0);
  CHECK(one.count == 1);
  Stat const two = aggregate({1.0, 3.0});
  CHECK(two.mean == 2.0);
  CHECK(two.std == doctest::Approx(std::sqrt(2.0)));
  RunSummary s;
  for (long it : {5L, 1L, 9L, 3L}) {
    RunRecord r;
    r.iterations = it;
    s.runs.push_back(r);
  }
  CHECK(s.median_iterations() == 4.0);
}

TEST_CASE("bench: traces, summary and reproducibility") {
  ExperimentConfig cfg = make_config(nullptr, {{"problem", "rastrigin4"}, {"seeds", "0-1"}, {"workers", 2}});
  cfg.out_dir = fresh_dir("bench");
  RunSummary const s = cmd_bench(cfg);
  REQUIRE(s.runs.size() == 2);
  CHECK(s.all_converged());

  json const js = json::parse(slurp(cfg.out_dir / "summary.json"));
  CHECK(js["method"] == "dual_dimer");
  CHECK(js["problem"] == "rastrigin4");
  REQUIRE(js["runs"].size() == 2);

  std::vector<double> iters_from_traces, force_from_traces;
  for (auto const& r : s.runs) {
    CHECK(r.final_force_norm < 1e-4);
    CHECK(r.saddle_order == 2);
    CHECK(r.negative_in_min_block == 0);
    CHECK(r.negative_in_max_block == 2);
    REQUIRE(fs::exists(r.trace_path));
    CHECK(line_count(r.trace_path) == static_cast<std::size_t>(r.iterations) + 1);
    auto const tr = read_trace_csv(r.trace_path);
    REQUIRE(tr.size() == static_cast<std::size_t>(r.iterations));
    CHECK(tr.back().iter == r.iterations);
    CHECK(tr.back().energy == r.final_E);
    CHECK(tr.back().force_norm == r.final_force_norm);
    CHECK_FALSE(tr.back().breakdown);
    iters_from_traces.push_back(static_cast<double>(tr.size()));
    force_from_traces.push_back(tr.back().force_norm);
  }
  Stat const it = aggregate(iters_from_traces), fn = aggregate(force_from_traces);
  CHECK(js["aggregate"]["iterations"]["mean"].get<double>() == doctest::Approx(it.mean).epsilon(1e-15));
  CHECK(js["aggregate"]["iterations"]["std"].get<double>() == doctest::Approx(it.std).epsilon(1e-15));
  CHECK(js["aggregate"]["final_force_norm"]["mean"].get<double>() == doctest::Approx(fn.mean).epsilon(1e-15));

  // Same config, one worker: bit-identical traces apart from wall time.
  ExperimentConfig again = cfg;
  again.workers = 1;
  again.out_dir = fresh_dir("bench_again");
  RunSummary const s2 = cmd_bench(again);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(s2.runs[k].iterations == s.runs[k].iterations);
    CHECK(s2.runs[k].final_theta == s.runs[k].final_theta);
    CHECK(same_trace(stripped_wall(read_trace_csv(s2.runs[k].trace_path)),
                     stripped_wall(read_trace_csv(s.runs[k].trace_path))));
  }
  fs::remove_all(cfg.out_dir);
  fs::remove_all(again.out_dir);
}

TEST_CASE("bench: Styblinski-Tang reaches a tenth-order saddle") {
  ExperimentConfig cfg = make_config(nullptr, {{"problem", "styblinski20"}, {"seeds", "0"}});
  cfg.out_dir = fresh_dir("st");
  RunSummary const s = cmd_bench(cfg);
  REQUIRE(s.runs.size() == 1);
  auto const& r = s.runs[0];
  CHECK(r.converged());
  CHECK(r.saddle_order == 10);
  CHECK(r.negative_in_max_block == 10);
  for (std::size_t i = 10; i < 20; ++i) CHECK(std::abs(r.final_theta[i] - 0.1567) < 1e-2);
  Stat const single = s.stat("iterations");
  CHECK(single.count == 1);
  CHECK(single.std == 0.0);
  fs::remove_all(cfg.out_dir);
}

TEST_CASE("gen-data") {
  ExperimentConfig cfg = make_config(nullptr, {{"problem", "heat_pcnn"}});
  cfg.out_dir = fresh_dir("gen");
  cmd_gen_data(cfg);
  fs::path const train = cfg.resolved_data_dir() / "train.csv", ref = cfg.resolved_data_dir() / "reference_t1.csv";
  CHECK(line_count(train) == 757);
  CHECK(line_count(ref) == 677);
  std::string const t1 = slurp(train), r1 = slurp(ref);
  cmd_gen_data(cfg);
  CHECK(slurp(train) == t1);
  CHECK(slurp(ref) == r1);
  CHECK(read_dataset_csv(train).size() == 756);

  ExperimentConfig bad = cfg;
  bad.fine_n = 100;
  CHECK_THROWS_AS(cmd_gen_data(bad), std::invalid_argument);

  SUBCASE("short training run and checkpoint analysis") {
    ExperimentConfig tc = cfg;
    tc.seeds = {3};
    tc.search.max_iter = 5;
    RunSummary const s = cmd_train_pcnn(tc);
    REQUIRE(s.runs.size() == 1);
    auto const& r = s.runs[0];
    CHECK(r.status == SearchStatus::not_converged);
    CHECK(r.iterations == 5);
    CHECK(r.mse_t1);
    CHECK(s.stat("iterations").std == 0.0);
    auto const tr = read_trace_csv(r.trace_path);
    REQUIRE(tr.size() == 5);
    REQUIRE(tr.back().breakdown);
    double wsum = 0;
    for (double l : tr.back().breakdown->weights) wsum += l;
    CHECK(wsum == doctest::Approx(1));
    CHECK(std::isfinite(tr.front().beta_s));

    REQUIRE(fs::exists(r.checkpoint_path));
    ExperimentConfig ac = tc;
    ac.checkpoint = r.checkpoint_path;
    ac.analysis = "full";
    CHECK_THROWS_AS(cmd_analyze(ac), std::invalid_argument);
    ac.analysis = "eigen";
    json const out = cmd_analyze(ac);
    CHECK(std::isfinite(out["estimated"]["beta_s"].get<double>()));
    CHECK(std::isfinite(out["estimated"]["beta_l"].get<double>()));
  }
  fs::remove_all(cfg.out_dir);
}

TEST_CASE("analyze landscapes") {
  ExperimentConfig cfg = make_config(nullptr, {{"problem", "rastrigin4"}});
  json const r = cmd_analyze(cfg);
  CHECK(r["estimated"]["beta_s"].get<double>() > 0);
  CHECK(r["estimated"]["beta_l"].get<double>() < 0);
  CHECK(r["saddle_conditions_hold"] == true);
  CHECK(r["saddle_order"] == 2);
  CHECK(r["stability"].contains("moduli"));

  ExperimentConfig q = make_config(nullptr, {{"problem", "identity_quadratic"}});
  json const qr = cmd_analyze(q);
  bool hand_case = false;
  for (auto const& p : qr["stability"]["pairs"]) {
    if (p["beta_a"]["re"] == -1.0 && p["beta_a"]["im"] == 0.0 && p["beta_b"]["re"] == 0.0 && p["beta_b"]["im"] == 0.0) {
      hand_case = true;
      CHECK(p["interval"]["lo"].get<double>() == doctest::Approx(0));
      CHECK(p["interval"]["hi"].get<double>() == doctest::Approx(2));
    }
  }
  CHECK(hand_case);
  CHECK(qr["stability"]["admissible"] == true);
  CHECK(qr["stability"]["interval"]["hi"].get<double>() == doctest::Approx(1));

  q.point = {1, 2, 3};
  CHECK_THROWS_AS(cmd_analyze(q), std::invalid_argument);
}
