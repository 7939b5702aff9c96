#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "dualdimer/experiment.hpp"

using nlohmann::json;
using namespace dualdimer;

namespace {

  struct Flags {
    std::string config;
    std::string method;
    std::string problem;
    std::string seeds;
    std::string out_dir;
    int workers = 0;
    long max_iter = 0;
    std::string data_dir;
    std::size_t fine_n = 0;
    std::string checkpoint;
    std::string mode;
  };

  void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON config file");
    sub->add_option("--method", f.method, "dual_dimer | gda | adaptive_min");
    sub->add_option("--problem", f.problem, "rastrigin4 | ackley4 | styblinski20 | heat_pcnn | identity_quadratic");
    sub->add_option("--seeds", f.seeds, "seed list, e.g. 0-9 or 1,4,7");
    sub->add_option("--out-dir", f.out_dir, "output directory");
    sub->add_option("--workers", f.workers, "concurrent seed runs");
  }

  ExperimentConfig resolve(Flags const& f) {
    json file = nullptr;
    if (!f.config.empty()) {
      std::ifstream in(f.config);
      if (!in) {
        throw std::runtime_error("cannot open config " + f.config);
      }
      file = json::parse(in);
    }
    json over = json::object();
    if (!f.method.empty()) over["method"] = f.method;
    if (!f.problem.empty()) over["problem"] = f.problem;
    if (!f.seeds.empty()) over["seeds"] = f.seeds;
    if (!f.out_dir.empty()) over["out_dir"] = f.out_dir;
    if (f.workers > 0) over["workers"] = f.workers;
    if (f.max_iter > 0) over["max_iter"] = f.max_iter;
    if (!f.data_dir.empty()) over["data_dir"] = f.data_dir;
    if (f.fine_n > 0) over["fine_n"] = f.fine_n;
    if (!f.checkpoint.empty()) over["checkpoint"] = f.checkpoint;
    if (!f.mode.empty()) over["analysis"] = f.mode;
    return make_config(file, over);
  }

  void print_summary(RunSummary const& s) {
    for (auto const& r : s.runs) {
      if (!r.error.empty()) {
        std::printf("seed %llu  error: %s\n", static_cast<unsigned long long>(r.seed), r.error.c_str());
        continue;
      }
      std::printf("seed %llu  %s  iter %ld  E %.6g  |f| %.3g  beta_s %.4g  beta_l %.4g", static_cast<unsigned long long>(r.seed),
                  to_string(r.status).c_str(), r.iterations, r.final_E, r.final_force_norm, r.final_beta_s, r.final_beta_l);
      if (r.saddle_order) std::printf("  order %d", *r.saddle_order);
      if (r.mse_t1) std::printf("  mse %.3g", *r.mse_t1);
      std::printf("\n");
    }
    Stat const it = s.stat("iterations");
    std::printf("%s %s: %zu runs, iterations %.1f +- %.1f (median %.1f)\n", s.method.c_str(), s.problem.c_str(),
                s.runs.size(), it.mean, it.std, s.median_iterations());
  }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-Dimer saddle search and physics-constrained network training"};
  app.require_subcommand(1);
  Flags f;

  auto* bench = app.add_subcommand("bench", "saddle searches on benchmark landscapes");
  add_common(bench, f);
  bench->add_option("--max-iter", f.max_iter, "iteration cap per run");

  auto* train = app.add_subcommand("train-pcnn", "train the heat-equation network");
  add_common(train, f);
  train->add_option("--max-iter", f.max_iter, "iteration cap per run");
  train->add_option("--data-dir", f.data_dir, "directory of train.csv and reference_t1.csv");

  auto* gen = app.add_subcommand("gen-data", "solve the heat equation and write the training and reference CSVs");
  add_common(gen, f);
  gen->add_option("--data-dir", f.data_dir, "output directory of the CSVs");
  gen->add_option("--fine-n", f.fine_n, "solver nodes per side (1 mod 25)");

  auto* analyze = app.add_subcommand("analyze", "stability report or eigenpair check");
  add_common(analyze, f);
  analyze->add_option("--checkpoint", f.checkpoint, "bench summary, point file, or network checkpoint");
  analyze->add_option("--mode", f.mode, "full | eigen");
  analyze->add_option("--data-dir", f.data_dir, "directory of train.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench->parsed()) {
      RunSummary const s = cmd_bench(resolve(f));
      print_summary(s);
      return s.all_converged() ? 0 : 2;
    }
    if (train->parsed()) {
      if (f.problem.empty()) f.problem = "heat_pcnn";
      RunSummary const s = cmd_train_pcnn(resolve(f));
      print_summary(s);
      return s.all_converged() ? 0 : 2;
    }
    if (gen->parsed()) {
      if (f.problem.empty()) f.problem = "heat_pcnn";
      ExperimentConfig const cfg = resolve(f);
      cmd_gen_data(cfg);
      std::printf("wrote %s and %s\n", (cfg.resolved_data_dir() / "train.csv").c_str(),
                  (cfg.resolved_data_dir() / "reference_t1.csv").c_str());
      return 0;
    }
    if (analyze->parsed()) {
      std::cout << cmd_analyze(resolve(f)).dump(2) << "\n";
      return 0;
    }
  } catch (std::exception const& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
