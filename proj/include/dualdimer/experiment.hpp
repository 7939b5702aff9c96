#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualdimer/search.hpp"

/**
 * \file experiment.hpp
 *
 * @brief Multi-seed experiment driver behind the command line tool.
 *
 * Config files are JSON objects. Recognised keys (all optional):
 *
 *   method        "dual_dimer" | "gda" | "adaptive_min"
 *   problem       "rastrigin4" | "ackley4" | "styblinski20" | "heat_pcnn" | "identity_quadratic"
 *   seeds         list of integers
 *   out_dir       output directory
 *   workers       concurrent seed runs
 *   m_freq, delta, gamma, eta, epsilon, half_length, max_iter, max_rotations, rot_tol, axis_seed
 *   warm_start    eigen refreshes start from the previous axes (default false on landscapes, true on heat_pcnn)
 *   stop_on       "force_norm" | "energy"
 *   start_box     benchmark starts are uniform in [-start_box, start_box]^dim
 *   data_dir      heat training/reference CSVs (default <out_dir>/data)
 *   fine_n, fine_dt  reference solver resolution
 *   checkpoint    input of "analyze"
 *   point         landscape point for "analyze"
 *   analysis      "full" | "eigen"
 *
 * Defaults depend on the problem; benchmark problems stop on the force norm, the heat problem on the energy.
 */

namespace dualdimer {

  enum class TrainMethod { dual_dimer, gda, adaptive_min };

  std::string to_string(TrainMethod m);
  TrainMethod train_method_from_string(std::string const& s);

  /// Names accepted for "problem".
  std::vector<std::string> known_problems();
  bool is_landscape_problem(std::string const& name);

  /// First seed of the default 20-seed list of the heat problem.
  inline constexpr std::uint64_t heat_default_seed_base = 0;

  struct ExperimentConfig {
    TrainMethod method = TrainMethod::dual_dimer;
    std::string problem = "rastrigin4";
    std::vector<std::uint64_t> seeds;
    std::filesystem::path out_dir = "out";
    int workers = 1;
    DualDimerConfig search;
    double start_box = 2.5;
    std::filesystem::path data_dir;
    std::size_t fine_n = 101;
    double fine_dt = 5e-4;
    std::filesystem::path checkpoint;
    std::vector<double> point;
    std::string analysis = "full";

    /// Throws std::invalid_argument on an unknown problem or inconsistent settings.
    void validate() const;

    std::filesystem::path resolved_data_dir() const { return data_dir.empty() ? out_dir / "data" : data_dir; }
  };

  /// Problem-specific defaults: seeds, stopping rule and step sizes.
  ExperimentConfig default_config(std::string const& problem);

  /**
   * @brief Builds a config from defaults, then file values, then overrides.
   *
   * The problem is taken from overrides, else the file, else "rastrigin4"; its defaults are applied first.
   */
  ExperimentConfig make_config(nlohmann::json const& file, nlohmann::json const& overrides);

  nlohmann::json config_to_json(ExperimentConfig const& cfg);

  /// Parses "0,3,7" and ranges "0-9" (inclusive), or combinations "0-4,9".
  std::vector<std::uint64_t> parse_seed_list(std::string const& text);

  /// One seed's outcome.
  struct RunRecord {
    std::uint64_t seed = 0;
    SearchStatus status = SearchStatus::not_converged;
    long iterations = 0;
    double wall_time_s = 0;
    double final_E = 0;
    double final_force_norm = 0;
    double final_beta_s = 0;
    double final_beta_l = 0;
    std::optional<double> mse_t1;
    /// Landscape runs: negative exact-Hessian eigenvalues overall and per block.
    std::optional<int> saddle_order;
    std::optional<int> negative_in_min_block;
    std::optional<int> negative_in_max_block;
    std::vector<double> final_theta;
    std::filesystem::path trace_path;
    std::filesystem::path checkpoint_path;
    std::string error;

    bool converged() const {
      return status == SearchStatus::converged_force || status == SearchStatus::converged_energy;
    }
  };

  struct Stat {
    double mean = 0;
    double std = 0;
    std::size_t count = 0;
  };

  /// Mean and sample standard deviation; std is 0 for a single value.
  Stat aggregate(std::vector<double> const& xs);

  struct RunSummary {
    std::string method;
    std::string problem;
    std::vector<RunRecord> runs;

    /// Statistics over runs without an error.
    Stat stat(std::string const& metric) const;
    double median_iterations() const;
    bool all_converged() const;
  };

  nlohmann::json summary_to_json(RunSummary const& s);

  /// Runs every seed of a benchmark landscape, writes one trace per run and summary.json.
  RunSummary cmd_bench(ExperimentConfig const& cfg);

  /// Trains the heat network for every seed; generates the data files first if they are missing.
  RunSummary cmd_train_pcnn(ExperimentConfig const& cfg);

  /// Writes train.csv (756 rows) and reference_t1.csv (676 rows) under the data directory.
  void cmd_gen_data(ExperimentConfig const& cfg);

  /// Stability report for a landscape point, or estimated eigenpairs of a trained heat checkpoint.
  nlohmann::json cmd_analyze(ExperimentConfig const& cfg);

  /// Column header of every trace file.
  std::string trace_header();

  /// One trace line; NaN and missing values are written as empty fields.
  std::string trace_line(TraceRecord const& r);

  /// Parses a trace file back into records.
  std::vector<TraceRecord> read_trace_csv(std::filesystem::path const& path);

}  // namespace dualdimer
