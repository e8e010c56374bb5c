#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dbyz/config.hpp"
#include "dbyz/optimizers.hpp"
#include "dbyz/problems.hpp"

namespace dbyz {

inline constexpr const char* kCsvHeader =
    "round,optimizer,aggregator,attack,grad_norm_sq,loss,accuracy,sampled,byz_sampled,byz_majority,wallclock_ms";

/// Honest clients come first, Byzantine clients are the last delta*n ids.
std::shared_ptr<Problem> build_problem(const ExperimentConfig& cfg, std::uint64_t seed);

/// Hyperparameters with auto alpha resolved against the problem's L.
HyperParams resolve_hyperparams(const ExperimentConfig& cfg, const Problem& problem);

struct RunRow {
  RoundMetrics metrics;
  std::optional<double> wallclock_ms;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string optimizer, aggregator, attack;
  std::vector<RunRow> rows;
  bool failed = false;
  int failed_round = 0;
  std::string error;
  bool diverged = false;
  ParamVector x_final;
  ParticipationTrace trace;
  /// Quadratics only: max over honest i and visited iterates of ||grad f_i(x)||,
  /// an after-the-fact value for the bounded-gradient constant.
  std::optional<double> max_local_grad_norm;

  /// Mean grad_norm_sq over the last ceil(10%) of rows.
  double plateau() const;
  nlohmann::json summary() const;
  std::string csv() const;
};

/// Runs one seed. Aggregation failures and divergence end the run early with
/// a final NaN row and failed = true; configuration errors still throw.
RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed);

/// Writes <out>/<hash>/seed<N>.csv and seed<N>.json (and the trace if asked).
std::filesystem::path write_run(const RunResult& r, const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir);

/// Mean grad_norm_sq over the last ceil(10%) rows of a CSV written by write_run.
double plateau_from_csv(const std::filesystem::path& csv);

/// One run per seed, results in seed order.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, int workers);

struct GridJob {
  std::size_t point;
  std::uint64_t seed;
};

/// Every (point, seed) pair on a pool of `workers` threads. Results come back
/// in job order regardless of scheduling. When `out_dir` is set each run is
/// written and grid_summary.json lists every record.
std::vector<RunResult> run_grid(const std::vector<ExperimentConfig>& points, int workers,
                                const std::optional<std::filesystem::path>& out_dir);

}  // namespace dbyz
