// Command-line front end: single runs, grids, the acceptance suite and the
// two-world lower-bound check.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include "dbyz/acceptance.hpp"
#include "dbyz/config.hpp"
#include "dbyz/experiment.hpp"
#include "dbyz/theory.hpp"

namespace {

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, std::optional<std::string> out) {
  auto cfg = dbyz::parse_config_file(config);
  if (seed) cfg.seeds = {*seed};
  if (out) cfg.out_dir = *out;
  std::vector<dbyz::ExperimentConfig> points = {cfg};
  const auto results = dbyz::run_grid(points, cfg.workers, std::filesystem::path(cfg.out_dir));
  int failed = 0;
  for (const auto& r : results) {
    const auto s = r.summary();
    std::cout << (std::filesystem::path(cfg.out_dir) / r.config_hash / ("seed" + std::to_string(r.seed) + ".csv"))
              << "  " << s.dump() << '\n';
    failed += r.failed;
  }
  return failed ? 2 : 0;
}

int cmd_grid(const std::string& config, const std::string& axes, std::optional<std::string> out,
             std::optional<int> workers) {
  auto base = dbyz::read_ini(config);
  if (out) base.put("run.out", *out);
  const auto points = dbyz::expand_grid(base, dbyz::parse_axes_file(axes));
  const auto& first = points.front();
  const int w = workers ? *workers : first.workers;
  const auto results = dbyz::run_grid(points, w, std::filesystem::path(first.out_dir));
  int failed = 0;
  for (const auto& r : results) failed += r.failed;
  std::cout << points.size() << " points, " << results.size() << " runs, " << failed << " failed; summary in "
            << (std::filesystem::path(first.out_dir) / "grid_summary.json") << '\n';
  return 0;
}

int cmd_lowerbound(const std::string& config, std::uint64_t seed) {
  const auto cfg = dbyz::parse_config_file(config);
  dbyz::theory::WorldPair wp;
  wp.delta = cfg.delta;
  wp.p = cfg.hp.p;
  wp.mu = cfg.problem.mu;
  wp.zeta = cfg.problem.zeta;
  wp.n = cfg.n;

  dbyz::theory::TwoWorldAlgorithm alg;
  alg.name = dbyz::to_string(cfg.optimizer) + "+" + dbyz::to_string(cfg.aggregator.kind);
  alg.optimizer = cfg.optimizer;
  alg.aggregator = cfg.aggregator;
  alg.hp = cfg.hp;
  if (cfg.alpha_auto) alg.hp.alpha = dbyz::auto_alpha(wp.mu, alg.hp.eta, wp.p);
  alg.rounds = cfg.rounds;
  std::cout << dbyz::theory::run_two_worlds(alg, wp, seed).to_json().dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Byzantine-robust federated learning simulator"};
  app.require_subcommand(1);

  std::string config, axes, mnist_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::uint64_t lb_seed = 0;
  int accept_workers = 0;

  auto* run = app.add_subcommand("run", "run one configuration");
  run->add_option("--config", config, "INI configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "run only this seed");
  run->add_option("--out", out, "output directory");

  auto* grid = app.add_subcommand("grid", "run the Cartesian product of axis values");
  grid->add_option("--config", config, "base INI configuration")->required()->check(CLI::ExistingFile);
  grid->add_option("--axes", axes, "INI file with an [axes] section")->required()->check(CLI::ExistingFile);
  grid->add_option("--out", out, "output directory");
  grid->add_option("--workers", workers, "parallel runs");

  auto* accept = app.add_subcommand("accept", "run the acceptance suite");
  accept->add_option("--workers", accept_workers, "workers for the determinism check (0: hardware maximum)");
  accept->add_option("--mnist-dir", mnist_dir, "directory with MNIST IDX files (default $MNIST_DIR)");

  auto* lower = app.add_subcommand("lowerbound", "two-world lower-bound experiment");
  lower->add_option("--config", config, "INI configuration")->required()->check(CLI::ExistingFile);
  lower->add_option("--seed", lb_seed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, seed, out);
    if (*grid) return cmd_grid(config, axes, out, workers);
    if (*accept) return dbyz::acceptance::run_all(std::cout, {accept_workers, mnist_dir}) ? 1 : 0;
    if (*lower) return cmd_lowerbound(config, lb_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
