#include "dbyz/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "dbyz/idx.hpp"

namespace dbyz {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::shared_ptr<Problem> build_quadratic(const ExperimentConfig& cfg, RngStream& rng) {
  const auto& pc = cfg.problem;
  const int honest = cfg.n - cfg.byzantine_count();
  QuadraticProblem h = make_hetero_quadratic(honest, pc.d, pc.zeta, pc.sigma, pc.mu, rng, pc.bbar_norm);
  std::vector<ParamVector> b = h.linear_terms();
  // Byzantine clients see the pooled data, so their local objective is the global one.
  const ParamVector bbar = h.honest_mean_b();
  b.resize(cfg.n, bbar);
  auto p = std::make_shared<QuadraticProblem>(pc.mu, std::move(b), pc.sigma);
  std::vector<bool> mask = cfg.byzantine_mask();
  mask.flip();
  p->set_honest(std::move(mask));
  return p;
}

std::vector<std::vector<std::size_t>> shards_for(const ExperimentConfig& cfg, const Dataset& train,
                                                 RngStream& rng) {
  const int honest = cfg.n - cfg.byzantine_count();
  auto shards = cfg.problem.partition == "iid" ? partition_iid(train.labels.size(), honest, rng)
                                               : partition_noniid(train.labels, honest, rng);
  shards.resize(cfg.n);  // Byzantine clients own no shard
  return shards;
}

std::shared_ptr<Problem> build_logreg(const ExperimentConfig& cfg, RngStream& rng) {
  const auto& pc = cfg.problem;
  std::shared_ptr<const Dataset> train, test;
  if (pc.kind == "logreg_synthetic") {
    train = std::make_shared<Dataset>(make_gaussian_classes(pc.classes, pc.per_class, pc.d, pc.separation, rng));
  } else {
    train = std::make_shared<Dataset>(
        idx_to_dataset(load_idx(pc.mnist_images), load_idx(pc.mnist_labels), pc.mnist_limit));
    if (!pc.mnist_test_images.empty() && !pc.mnist_test_labels.empty())
      test = std::make_shared<Dataset>(
          idx_to_dataset(load_idx(pc.mnist_test_images), load_idx(pc.mnist_test_labels)));
  }
  return std::make_shared<LogRegProblem>(train, shards_for(cfg, *train, rng), pc.l2_reg, pc.batch_size, test);
}

}  // namespace

std::shared_ptr<Problem> build_problem(const ExperimentConfig& cfg, std::uint64_t seed) {
  RngStream rng(seed, StreamTag::ProblemInit);
  if (cfg.problem.kind == "quadratic") return build_quadratic(cfg, rng);
  return build_logreg(cfg, rng);
}

HyperParams resolve_hyperparams(const ExperimentConfig& cfg, const Problem& problem) {
  HyperParams hp = cfg.hp;
  hp.auto_alpha = cfg.alpha_auto;
  if (cfg.alpha_auto) hp.alpha = auto_alpha(problem.smoothness(), hp.eta, hp.p);
  hp.validate();
  return hp;
}

double RunResult::plateau() const {
  if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t k = (rows.size() + 9) / 10;
  double s = 0;
  for (std::size_t i = rows.size() - k; i < rows.size(); ++i) s += rows[i].metrics.grad_norm_sq;
  return s / static_cast<double>(k);
}

nlohmann::json RunResult::summary() const {
  nlohmann::json j;
  j["status"] = failed ? "failed" : "ok";
  j["failed_round"] = failed ? nlohmann::json(failed_round) : nlohmann::json(nullptr);
  j["error"] = error;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["optimizer"] = optimizer;
  j["aggregator"] = aggregator;
  j["attack"] = attack;
  int completed = 0, majority = 0;
  std::optional<int> first_majority;
  for (const auto& r : rows) {
    if (std::isfinite(r.metrics.grad_norm_sq)) ++completed;
    if (r.metrics.byz_majority) {
      ++majority;
      if (!first_majority) first_majority = r.metrics.round;
    }
  }
  j["rounds_completed"] = completed;
  const double final_g = rows.empty() ? std::numeric_limits<double>::quiet_NaN() : rows.back().metrics.grad_norm_sq;
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  j["final_grad_norm_sq"] = num(final_g);
  j["plateau"] = num(plateau());
  j["byz_majority_rounds"] = majority;
  j["first_byz_majority_round"] = first_majority ? nlohmann::json(*first_majority) : nlohmann::json(nullptr);
  j["diverged"] = diverged;
  j["max_local_grad_norm"] = max_local_grad_norm ? num(*max_local_grad_norm) : nlohmann::json(nullptr);
  return j;
}

std::string RunResult::csv() const {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& row : rows) {
    const auto& m = row.metrics;
    os << m.round << ',' << optimizer << ',' << aggregator << ',' << attack << ',' << fmt(m.grad_norm_sq) << ','
       << fmt(m.loss) << ',' << (m.accuracy ? fmt(*m.accuracy) : "") << ',' << m.sampled << ','
       << m.byz_sampled << ',' << (m.byz_majority ? 1 : 0) << ','
       << (row.wallclock_ms ? fmt(*row.wallclock_ms) : "") << '\n';
  }
  return os.str();
}

RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto problem = build_problem(cfg, seed);
  RunResult r;
  r.seed = seed;
  r.config_hash = cfg.hash();
  r.optimizer = to_string(cfg.optimizer);
  r.aggregator = to_string(cfg.aggregator.kind);
  r.attack = to_string(cfg.attack.kind);

  RoundEnv env{*problem, cfg.byzantine_mask(), cfg.attack, cfg.aggregator, resolve_hyperparams(cfg, *problem),
               seed, nullptr, cfg.write_trace ? &r.trace : nullptr};
  OptimizerState state = OptimizerState::initial(problem->initial_point(), cfg.n);
  r.rows.reserve(cfg.rounds);

  const auto* quad = dynamic_cast<const QuadraticProblem*>(problem.get());
  auto track_local_grads = [&] {
    if (!quad) return;
    double worst = r.max_local_grad_norm.value_or(0.0);
    for (int i = 0; i < cfg.n; ++i)
      if (quad->honest()[i]) worst = std::max(worst, quad->local_grad(i, state.x).norm());
    r.max_local_grad_norm = worst;
  };
  track_local_grads();

  for (int t = 1; t <= cfg.rounds; ++t) {
    const auto start = std::chrono::steady_clock::now();
    try {
      RunRow row{run_round(cfg.optimizer, state, env), std::nullopt};
      if (cfg.record_wallclock)
        row.wallclock_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      r.rows.push_back(std::move(row));
      track_local_grads();
    } catch (const std::exception& e) {
      r.failed = true;
      r.failed_round = t;
      r.error = e.what();
      r.diverged = dynamic_cast<const DivergenceError*>(&e) != nullptr;
      RunRow row;
      row.metrics.round = t;
      row.metrics.grad_norm_sq = std::numeric_limits<double>::quiet_NaN();
      row.metrics.loss = std::numeric_limits<double>::quiet_NaN();
      r.rows.push_back(std::move(row));
      break;
    }
  }
  r.x_final = state.x;
  return r;
}

std::filesystem::path write_run(const RunResult& r, const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir) {
  const auto dir = out_dir / r.config_hash;
  std::filesystem::create_directories(dir);
  const std::string stem = "seed" + std::to_string(r.seed);
  const auto csv = dir / (stem + ".csv");
  std::ofstream(csv) << r.csv();
  std::ofstream(dir / (stem + ".json")) << r.summary().dump(2) << '\n';
  std::ofstream(dir / "config.txt") << cfg.canonical();
  if (cfg.write_trace) {
    std::ofstream trace(dir / (stem + "_trace.csv"));
    r.trace.write_csv(trace);
  }
  return csv;
}

double plateau_from_csv(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw std::runtime_error("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  if (line != kCsvHeader) throw std::runtime_error("unexpected CSV header in " + csv.string());
  std::vector<double> g;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    for (int c = 0; c < 5; ++c) std::getline(ss, cell, ',');
    g.push_back(std::strtod(cell.c_str(), nullptr));
  }
  if (g.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t k = (g.size() + 9) / 10;
  double s = 0;
  for (std::size_t i = g.size() - k; i < g.size(); ++i) s += g[i];
  return s / static_cast<double>(k);
}

std::vector<RunResult> run_grid(const std::vector<ExperimentConfig>& points, int workers,
                                const std::optional<std::filesystem::path>& out_dir) {
  std::vector<GridJob> jobs;
  for (std::size_t p = 0; p < points.size(); ++p)
    for (auto s : points[p].seeds) jobs.push_back({p, s});

  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < jobs.size();) {
      try {
        const auto& cfg = points[jobs[k].point];
        results[k] = run_single(cfg, jobs[k].seed);
        if (out_dir) write_run(results[k], cfg, *out_dir);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < threads; ++w) pool.emplace_back(work);
    work();
  }
  if (first_error) std::rethrow_exception(first_error);

  if (out_dir) {
    nlohmann::json all = nlohmann::json::array();
    for (const auto& r : results) all.push_back(r.summary());
    std::filesystem::create_directories(*out_dir);
    std::ofstream(*out_dir / "grid_summary.json") << all.dump(2) << '\n';
  }
  return results;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, int workers) {
  return run_grid({cfg}, workers, std::nullopt);
}

}  // namespace dbyz
