#include "dbyz/theory.hpp"

#include <cmath>
#include <stdexcept>

namespace dbyz::theory {

namespace {

int integral_count(double value, const char* what) {
  const long rounded = std::lround(value);
  if (std::abs(value - static_cast<double>(rounded)) > 1e-9)
    throw std::invalid_argument(std::string(what) + " must be an integer");
  return static_cast<int>(rounded);
}

}  // namespace

int WorldPair::biased_count() const { return integral_count(p * delta * n, "p*delta*n"); }
int WorldPair::byzantine_count() const { return integral_count(delta * n, "delta*n"); }
double WorldPair::world1_optimum() const { return std::sqrt(delta) * zeta / (mu * std::sqrt(p)); }
double WorldPair::biased_shift() const { return zeta / (std::sqrt(delta) * std::pow(p, 1.5)); }
double WorldPair::world1_heterogeneity() const { return (1.0 - delta * p) / (p * p) * zeta * zeta; }
double WorldPair::floor() const { return delta * zeta * zeta / (4.0 * p); }

void WorldPair::validate(bool require_admissible) const {
  if (!(delta > 0 && delta < 0.5)) throw std::invalid_argument("delta must be in (0, 1/2)");
  if (!(p > 0 && p <= 1)) throw std::invalid_argument("p must be in (0, 1]");
  if (!(mu > 0)) throw std::invalid_argument("mu must be > 0");
  if (!(zeta >= 0)) throw std::invalid_argument("zeta must be >= 0");
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  if (biased_count() < 1) throw std::invalid_argument("p*delta*n must be >= 1");
  byzantine_count();
  if (require_admissible && !hetero_admissibility(delta, p))
    throw std::invalid_argument("heterogeneity bound violated");
}

double admissibility_threshold(double delta) {
  return (-delta + std::sqrt(delta * delta + 4.0)) / 2.0;
}

bool hetero_admissibility(double delta, double p) {
  const bool direct = (1.0 - delta * p) / (p * p) <= 1.0;
  const bool closed_form = p >= admissibility_threshold(delta);
  if (direct != closed_form) {
    // Rounding can split the two forms only within a few ulps of the threshold.
    if (std::abs(p - admissibility_threshold(delta)) > 1e-12)
      throw std::logic_error("admissibility forms disagree");
  }
  return direct;
}

std::shared_ptr<QuadraticProblem> build_world1(const WorldPair& wp, bool require_admissible) {
  wp.validate(require_admissible);
  std::vector<ParamVector> b(wp.n, ParamVector::Zero(1));
  for (int i = 0; i < wp.biased_count(); ++i) b[i][0] = wp.biased_shift();
  return std::make_shared<QuadraticProblem>(wp.mu, std::move(b), 0.0);
}

World2 build_world2(const WorldPair& wp, std::shared_ptr<const QuadraticProblem> world1,
                    bool require_admissible) {
  wp.validate(require_admissible);
  World2 w;
  w.problem = std::make_shared<QuadraticProblem>(
      wp.mu, std::vector<ParamVector>(wp.n, ParamVector::Zero(1)), 0.0);
  w.is_byz.assign(wp.n, false);
  std::vector<bool> honest(wp.n, true);
  for (int i = 0; i < wp.byzantine_count(); ++i) {
    w.is_byz[i] = true;
    honest[i] = false;
  }
  w.problem->set_honest(honest);
  w.attack.kind = AttackKind::MimicWorld2;
  w.attack.world1 = std::move(world1);
  return w;
}

nlohmann::json TwoWorldReport::to_json() const {
  return {{"alg", alg},       {"delta", wp.delta}, {"p", wp.p},
          {"zeta", wp.zeta},  {"mu", wp.mu},       {"err1", err1},
          {"err2", err2},     {"max_err", max_err}, {"floor", floor},
          {"indistinguishable", indistinguishable}};
}

namespace {

struct WorldRun {
  std::vector<unsigned char> stream;
  std::size_t calls = 0;
  double x_out = 0;
};

WorldRun run_world(const TwoWorldAlgorithm& alg, const Problem& problem, std::vector<bool> is_byz,
                   const AttackSpec& attack, std::uint64_t seed) {
  WorldRun out;
  RoundEnv env{problem, std::move(is_byz), attack, alg.aggregator, alg.hp, seed, {}, nullptr};
  env.observer = [&out](int round, std::span<const ParamVector> inputs) {
    ++out.calls;
    const auto* r = reinterpret_cast<const unsigned char*>(&round);
    out.stream.insert(out.stream.end(), r, r + sizeof(round));
    for (const auto& v : inputs) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
      out.stream.insert(out.stream.end(), bytes, bytes + sizeof(double) * v.size());
    }
  };
  OptimizerState state = OptimizerState::initial(problem.initial_point(), problem.num_clients());
  for (int t = 0; t < alg.rounds; ++t) run_round(alg.optimizer, state, env);
  out.x_out = state.x[0];
  return out;
}

}  // namespace

TwoWorldReport run_two_worlds(const TwoWorldAlgorithm& alg, const WorldPair& wp, std::uint64_t seed,
                              bool require_admissible) {
  auto world1 = build_world1(wp, require_admissible);
  const World2 world2 = build_world2(wp, world1, require_admissible);

  AttackSpec honest_behaviour;
  const WorldRun r1 = run_world(alg, *world1, std::vector<bool>(wp.n, false), honest_behaviour, seed);
  const WorldRun r2 = run_world(alg, *world2.problem, world2.is_byz, world2.attack, seed);

  TwoWorldReport rep;
  rep.alg = alg.name;
  rep.wp = wp;
  rep.indistinguishable = r1.calls == r2.calls && r1.stream == r2.stream;
  if (!rep.indistinguishable)
    throw std::logic_error("two-world aggregator inputs differ for " + alg.name);
  rep.aggregator_calls = r1.calls;
  rep.x_out = r1.x_out;
  const ParamVector x = ParamVector::Constant(1, rep.x_out);
  rep.err1 = world1->global_grad(x).squaredNorm();
  rep.err2 = world2.problem->global_grad(x).squaredNorm();
  rep.max_err = std::max(rep.err1, rep.err2);
  rep.floor = wp.floor();
  return rep;
}

TwoWorldReport midpoint_policy(const WorldPair& wp) {
  auto world1 = build_world1(wp, false);
  const World2 world2 = build_world2(wp, world1, false);
  TwoWorldReport rep;
  rep.alg = "midpoint";
  rep.wp = wp;
  rep.indistinguishable = true;
  rep.x_out = 0.5 * (wp.world1_optimum() + 0.0);
  const ParamVector x = ParamVector::Constant(1, rep.x_out);
  rep.err1 = world1->global_grad(x).squaredNorm();
  rep.err2 = world2.problem->global_grad(x).squaredNorm();
  rep.max_err = std::max(rep.err1, rep.err2);
  rep.floor = wp.floor();
  return rep;
}

double staleness_sum(double alpha, int l) {
  if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("alpha must be in (0, 1]");
  if (l < 0) throw std::invalid_argument("l must be >= 0");
  const double decay = (1.0 - alpha) * (1.0 - alpha);
  double sum = 0;
  for (int k = 0; k < l; ++k) {
    const double j = l - k;
    sum += j * j * std::pow(decay, j) * alpha * alpha;
  }
  return sum + static_cast<double>(l) * l * std::pow(decay, l);
}

double staleness_bound(double alpha) { return 4.0 * (1.0 - alpha) * (1.0 - alpha) / alpha; }

bool check_staleness_bound(double alpha, int l) {
  return staleness_sum(alpha, l) <= staleness_bound(alpha);
}

}  // namespace dbyz::theory
