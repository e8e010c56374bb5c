#include "dbyz/robustness.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dbyz {

RobustnessEstimate estimate_robustness_coefficient(const AggregatorSpec& spec, double delta, int trials,
                                                   RngStream& rng, const RobustnessSetup& setup) {
  if (!(delta >= 0 && delta < 0.5)) throw std::invalid_argument("delta must be in [0, 1/2)");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const int n = setup.n;
  const int byz = static_cast<int>(std::lround(delta * n));
  const int good = n - byz;
  const int d = setup.d;
  const double coord_sd = std::sqrt(setup.rho2 / (2.0 * d));

  ParamVector centre(d);
  for (int k = 0; k < d; ++k) centre[k] = rng.normal();
  centre *= setup.centre_norm / centre.norm();

  auto draw = [&](RngStream& r) {
    ParamVector v(d);
    for (int k = 0; k < d; ++k) v[k] = centre[k] + coord_sd * r.normal();
    return v;
  };

  std::vector<double> total(setup.attacks.size(), 0.0);
  for (int t = 0; t < trials; ++t) {
    RngStream trial_rng = rng.fork(static_cast<std::uint64_t>(t));
    std::vector<ParamVector> honest;
    for (int i = 0; i < good; ++i) honest.push_back(draw(trial_rng));
    std::vector<ParamVector> byz_honest;
    for (int i = 0; i < byz; ++i) byz_honest.push_back(draw(trial_rng));
    const ParamVector xbar = mean(honest);

    AttackContext ctx;
    ctx.honest_fresh = honest;
    ctx.honest_all = honest;
    ctx.mimic_source = honest.front();
    ctx.n_total = n;
    ctx.n_byzantine = byz;

    for (std::size_t a = 0; a < setup.attacks.size(); ++a) {
      if (!std::isfinite(total[a])) continue;
      AttackSpec attack;
      attack.kind = setup.attacks[a];
      RngStream attack_rng = trial_rng.fork(1000 + a);
      std::vector<ParamVector> inputs = honest;
      for (auto& v : craft(attack, ctx, byz_honest, attack_rng)) inputs.push_back(std::move(v));

      RngStream bucket_rng = trial_rng.fork(2000 + a);
      try {
        const ParamVector out =
            aggregate<double>(spec, std::span<const ParamVector>(inputs), centre, bucket_rng);
        const double err = (out - xbar).squaredNorm();
        total[a] += std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
      } catch (const AggregationError&) {
        total[a] = std::numeric_limits<double>::infinity();
      }
    }
  }

  RobustnessEstimate est;
  const double denom = delta > 0 ? delta * setup.rho2 : 1.0;
  for (std::size_t a = 0; a < setup.attacks.size(); ++a) {
    const double ratio = total[a] / trials / denom;
    est.per_attack.emplace_back(setup.attacks[a], ratio);
    if (a == 0 || ratio > est.c_hat) {
      est.c_hat = ratio;
      est.worst = setup.attacks[a];
    }
  }
  return est;
}

}  // namespace dbyz
