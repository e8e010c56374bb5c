#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "dbyz/aggregators.hpp"
#include "dbyz/attacks.hpp"
#include "dbyz/optimizers.hpp"
#include "dbyz/problems.hpp"

namespace dbyz::theory {

/// Parameters of the two-world construction. p*delta*n and delta*n must be integers.
struct WorldPair {
  double delta = 0.25;
  double p = 0.25;
  double mu = 1.0;
  double zeta = 1.0;
  int n = 16;

  int biased_count() const;     // p * delta * n
  int byzantine_count() const;  // delta * n
  /// delta^{1/2} zeta / (mu p^{1/2})
  double world1_optimum() const;
  /// zeta delta^{-1/2} p^{-3/2}
  double biased_shift() const;
  /// (1 - delta p) / p^2 * zeta^2
  double world1_heterogeneity() const;
  /// delta zeta^2 / (4 p)
  double floor() const;

  /// Throws on non-integral client counts, out-of-range values, and (when
  /// `require_admissible`) on heterogeneity exceeding zeta^2.
  void validate(bool require_admissible) const;
};

/// Smallest admissible p: (-delta + sqrt(delta^2 + 4)) / 2.
double admissibility_threshold(double delta);

/// (1 - delta p) / p^2 <= 1. Throws std::logic_error if this disagrees with
/// the closed-form threshold.
bool hetero_admissibility(double delta, double p);

/// All n clients are honest; the first p*delta*n carry the linear shift.
std::shared_ptr<QuadraticProblem> build_world1(const WorldPair& wp, bool require_admissible = true);

struct World2 {
  std::shared_ptr<QuadraticProblem> problem;
  std::vector<bool> is_byz;
  AttackSpec attack;
};

/// Honest clients are plain (mu/2) x^2; the first delta*n clients are
/// Byzantine and replay World 1's gradient stream.
World2 build_world2(const WorldPair& wp, std::shared_ptr<const QuadraticProblem> world1,
                    bool require_admissible = true);

struct TwoWorldAlgorithm {
  std::string name;
  OptimizerKind optimizer = OptimizerKind::DByzSgdm;
  AggregatorSpec aggregator;
  HyperParams hp;
  int rounds = 200;
};

struct TwoWorldReport {
  std::string alg;
  WorldPair wp;
  double x_out = 0;
  double err1 = 0;
  double err2 = 0;
  double max_err = 0;
  double floor = 0;
  bool indistinguishable = false;
  std::size_t aggregator_calls = 0;

  nlohmann::json to_json() const;
};

/// Runs the algorithm on both worlds with shared seeds and compares every
/// aggregator input byte for byte. Throws std::logic_error if the streams differ.
TwoWorldReport run_two_worlds(const TwoWorldAlgorithm& alg, const WorldPair& wp, std::uint64_t seed,
                              bool require_admissible = false);

/// The report for an algorithm that outputs (x*_1 + x*_2) / 2 directly.
TwoWorldReport midpoint_policy(const WorldPair& wp);

/// Accumulated staleness S_l of the momentum deviation lemma.
double staleness_sum(double alpha, int l);
/// 4 (1 - alpha)^2 / alpha
double staleness_bound(double alpha);
bool check_staleness_bound(double alpha, int l);

}  // namespace dbyz::theory
