#pragma once

#include <utility>
#include <vector>

#include "dbyz/aggregators.hpp"
#include "dbyz/attacks.hpp"

namespace dbyz {

/// Monte-Carlo setting for the robust-aggregator contract check.
struct RobustnessSetup {
  int n = 25;
  int d = 10;
  /// Pairwise spread E|X_i - X_j|^2 of the honest cloud.
  double rho2 = 1.0;
  /// Norm of the honest cloud's centre.
  double centre_norm = 1.0;
  std::vector<AttackKind> attacks = {AttackKind::BitFlip, AttackKind::Ipm, AttackKind::Alie,
                                     AttackKind::Inf, AttackKind::Mimic};
};

struct RobustnessEstimate {
  /// Mean squared aggregation error over trials, divided by delta * rho^2
  /// (undivided when delta = 0). +inf when the rule raised.
  std::vector<std::pair<AttackKind, double>> per_attack;
  double c_hat = 0;
  AttackKind worst = AttackKind::None;
};

/// Estimates c in E|Agg - Xbar_good|^2 <= c delta rho^2 as the worst ratio
/// over the attack suite. Honest vectors are isotropic Gaussians around a
/// random centre; centered clipping is warm-started at that centre.
RobustnessEstimate estimate_robustness_coefficient(const AggregatorSpec& spec, double delta, int trials,
                                                   RngStream& rng, const RobustnessSetup& setup = {});

}  // namespace dbyz
