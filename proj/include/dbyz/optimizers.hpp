#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dbyz/aggregators.hpp"
#include "dbyz/attacks.hpp"
#include "dbyz/core.hpp"
#include "dbyz/problems.hpp"
#include "dbyz/sampling.hpp"

namespace dbyz {

enum class OptimizerKind { DByzSgdm, FedAvg, FedAvgM };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

/// alpha = min(1, 9 L eta / p).
double auto_alpha(double L, double eta, double p);

/// (1 - alpha) m_prev + alpha grad.
template <typename Derived1, typename Derived2>
Vector<typename Derived1::Scalar> momentum_refresh(const Eigen::MatrixBase<Derived1>& m_prev,
                                                   const Eigen::MatrixBase<Derived2>& grad,
                                                   typename Derived1::Scalar alpha) {
  using Scalar = typename Derived1::Scalar;
  return (Scalar(1) - alpha) * m_prev + alpha * grad;
}

struct HyperParams {
  double eta = 0.1;
  /// Client momentum weight on the fresh gradient. Resolved by the caller
  /// when auto_alpha is set.
  double alpha = 1.0;
  bool auto_alpha = false;
  double p = 1.0;
  /// Client momentum of FedAvg-M: m <- beta m + (1 - beta) g.
  double beta = 0.9;
  /// Round 1 runs with every client active and alpha = 1.
  bool force_full_round1 = true;
  /// Radius of the projection ball around the origin; 0 disables it.
  double projection_radius = 0.0;
  /// Runs abort once any iterate coordinate exceeds this magnitude.
  double divergence_bound = 1e15;

  void validate() const;
};

/// Server-side cache of one momentum vector per client plus its staleness.
struct MomentumTable {
  std::vector<ParamVector> m;
  DelayState delays;
};

struct OptimizerState {
  ParamVector x;
  MomentumTable momenta;
  /// Protocol-following momenta of Byzantine clients; what they would send.
  std::vector<ParamVector> shadow;
  /// Number of completed rounds.
  int round = 0;
  ParamVector prev_aggregate;

  static OptimizerState initial(const ParamVector& x0, int n);
};

struct RoundMetrics {
  int round = 0;
  double grad_norm_sq = 0;
  double loss = 0;
  std::optional<double> accuracy;
  int sampled = 0;
  int byz_sampled = 0;
  bool byz_majority = false;
  /// False when the round skipped its update (FedAvg variants on empty samples).
  bool stepped = true;
};

/// Sees every aggregator input, in order, before aggregation runs.
using AggregationObserver = std::function<void(int round, std::span<const ParamVector> inputs)>;

/// Everything a round needs besides the mutable state.
struct RoundEnv {
  const Problem& problem;
  std::vector<bool> is_byz;
  AttackSpec attack;
  AggregatorSpec aggregator;
  HyperParams hp;
  std::uint64_t seed = 0;
  AggregationObserver observer;
  /// Receives each round's participation and delays, if set.
  ParticipationTrace* trace = nullptr;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One round of delayed momentum aggregation: sampled clients refresh their
/// momentum, the rest keep their cached entries, and the rule aggregates all
/// n entries.
RoundMetrics dbyz_sgdm_round(OptimizerState& state, const RoundEnv& env);

/// Sampled-only aggregation of raw stochastic gradients. Empty samples skip.
RoundMetrics fedavg_round(OptimizerState& state, const RoundEnv& env);

/// Sampled-only aggregation of client momenta. Empty samples skip.
RoundMetrics fedavg_m_round(OptimizerState& state, const RoundEnv& env);

RoundMetrics run_round(OptimizerKind kind, OptimizerState& state, const RoundEnv& env);

}  // namespace dbyz
