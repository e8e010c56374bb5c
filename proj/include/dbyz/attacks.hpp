#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dbyz/core.hpp"
#include "dbyz/problems.hpp"
#include "dbyz/rng.hpp"

namespace dbyz {

enum class AttackKind { None, BitFlip, LabelFlip, Mimic, Ipm, Alie, Inf, MimicWorld2 };

std::string to_string(AttackKind kind);
AttackKind parse_attack_kind(std::string_view name);

/// Coordinate value sent by every INF attacker.
inline constexpr double kInfAttackValue = 1e30;

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  double ipm_epsilon = 0.1;
  /// Empty selects the normal-quantile rule from the client counts.
  std::optional<double> alie_z;
  ClientId mimic_target = 0;
  /// IPM and ALIE statistics over every honest table entry (true) or only the
  /// fresh ones of this round (false).
  bool use_all_honest = true;
  /// World 1 of the two-world construction, for MimicWorld2.
  std::shared_ptr<const Problem> world1;
};

/// What an omniscient adversary observes before crafting its vectors.
struct AttackContext {
  std::span<const ParamVector> honest_fresh;
  std::span<const ParamVector> honest_all;
  /// Current entry of the mimic target (table entry or fresh gradient).
  std::optional<ParamVector> mimic_source;
  int round = 1;
  int n_total = 0;
  int n_byzantine = 0;
  bool problem_has_labels = false;
};

/// z with Phi(z) = (n - ceil(n/2) + byz) / n; 1.5 when that is degenerate.
double alie_auto_z(int n, int byz);

/// The gradient a Byzantine client feeds into its pipeline before the attack
/// is applied: the honest one, the label-flipped one, or World 1's.
ParamVector byzantine_base_gradient(const AttackSpec& spec, const Problem& problem, ClientId i,
                                    const ParamVector& x, RngStream& rng);

/// Gradients World 1's client i would emit at x under the shared client
/// streams (ClientGrad, i, round).
std::vector<ParamVector> mimic_world2(const Problem& world1, std::span<const ClientId> ids,
                                      const ParamVector& x, int round, std::uint64_t seed);

/// One vector per sampled Byzantine client. `honest_values` holds what each of
/// them would send if it followed the protocol on its base gradient.
std::vector<ParamVector> craft(const AttackSpec& spec, const AttackContext& ctx,
                               std::span<const ParamVector> honest_values, RngStream& rng);

}  // namespace dbyz
