#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "dbyz/core.hpp"
#include "dbyz/rng.hpp"

namespace dbyz {

/// Clients active in one round. May be empty.
struct RoundSample {
  int round = 1;
  std::vector<ClientId> active;  // ascending

  bool contains(ClientId i) const;
};

/// Rounds since each client last appeared in an active set.
struct DelayState {
  std::vector<int> tau;

  static DelayState zeros(int n) { return DelayState{std::vector<int>(n, 0)}; }
};

/// Bernoulli participation: client i is active iff its (client, round)
/// stream draws below p. `seed` is the experiment master seed.
RoundSample sample_round(int n, double p, int round, std::uint64_t seed);

/// Full participation, used for the forced first round.
RoundSample full_round(int n, int round);

DelayState update_delays(const DelayState& state, const RoundSample& sample);

/// Strict majority of Byzantine clients inside the sample; empty -> false.
bool byz_majority(const RoundSample& sample, const std::vector<bool>& is_byz);

int count_byzantine(const RoundSample& sample, const std::vector<bool>& is_byz);

/// Participation trace rows: round,client,active,tau.
class ParticipationTrace {
 public:
  void record(const RoundSample& sample, const DelayState& delays);
  void write_csv(std::ostream& os) const;

 private:
  struct Row {
    int round;
    int client;
    bool active;
    int tau;
  };
  std::vector<Row> rows_;
};

}  // namespace dbyz
