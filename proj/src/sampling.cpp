#include "dbyz/sampling.hpp"

#include <algorithm>
#include <stdexcept>

namespace dbyz {

bool RoundSample::contains(ClientId i) const {
  return std::binary_search(active.begin(), active.end(), i);
}

RoundSample sample_round(int n, double p, int round, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must be in (0, 1]");
  RoundSample s{round, {}};
  for (int i = 0; i < n; ++i) {
    RngStream rng(seed, StreamTag::Sampling, static_cast<std::uint64_t>(i),
                  static_cast<std::uint64_t>(round));
    if (rng.bernoulli(p)) s.active.push_back(i);
  }
  return s;
}

RoundSample full_round(int n, int round) {
  RoundSample s{round, std::vector<ClientId>(n)};
  for (int i = 0; i < n; ++i) s.active[i] = i;
  return s;
}

DelayState update_delays(const DelayState& state, const RoundSample& sample) {
  DelayState next = state;
  for (auto& t : next.tau) ++t;
  for (ClientId i : sample.active) {
    if (i < 0 || i >= static_cast<int>(next.tau.size()))
      throw std::out_of_range("sampled client outside delay table");
    next.tau[i] = 0;
  }
  return next;
}

int count_byzantine(const RoundSample& sample, const std::vector<bool>& is_byz) {
  int count = 0;
  for (ClientId i : sample.active)
    if (i < static_cast<int>(is_byz.size()) && is_byz[i]) ++count;
  return count;
}

bool byz_majority(const RoundSample& sample, const std::vector<bool>& is_byz) {
  if (sample.active.empty()) return false;
  return 2 * count_byzantine(sample, is_byz) > static_cast<int>(sample.active.size());
}

void ParticipationTrace::record(const RoundSample& sample, const DelayState& delays) {
  for (int i = 0; i < static_cast<int>(delays.tau.size()); ++i)
    rows_.push_back({sample.round, i, sample.contains(i), delays.tau[i]});
}

void ParticipationTrace::write_csv(std::ostream& os) const {
  os << "round,client,active,tau\n";
  for (const auto& r : rows_)
    os << r.round << ',' << r.client << ',' << (r.active ? 1 : 0) << ',' << r.tau << '\n';
}

}  // namespace dbyz
