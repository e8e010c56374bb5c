#include "dbyz/aggregators.hpp"

#include <stdexcept>

namespace dbyz {

std::string to_string(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::Avg: return "avg";
    case AggregatorKind::Krum: return "krum";
    case AggregatorKind::CoordMedian: return "cm";
    case AggregatorKind::CenteredClip: return "cp";
    case AggregatorKind::Rfa: return "rfa";
  }
  return "?";
}

AggregatorKind parse_aggregator_kind(std::string_view name) {
  if (name == "avg") return AggregatorKind::Avg;
  if (name == "krum") return AggregatorKind::Krum;
  if (name == "cm") return AggregatorKind::CoordMedian;
  if (name == "cp") return AggregatorKind::CenteredClip;
  if (name == "rfa") return AggregatorKind::Rfa;
  throw std::invalid_argument("unknown aggregator kind '" + std::string(name) + "'");
}

void AggregatorSpec::validate(int n) const {
  if (!(cp_radius > 0)) throw std::invalid_argument("aggregator.cp_radius must be > 0");
  if (cp_iters < 1) throw std::invalid_argument("aggregator.cp_iters must be >= 1");
  if (!(rfa_tol > 0)) throw std::invalid_argument("aggregator.rfa_tol must be > 0");
  if (rfa_max_iters < 1) throw std::invalid_argument("aggregator.rfa_max_iters must be >= 1");
  if (bucket_s < 0 || bucket_s == 1)
    throw std::invalid_argument("aggregator.bucket_s must be 0 (off) or >= 2");
  if (krum_f < 0) throw std::invalid_argument("aggregator.krum_f must be >= 0");
  if (kind == AggregatorKind::Krum && n > 0 && !(krum_f < n / 2.0 - 1.0))
    throw std::invalid_argument("aggregator.krum_f must be < n/2 - 1");
}

}  // namespace dbyz
