#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dbyz/core.hpp"
#include "dbyz/rng.hpp"

namespace dbyz {

enum class AggregatorKind { Avg, Krum, CoordMedian, CenteredClip, Rfa };

std::string to_string(AggregatorKind kind);
AggregatorKind parse_aggregator_kind(std::string_view name);

struct AggregatorSpec {
  AggregatorKind kind = AggregatorKind::Avg;
  int krum_f = 0;
  double cp_radius = 1.0;
  int cp_iters = 1;
  double rfa_tol = 1e-10;
  int rfa_max_iters = 100;
  // 0 disables bucketing.
  int bucket_s = 0;

  /// Throws std::invalid_argument naming the offending field. `n` is the
  /// number of vectors the rule will see (0 skips the Krum bound).
  void validate(int n = 0) const;
};

/// Inputs of one aggregation call. Under delayed aggregation `vectors` holds
/// one entry per client (fresh or cached), never only the sampled subset.
struct AggregationInput {
  std::span<const ParamVector> vectors;
  std::optional<ParamVector> prev_aggregate;
};

inline constexpr double kRfaSmoothing = 1e-12;

namespace detail {

template <typename Scalar>
Scalar sort_key(Scalar v) {
  // NaN sorts with +inf so it can only land in the tail.
  return std::isnan(v) ? std::numeric_limits<Scalar>::infinity() : v;
}

}  // namespace detail

/// Median per coordinate; an even count takes the midpoint of the middle two.
template <typename Scalar>
Vector<Scalar> coordinate_median(std::span<const Vector<Scalar>> vs) {
  if (vs.empty()) throw AggregationError("empty aggregation input");
  const auto d = vs.front().size();
  const std::size_t n = vs.size();
  Vector<Scalar> out(d);
  std::vector<Scalar> column(n);
  for (Eigen::Index k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (vs[i].size() != d) throw std::invalid_argument("dimension mismatch");
      column[i] = detail::sort_key(vs[i][k]);
    }
    std::sort(column.begin(), column.end());
    out[k] = (n % 2 == 1) ? column[n / 2] : (column[n / 2 - 1] + column[n / 2]) / Scalar(2);
  }
  if (!out.allFinite()) throw AggregationError("coordinate median dominated by non-finite inputs");
  return out;
}

/// Krum scores: sum of squared distances to the n - f - 2 nearest other
/// vectors. Non-finite candidates score +inf and sit at +inf distance from
/// every other candidate.
template <typename Scalar>
std::vector<Scalar> krum_scores(std::span<const Vector<Scalar>> vs, int f) {
  const int n = static_cast<int>(vs.size());
  if (f < 0 || n < f + 3) throw std::invalid_argument("krum requires n ≥ f+3");
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  std::vector<bool> finite(n);
  for (int i = 0; i < n; ++i) finite[i] = vs[i].allFinite();

  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0;
    for (int j = i + 1; j < n; ++j) {
      Scalar d2 = (finite[i] && finite[j]) ? (vs[i] - vs[j]).squaredNorm() : inf;
      if (std::isnan(d2)) d2 = inf;
      dist(i, j) = dist(j, i) = d2;
    }
  }

  const int neighbours = n - f - 2;
  std::vector<Scalar> scores(n, inf);
  std::vector<Scalar> row;
  row.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    if (!finite[i]) continue;
    row.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) row.push_back(dist(i, j));
    std::partial_sort(row.begin(), row.begin() + neighbours, row.end());
    scores[i] = std::accumulate(row.begin(), row.begin() + neighbours, Scalar(0));
  }
  return scores;
}

/// Returns the candidate with minimal Krum score; ties go to the lowest index.
template <typename Scalar>
Vector<Scalar> krum(std::span<const Vector<Scalar>> vs, int f) {
  const auto scores = krum_scores(vs, f);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] < scores[best]) best = i;
  if (!std::isfinite(scores[best])) throw AggregationError("krum found no finite candidate");
  return vs[best];
}

template <typename Derived>
Vector<typename Derived::Scalar> clip_to_radius(const Eigen::MatrixBase<Derived>& z,
                                                typename Derived::Scalar radius) {
  using Scalar = typename Derived::Scalar;
  const Scalar norm = z.norm();
  if (norm == Scalar(0)) return Vector<Scalar>::Zero(z.size());
  return z * std::min(Scalar(1), radius / norm);
}

/// Centered clipping: v <- v + (1/n) sum_i clip(x_i - v, radius), `iters` times
/// from v0. Non-finite inputs contribute a zero step.
template <typename Scalar>
Vector<Scalar> centered_clip(std::span<const Vector<Scalar>> vs, const Vector<Scalar>& v0,
                             Scalar radius, int iters) {
  if (vs.empty()) throw AggregationError("empty aggregation input");
  if (!(radius > 0)) throw std::invalid_argument("cp_radius must be > 0");
  if (iters < 1) throw std::invalid_argument("cp_iters must be >= 1");
  Vector<Scalar> v = v0;
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(vs.size());
  for (int it = 0; it < iters; ++it) {
    Vector<Scalar> step = Vector<Scalar>::Zero(v.size());
    for (const auto& x : vs) {
      if (x.size() != v.size()) throw std::invalid_argument("dimension mismatch");
      if (!x.allFinite()) continue;
      step += clip_to_radius(x - v, radius);
    }
    v += inv_n * step;
  }
  return v;
}

/// Sum of Euclidean distances from z to the finite inputs.
template <typename Scalar>
Scalar geometric_median_objective(std::span<const Vector<Scalar>> vs, const Vector<Scalar>& z) {
  Scalar total = 0;
  for (const auto& v : vs)
    if (v.allFinite()) total += (v - z).norm();
  return total;
}

namespace detail {

/// True when input `j` is itself a geometric median: the unit vectors from it
/// to the other inputs sum to a norm no larger than its multiplicity.
template <typename Scalar>
bool is_median_anchor(std::span<const Vector<Scalar>> pts, std::size_t j) {
  Vector<Scalar> pull = Vector<Scalar>::Zero(pts[j].size());
  Scalar multiplicity = 0;
  for (const auto& v : pts) {
    const Scalar dist = (v - pts[j]).norm();
    if (dist <= Scalar(kRfaSmoothing)) multiplicity += 1;
    else pull += (v - pts[j]) / dist;
  }
  return pull.norm() <= multiplicity;
}

}  // namespace detail

/// Smoothed Weiszfeld iteration for the geometric median, started from the
/// mean, with step doubling along each Weiszfeld direction. Non-finite inputs
/// get zero weight. Weiszfeld creeps towards optima that sit on an input, so
/// the input nearest the iterate is tested for optimality each round.
template <typename Scalar>
Vector<Scalar> rfa_geometric_median(std::span<const Vector<Scalar>> vs, Scalar tol, int max_iters) {
  if (vs.empty()) throw AggregationError("empty aggregation input");
  std::vector<Vector<Scalar>> finite;
  finite.reserve(vs.size());
  for (const auto& v : vs)
    if (v.allFinite()) finite.push_back(v);
  if (finite.empty()) throw AggregationError("rfa found no finite input");

  std::span<const Vector<Scalar>> pts(finite);
  Vector<Scalar> z = mean(pts);
  for (int it = 0; it < max_iters; ++it) {
    Vector<Scalar> num = Vector<Scalar>::Zero(z.size());
    Scalar den = 0;
    std::size_t nearest = 0;
    Scalar nearest_dist = std::numeric_limits<Scalar>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Scalar dist = (pts[i] - z).norm();
      if (dist < nearest_dist) nearest_dist = dist, nearest = i;
      const Scalar w = Scalar(1) / std::max(dist, Scalar(kRfaSmoothing));
      num += w * pts[i];
      den += w;
    }
    if (detail::is_median_anchor(pts, nearest)) return pts[nearest];
    Vector<Scalar> next = num / den;
    // Extrapolate along the Weiszfeld direction while the objective keeps falling.
    const Vector<Scalar> dir = next - z;
    Scalar best = geometric_median_objective(pts, next);
    for (Scalar lambda = 2; lambda <= Scalar(1024); lambda *= 2) {
      Vector<Scalar> trial = z + lambda * dir;
      const Scalar obj = geometric_median_objective(pts, trial);
      if (!(obj < best)) break;
      best = obj;
      next = std::move(trial);
    }
    const Scalar step = (next - z).norm();
    z = std::move(next);
    if (step < tol) break;
  }
  return z;
}

/// Bucket means over an explicit permutation: consecutive groups of `s`
/// indices from `order`, the last group possibly smaller.
template <typename Scalar>
std::vector<Vector<Scalar>> bucket_means(std::span<const Vector<Scalar>> vs,
                                         std::span<const std::size_t> order, int s) {
  if (s < 1) throw std::invalid_argument("bucket size must be >= 1");
  if (order.size() != vs.size()) throw std::invalid_argument("permutation size mismatch");
  std::vector<Vector<Scalar>> out;
  out.reserve((vs.size() + s - 1) / s);
  for (std::size_t start = 0; start < order.size(); start += s) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(s));
    Vector<Scalar> acc = vs[order[start]];
    for (std::size_t k = start + 1; k < end; ++k) acc += vs[order[k]];
    out.push_back(acc / static_cast<Scalar>(end - start));
  }
  return out;
}

template <typename Scalar>
std::vector<Vector<Scalar>> bucketize(std::span<const Vector<Scalar>> vs, int s, RngStream& rng) {
  std::vector<std::size_t> order(vs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return bucket_means<Scalar>(vs, order, s);
}

/// Krum's Byzantine budget after bucketing, capped so n_buckets >= f + 3 holds.
inline int bucketed_krum_f(int krum_f, int n_buckets) {
  return std::clamp(krum_f, 0, std::max(0, n_buckets - 3));
}

namespace detail {

template <typename Scalar>
Vector<Scalar> apply_rule(const AggregatorSpec& spec, std::span<const Vector<Scalar>> vs, int krum_f,
                          const std::optional<Vector<Scalar>>& prev) {
  switch (spec.kind) {
    case AggregatorKind::Avg: {
      for (const auto& v : vs)
        if (!v.allFinite()) throw AggregationError("non-finite input to avg");
      return mean(vs);
    }
    case AggregatorKind::CoordMedian:
      return coordinate_median(vs);
    case AggregatorKind::Krum: {
      // Fewer than three candidates leave Krum without neighbours to score.
      if (vs.size() < 3) return coordinate_median(vs);
      return krum(vs, std::clamp(krum_f, 0, static_cast<int>(vs.size()) - 3));
    }
    case AggregatorKind::CenteredClip: {
      const Vector<Scalar> v0 =
          prev ? *prev : Vector<Scalar>(Vector<Scalar>::Zero(vs.front().size()));
      return centered_clip(vs, v0, static_cast<Scalar>(spec.cp_radius), spec.cp_iters);
    }
    case AggregatorKind::Rfa:
      return rfa_geometric_median(vs, static_cast<Scalar>(spec.rfa_tol), spec.rfa_max_iters);
  }
  throw std::logic_error("unknown aggregator");
}

}  // namespace detail

/// Robust aggregation entry point: optional bucketing, then the base rule.
/// `rng` is consumed only when bucketing is on.
template <typename Scalar>
Vector<Scalar> aggregate(const AggregatorSpec& spec, std::span<const Vector<Scalar>> vectors,
                         const std::optional<Vector<Scalar>>& prev_aggregate, RngStream& rng) {
  if (vectors.empty()) throw AggregationError("empty aggregation input");
  check_same_dim(vectors);
  if (spec.bucket_s > 0) {
    auto buckets = bucketize(vectors, spec.bucket_s, rng);
    const int f = bucketed_krum_f(spec.krum_f, static_cast<int>(buckets.size()));
    return detail::apply_rule<Scalar>(spec, std::span<const Vector<Scalar>>(buckets), f,
                                      prev_aggregate);
  }
  return detail::apply_rule(spec, vectors, spec.krum_f, prev_aggregate);
}

inline ParamVector aggregate(const AggregatorSpec& spec, const AggregationInput& input, RngStream& rng) {
  return aggregate<double>(spec, input.vectors, input.prev_aggregate, rng);
}

}  // namespace dbyz
