#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dbyz/aggregators.hpp"
#include "dbyz/oracles.hpp"
#include "dbyz/robustness.hpp"

namespace dbyz {
namespace {

using Vs = std::vector<ParamVector>;

ParamVector vec(std::initializer_list<double> xs) {
  ParamVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

ParamVector run(AggregatorSpec spec, const Vs& vs, std::optional<ParamVector> prev = std::nullopt) {
  RngStream rng(0, StreamTag::Test);
  return aggregate<double>(spec, vs, prev, rng);
}

Vs random_cloud(RngStream& rng, int n, int d, double scale = 1.0) {
  Vs vs(n, ParamVector(d));
  for (auto& v : vs)
    for (int k = 0; k < d; ++k) v[k] = scale * rng.normal();
  return vs;
}

TEST(Aggregate, SpecExamples) {
  EXPECT_EQ(run({AggregatorKind::Avg}, {vec({1, 1}), vec({3, 3})}), vec({2, 2}));
  EXPECT_EQ(run({AggregatorKind::CoordMedian}, {vec({1, 5}), vec({3, 1}), vec({2, 9})}), vec({2, 5}));
  AggregatorSpec k{AggregatorKind::Krum};
  k.krum_f = 1;
  EXPECT_EQ(run(k, Vs(4, vec({7, 7}))), vec({7, 7}));
}

TEST(Aggregate, AvgRejectsNonFinite) {
  EXPECT_THROW(run({AggregatorKind::Avg}, {vec({1}), vec({std::numeric_limits<double>::infinity()})}),
               AggregationError);
  EXPECT_THROW(run({AggregatorKind::Avg}, {}), AggregationError);
}

TEST(CoordinateMedian, Examples) {
  EXPECT_EQ(coordinate_median<double>(Vs{vec({1}), vec({3}), vec({2})}), vec({2}));
  EXPECT_EQ(coordinate_median<double>(Vs{vec({1}), vec({3})}), vec({2}));
  EXPECT_EQ(coordinate_median<double>(Vs{vec({0, 10}), vec({1, 0}), vec({2, 5}), vec({100, 6})}), vec({1.5, 5.5}));
}

TEST(CoordinateMedian, MatchesSortOracle) {
  RngStream rng(11, StreamTag::Test);
  for (int t = 0; t < 300; ++t) {
    const auto vs = random_cloud(rng, 1 + static_cast<int>(rng() % 15), 1 + static_cast<int>(rng() % 8), 10);
    EXPECT_TRUE(bitwise_equal(coordinate_median<double>(vs), oracle::coordinate_median(vs)));
  }
}

TEST(Krum, Examples) {
  EXPECT_EQ(krum<double>(Vs{vec({0}), vec({0}), vec({0}), vec({5})}, 0), vec({0}));
  EXPECT_EQ(krum<double>(Vs{vec({1, 0}), vec({1.1, 0}), vec({0.9, 0}), vec({10, 10}), vec({1, 0.1})}, 1),
            vec({1, 0}));
  EXPECT_EQ(krum<double>(Vs(5, vec({2, 2})), 1), vec({2, 2}));
}

TEST(Krum, TieBreakPicksLowestIndex) {
  // Four corners of a square all score the same.
  const Vs vs = {vec({0, 0}), vec({1, 0}), vec({1, 1}), vec({0, 1})};
  EXPECT_EQ(krum<double>(vs, 0), vec({0, 0}));
}

TEST(Krum, PreconditionMessage) {
  try {
    krum<double>(Vs{vec({0}), vec({1}), vec({2})}, 1);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "krum requires n ≥ f+3");
  }
}

TEST(Krum, MatchesBruteForceOracle) {
  RngStream rng(12, StreamTag::Test);
  for (int t = 0; t < 300; ++t) {
    const int n = 3 + static_cast<int>(rng() % 13);
    const int f = static_cast<int>(rng() % (n - 2));
    const auto vs = random_cloud(rng, n, 1 + static_cast<int>(rng() % 8));
    EXPECT_TRUE(bitwise_equal(krum<double>(vs, f), vs[oracle::krum_index(vs, f)]));
  }
}

TEST(Krum, NonFiniteScoresInfinite) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto s = krum_scores<double>(Vs{vec({0}), vec({1}), vec({inf}), vec({0.5})}, 0);
  EXPECT_TRUE(std::isinf(s[2]));
  EXPECT_TRUE(std::isfinite(s[0]));
}

TEST(CenteredClip, Examples) {
  EXPECT_TRUE(centered_clip<double>(Vs{vec({2, 0}), vec({0, 2})}, vec({0, 0}), 1e18, 1).isApprox(vec({1, 1})));
  EXPECT_EQ(centered_clip<double>(Vs{vec({10})}, vec({0}), 1.0, 1), vec({1}));
  EXPECT_EQ(centered_clip<double>(Vs{vec({0.5}), vec({10})}, vec({0}), 1.0, 1), vec({0.75}));
}

TEST(CenteredClip, IgnoresNonFinite) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(centered_clip<double>(Vs{vec({0.5}), vec({nan})}, vec({0}), 1.0, 1), vec({0.25}));
}

TEST(Rfa, Examples) {
  EXPECT_NEAR(rfa_geometric_median<double>(Vs{vec({0}), vec({0}), vec({1})}, 1e-10, 100)[0], 0.0, 1e-9);
  EXPECT_EQ(rfa_geometric_median<double>(Vs(3, vec({4, 4})), 1e-10, 100), vec({4, 4}));
}

TEST(Rfa, TriangleAgainstGrid) {
  const Vs vs = {vec({0, 0}), vec({2, 0}), vec({1, 5})};
  const auto z = rfa_geometric_median<double>(vs, 1e-10, 100);
  const double grid = oracle::geometric_median_grid_min(vs, -1.0, 6.0);
  EXPECT_LE(geometric_median_objective<double>(vs, z), grid + 1e-6);
}

TEST(Rfa, ReturnsInputThatIsOptimal) {
  // An obtuse triangle: the geometric median is the obtuse vertex.
  const Vs vs = {vec({0, 0}), vec({10, 0.1}), vec({-10, 0.1})};
  EXPECT_EQ(rfa_geometric_median<double>(vs, 1e-10, 100), vec({0, 0}));
}

TEST(Rfa, RandomInstancesAgainstGrid) {
  RngStream rng(13, StreamTag::Test);
  for (int t = 0; t < 30; ++t) {
    Vs vs(1 + rng() % 15, ParamVector(2));
    for (auto& v : vs) v << rng.uniform(), rng.uniform();
    const auto z = rfa_geometric_median<double>(vs, 1e-10, 100);
    EXPECT_LE(geometric_median_objective<double>(vs, z), oracle::geometric_median_grid_min(vs) + 1e-6);
  }
}

TEST(Bucketing, Examples) {
  const Vs vs = {vec({0}), vec({2}), vec({4}), vec({6})};
  const std::vector<std::size_t> order = {2, 0, 3, 1};
  const auto b = bucket_means<double>(vs, order, 2);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0], vec({2}));
  EXPECT_EQ(b[1], vec({4}));

  RngStream rng(3, StreamTag::Bucketing);
  auto singles = bucketize<double>(vs, 1, rng);
  std::sort(singles.begin(), singles.end(), [](const auto& a, const auto& c) { return a[0] < c[0]; });
  EXPECT_EQ(singles, vs);
  const auto one = bucketize<double>(vs, 4, rng);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], vec({3}));
}

TEST(Bucketing, LastBucketMayBeSmaller) {
  const Vs vs = {vec({1}), vec({2}), vec({3}), vec({4}), vec({5})};
  const std::vector<std::size_t> order = {0, 1, 2, 3, 4};
  const auto b = bucket_means<double>(vs, order, 2);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[2], vec({5}));
}

TEST(Aggregate, PermutationEquivariance) {
  RngStream rng(14, StreamTag::Test);
  for (auto kind : {AggregatorKind::Avg, AggregatorKind::Krum, AggregatorKind::CoordMedian,
                    AggregatorKind::CenteredClip, AggregatorKind::Rfa}) {
    AggregatorSpec spec{kind};
    spec.krum_f = 2;
    for (int t = 0; t < 20; ++t) {
      Vs vs = random_cloud(rng, 11, 4);
      const ParamVector prev = random_cloud(rng, 1, 4)[0];
      const ParamVector a = run(spec, vs, prev);
      std::vector<std::size_t> perm(vs.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      Vs shuffled;
      for (auto i : perm) shuffled.push_back(vs[i]);
      const ParamVector b = run(spec, shuffled, prev);
      if (kind == AggregatorKind::Rfa) EXPECT_LT((a - b).norm(), 1e-8) << to_string(kind);
      else EXPECT_LT((a - b).norm(), 1e-12) << to_string(kind);
    }
  }
}

TEST(Aggregate, Quarantine) {
  RngStream rng(15, StreamTag::Test);
  const double M = 1e6;
  for (int t = 0; t < 50; ++t) {
    const int n = 11, bad = (n - 1) / 2;
    Vs vs = random_cloud(rng, n, 3);
    for (int i = 0; i < bad; ++i)
      for (int k = 0; k < 3; ++k) vs[i][k] = (rng.uniform() * 2 - 1) * M;
    const Vs honest(vs.begin() + bad, vs.end());

    const auto cm = run({AggregatorKind::CoordMedian}, vs);
    for (int k = 0; k < 3; ++k) {
      double lo = honest[0][k], hi = honest[0][k];
      for (const auto& h : honest) lo = std::min(lo, h[k]), hi = std::max(hi, h[k]);
      EXPECT_GE(cm[k], lo);
      EXPECT_LE(cm[k], hi);
    }

    AggregatorSpec cp{AggregatorKind::CenteredClip};
    cp.cp_radius = 0.5;
    cp.cp_iters = 3;
    const ParamVector v0 = ParamVector::Zero(3);
    double max_honest = 0;
    for (const auto& h : honest) max_honest = std::max(max_honest, h.norm());
    EXPECT_LE((run(cp, vs, v0) - v0).norm(), max_honest + cp.cp_radius * cp.cp_iters + 1e-12);

    AggregatorSpec k{AggregatorKind::Krum};
    k.krum_f = bad;
    EXPECT_LE(run(k, vs).cwiseAbs().maxCoeff(), M);
    EXPECT_TRUE(run({AggregatorKind::Rfa}, vs).allFinite());
  }
}

TEST(Aggregate, SurvivesNonFiniteInputs) {
  const double inf = std::numeric_limits<double>::infinity();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Vs vs = {vec({1, 1}), vec({1.1, 0.9}), vec({0.9, 1.1}), vec({inf, inf}), vec({nan, 0})};
  for (auto kind : {AggregatorKind::Krum, AggregatorKind::CoordMedian, AggregatorKind::CenteredClip,
                    AggregatorKind::Rfa}) {
    AggregatorSpec spec{kind};
    spec.krum_f = 1;
    EXPECT_TRUE(run(spec, vs, vec({1, 1})).allFinite()) << to_string(kind);
  }
}

TEST(Aggregate, IdempotentOnConsensus) {
  const ParamVector v = vec({0.3, -2, 7});
  for (auto kind : {AggregatorKind::Avg, AggregatorKind::Krum, AggregatorKind::CoordMedian,
                    AggregatorKind::CenteredClip, AggregatorKind::Rfa}) {
    for (int s : {0, 2}) {
      AggregatorSpec spec{kind};
      spec.bucket_s = s;
      spec.krum_f = 1;
      const auto out = run(spec, Vs(7, v), v);
      if (kind == AggregatorKind::Rfa) EXPECT_LT((out - v).norm(), 1e-10);
      else EXPECT_EQ(out, v) << to_string(kind);
    }
  }
}

TEST(Aggregate, BucketingUsesItsStream) {
  RngStream rng(16, StreamTag::Test);
  const Vs vs = random_cloud(rng, 10, 3);
  AggregatorSpec spec{AggregatorKind::CoordMedian};
  spec.bucket_s = 2;
  RngStream a(1, StreamTag::Bucketing, 0, 5), b(1, StreamTag::Bucketing, 0, 5);
  EXPECT_TRUE(bitwise_equal(aggregate<double>(spec, vs, std::nullopt, a), aggregate<double>(spec, vs, std::nullopt, b)));
}

TEST(AggregatorSpec, Validation) {
  AggregatorSpec k{AggregatorKind::Krum};
  k.krum_f = 12;
  EXPECT_THROW(k.validate(25), std::invalid_argument);
  AggregatorSpec cp{AggregatorKind::CenteredClip};
  cp.cp_radius = 0;
  EXPECT_THROW(cp.validate(25), std::invalid_argument);
  EXPECT_EQ(parse_aggregator_kind("cp"), AggregatorKind::CenteredClip);
  EXPECT_THROW(parse_aggregator_kind("median"), std::invalid_argument);
}

TEST(Robustness, AvgUnboundedUnderInf) {
  RngStream rng(0, StreamTag::Robustness);
  const auto est = estimate_robustness_coefficient({AggregatorKind::Avg}, 0.2, 50, rng);
  EXPECT_TRUE(!std::isfinite(est.c_hat) || est.c_hat > 1e20);
  EXPECT_EQ(est.worst, AttackKind::Inf);
}

TEST(Robustness, MedianFiniteAtTwentyPercent) {
  RngStream rng(0, StreamTag::Robustness);
  AggregatorSpec spec{AggregatorKind::CoordMedian};
  spec.bucket_s = 2;
  const auto est = estimate_robustness_coefficient(spec, 0.2, 1000, rng);
  EXPECT_TRUE(std::isfinite(est.c_hat));
  EXPECT_GT(est.c_hat, 0);
  EXPECT_LT(est.c_hat, 10);
}

TEST(Robustness, NoByzantineMeansSmallError) {
  RngStream rng(0, StreamTag::Robustness);
  const auto est = estimate_robustness_coefficient({AggregatorKind::CoordMedian}, 0.0, 500, rng);
  EXPECT_TRUE(std::isfinite(est.c_hat));
  EXPECT_LT(est.c_hat, 0.5);
}

}  // namespace
}  // namespace dbyz
