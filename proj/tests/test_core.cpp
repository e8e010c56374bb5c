#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dbyz/core.hpp"
#include "dbyz/rng.hpp"

namespace dbyz {
namespace {

ParamVector vec(std::initializer_list<double> xs) {
  ParamVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

TEST(NormSq, Examples) {
  EXPECT_EQ(l2_norm_sq(vec({0, 0, 0})), 0.0);
  EXPECT_EQ(l2_norm_sq(vec({3, 4})), 25.0);
  EXPECT_EQ(l2_norm_sq(vec({1, 1, 1, 1})), 4.0);
}

TEST(NormSq, RejectsNonFinite) {
  EXPECT_THROW(l2_norm_sq(vec({1, std::numeric_limits<double>::quiet_NaN()})), std::domain_error);
  EXPECT_THROW(l2_norm_sq(vec({std::numeric_limits<double>::infinity()})), std::domain_error);
}

TEST(Mean, Examples) {
  EXPECT_TRUE(mean({vec({1, 1})}).isApprox(vec({1, 1})));
  EXPECT_EQ(mean({vec({0, 0}), vec({2, 4})}), vec({1, 2}));
  EXPECT_EQ(mean({vec({1}), vec({2}), vec({3}), vec({6})}), vec({3}));
}

TEST(Mean, Errors) {
  EXPECT_THROW(mean(std::vector<ParamVector>{}), AggregationError);
  EXPECT_THROW(mean({vec({1, 2}), vec({1})}), std::invalid_argument);
}

TEST(Rng, SameKeySameSequence) {
  RngStream a(5, StreamTag::Sampling, 3, 7), b(5, StreamTag::Sampling, 3, 7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, KeysAreIndependent) {
  RngStream a(5, StreamTag::Sampling, 3, 7);
  EXPECT_NE(a.key(), RngStream(5, StreamTag::Sampling, 7, 3).key());
  EXPECT_NE(a.key(), RngStream(5, StreamTag::Attack, 3, 7).key());
  EXPECT_NE(a.key(), RngStream(6, StreamTag::Sampling, 3, 7).key());
}

TEST(Rng, UniformMoments) {
  RngStream r(1, StreamTag::Test);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 0.005);
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12, 0.002);
}

TEST(Rng, ForkDoesNotAdvanceParent) {
  RngStream a(9, StreamTag::Test), b(9, StreamTag::Test);
  (void)a.fork(1);
  EXPECT_EQ(a(), b());
}

}  // namespace
}  // namespace dbyz
