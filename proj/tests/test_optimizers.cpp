#include <gtest/gtest.h>

#include <cmath>

#include "dbyz/optimizers.hpp"
#include "dbyz/oracles.hpp"

namespace dbyz {
namespace {

ParamVector vec(std::initializer_list<double> xs) {
  ParamVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

std::shared_ptr<QuadraticProblem> hetero(int n, int d, double zeta, double sigma, std::uint64_t seed = 1) {
  RngStream rng(seed, StreamTag::ProblemInit);
  return std::make_shared<QuadraticProblem>(make_hetero_quadratic(n, d, zeta, sigma, 1.0, rng));
}

HyperParams params(double eta, double alpha, double p) {
  HyperParams hp;
  hp.eta = eta;
  hp.alpha = alpha;
  hp.p = p;
  return hp;
}

TEST(AutoAlpha, Examples) {
  EXPECT_EQ(auto_alpha(1, 1, 1), 1.0);
  EXPECT_NEAR(auto_alpha(1, 0.01, 0.5), 0.18, 1e-15);
  EXPECT_EQ(auto_alpha(10, 0.1, 0.5), 1.0);
  EXPECT_THROW(auto_alpha(0, 0.1, 0.5), std::invalid_argument);
  EXPECT_THROW(auto_alpha(1, -0.1, 0.5), std::invalid_argument);
}

TEST(MomentumRefresh, Examples) {
  EXPECT_EQ(momentum_refresh(vec({5, 5}), vec({1, 2}), 1.0), vec({1, 2}));
  EXPECT_EQ(momentum_refresh(vec({2}), vec({4}), 0.5), vec({3}));
  EXPECT_TRUE(momentum_refresh(vec({0, 0}), vec({10, -10}), 0.1).isApprox(vec({1, -1})));
}

TEST(DByzSgdm, OneGradientStep) {
  QuadraticProblem q(1.0, std::vector<ParamVector>(3, ParamVector::Zero(4)), 0.0);
  RoundEnv env{q, std::vector<bool>(3, false), {}, {AggregatorKind::Avg}, params(0.3, 1.0, 1.0), 0};
  auto state = OptimizerState::initial(ParamVector::Ones(4), 3);
  dbyz_sgdm_round(state, env);
  EXPECT_TRUE(state.x.isApprox(0.7 * ParamVector::Ones(4)));
}

TEST(DByzSgdm, AggregatesAllClientsEveryRound) {
  const int n = 12;
  auto q = hetero(n, 3, 1.0, 0.1);
  std::vector<bool> byz(n, false);
  byz[10] = byz[11] = true;
  q->set_honest({true, true, true, true, true, true, true, true, true, true, false, false});
  std::vector<std::size_t> sizes;
  RoundEnv env{*q, byz, {AttackKind::Ipm}, {AggregatorKind::CoordMedian}, params(0.05, 0.5, 0.2), 3,
               [&](int, std::span<const ParamVector> in) { sizes.push_back(in.size()); }};
  auto state = OptimizerState::initial(q->initial_point(), n);
  int empty_rounds = 0;
  for (int t = 0; t < 200; ++t) empty_rounds += dbyz_sgdm_round(state, env).sampled == 0;
  EXPECT_GT(empty_rounds, 0);  // p = 0.2 over 12 clients leaves some rounds empty
  ASSERT_EQ(sizes.size(), 200u);
  for (auto s : sizes) EXPECT_EQ(s, static_cast<std::size_t>(n));
}

TEST(DByzSgdm, EmptySampleStillSteps) {
  QuadraticProblem q(1.0, std::vector<ParamVector>(2, vec({1})), 0.0);
  RoundEnv env{q, {false, false}, {}, {AggregatorKind::Avg}, params(0.5, 0.5, 1e-12), 0};
  auto state = OptimizerState::initial(vec({0}), 2);
  dbyz_sgdm_round(state, env);  // forced full round: m_i = grad(0) = -1
  const auto m = dbyz_sgdm_round(state, env);
  EXPECT_EQ(m.sampled, 0);
  EXPECT_TRUE(m.stepped);
  EXPECT_DOUBLE_EQ(state.x[0], 1.0);  // two steps of -0.5 * (-1)
}

TEST(DByzSgdm, UnsampledEntriesAreFrozen) {
  const int n = 10;
  auto q = hetero(n, 4, 1.0, 0.2);
  std::vector<bool> byz(n, false);
  byz[8] = byz[9] = true;
  RoundEnv env{*q, byz, {AttackKind::Alie}, {AggregatorKind::CenteredClip}, params(0.05, 0.3, 0.4), 8};
  auto state = OptimizerState::initial(q->initial_point(), n);
  for (int t = 1; t <= 50; ++t) {
    const auto before = state.momenta.m;
    const RoundSample sample = t == 1 ? full_round(n, t) : sample_round(n, 0.4, t, 8);
    dbyz_sgdm_round(state, env);
    for (int i = 0; i < n; ++i)
      if (!sample.contains(i)) EXPECT_TRUE(bitwise_equal(state.momenta.m[i], before[i])) << "round " << t;
    for (int i = 0; i < n; ++i) EXPECT_EQ(state.momenta.delays.tau[i] == 0, sample.contains(i));
  }
}

TEST(DByzSgdm, FullParticipationMatchesSingleNodeOracle) {
  const int n = 6, rounds = 300;
  auto q = hetero(n, 5, 2.0, 0.0);
  RoundEnv env{*q, std::vector<bool>(n, false), {}, {AggregatorKind::Avg}, params(0.1, 0.4, 1.0), 2};
  auto state = OptimizerState::initial(q->initial_point(), n);
  const auto ref = oracle::sgdm_trajectory(1.0, q->linear_terms(), 0.1, 0.4, rounds);
  for (int t = 0; t < rounds; ++t) {
    dbyz_sgdm_round(state, env);
    ASSERT_TRUE(bitwise_equal(state.x, ref[t])) << "round " << t + 1;
    for (int tau : state.momenta.delays.tau) ASSERT_EQ(tau, 0);
  }
}

TEST(DByzSgdm, MonotoneDescentWhenBenign) {
  auto q = hetero(8, 6, 1.0, 0.0);
  RoundEnv env{*q, std::vector<bool>(8, false), {}, {AggregatorKind::Avg}, params(1.0 / q->smoothness(), 1.0, 1.0), 0};
  auto state = OptimizerState::initial(q->initial_point(), 8);
  double prev = q->global_loss(state.x);
  for (int t = 0; t < 1000; ++t) {
    const auto m = dbyz_sgdm_round(state, env);
    if (m.grad_norm_sq < 1e-14) break;
    EXPECT_LT(m.loss, prev);
    prev = m.loss;
  }
}

TEST(DByzSgdm, NoAttackMatchesHonestProtocol) {
  // Byzantine clients running NA behave like honest clients whose data is the pooled data.
  const int n = 6;
  auto base = hetero(5, 3, 1.0, 0.0);
  auto b = base->linear_terms();
  b.push_back(base->honest_mean_b());
  QuadraticProblem q(1.0, b, 0.0);
  q.set_honest({true, true, true, true, true, false});
  std::vector<bool> byz(n, false);
  byz[5] = true;
  RoundEnv attacked{q, byz, {AttackKind::None}, {AggregatorKind::Avg}, params(0.1, 0.5, 0.5), 1};
  RoundEnv honest{q, std::vector<bool>(n, false), {}, {AggregatorKind::Avg}, params(0.1, 0.5, 0.5), 1};
  auto s1 = OptimizerState::initial(q.initial_point(), n), s2 = s1;
  for (int t = 0; t < 100; ++t) {
    dbyz_sgdm_round(s1, attacked);
    dbyz_sgdm_round(s2, honest);
    ASSERT_TRUE(bitwise_equal(s1.x, s2.x)) << t;
  }
}

TEST(DByzSgdm, InfKillsAvgButNotRobustRules) {
  const int n = 10;
  auto q = hetero(n, 3, 1.0, 0.0);
  std::vector<bool> byz(n, false);
  byz[9] = true;
  for (auto kind : {AggregatorKind::Avg, AggregatorKind::Krum, AggregatorKind::CoordMedian,
                    AggregatorKind::CenteredClip, AggregatorKind::Rfa}) {
    AggregatorSpec spec{kind};
    spec.krum_f = 1;
    RoundEnv env{*q, byz, {AttackKind::Inf}, spec, params(0.05, 0.9, 0.5), 0};
    auto state = OptimizerState::initial(q->initial_point(), n);
    if (kind == AggregatorKind::Avg) {
      EXPECT_THROW(dbyz_sgdm_round(state, env), DivergenceError);
      continue;
    }
    for (int t = 0; t < 100; ++t) dbyz_sgdm_round(state, env);
    EXPECT_TRUE(state.x.allFinite()) << to_string(kind);
  }
}

TEST(FedAvg, EmptySampleSkipsUpdate) {
  QuadraticProblem q(1.0, std::vector<ParamVector>(2, vec({1})), 0.0);
  for (auto run : {fedavg_round, fedavg_m_round}) {
    RoundEnv env{q, {false, false}, {}, {AggregatorKind::Avg}, params(0.5, 1.0, 1e-12), 0};
    auto state = OptimizerState::initial(vec({0}), 2);
    run(state, env);
    const double x1 = state.x[0];
    const auto m = run(state, env);
    EXPECT_FALSE(m.stepped);
    EXPECT_EQ(state.x[0], x1);
  }
}

TEST(FedAvg, AggregatesOnlySampledClients) {
  const int n = 12;
  auto q = hetero(n, 3, 1.0, 0.0);
  std::vector<std::size_t> sizes;
  std::vector<int> sampled;
  RoundEnv env{*q, std::vector<bool>(n, false), {}, {AggregatorKind::Avg}, params(0.05, 1.0, 0.5), 5,
               [&](int, std::span<const ParamVector> in) { sizes.push_back(in.size()); }};
  auto state = OptimizerState::initial(q->initial_point(), n);
  for (int t = 0; t < 50; ++t) {
    const auto m = fedavg_m_round(state, env);
    if (m.stepped) sampled.push_back(m.sampled);
  }
  ASSERT_EQ(sizes.size(), sampled.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) EXPECT_EQ(sizes[k], static_cast<std::size_t>(sampled[k]));
}

TEST(FedAvg, ByzantineMajorityIpmReversesDirection) {
  // Three clients, two of them IPM attackers, everybody sampled.
  QuadraticProblem q(1.0, {vec({-1, -2}), vec({0, 0}), vec({0, 0})}, 0.0);
  q.set_honest({true, false, false});
  AttackSpec ipm{AttackKind::Ipm};
  ipm.ipm_epsilon = 0.5;
  ParamVector agg;
  RoundEnv env{q, {false, true, true}, ipm, {AggregatorKind::CoordMedian}, params(0.1, 1.0, 1.0), 0,
               [&](int, std::span<const ParamVector> in) {
                 RngStream rng(0, StreamTag::Test);
                 agg = aggregate<double>(AggregatorSpec{AggregatorKind::CoordMedian}, in, std::nullopt, rng);
               }};
  auto state = OptimizerState::initial(vec({0, 0}), 3);
  fedavg_round(state, env);
  const ParamVector honest_mean = q.local_grad(0, vec({0, 0}));
  EXPECT_LT(agg.dot(honest_mean), 0.0);
}

TEST(FedAvg, BothOptimizersConvergeWhenBenign) {
  auto q = hetero(8, 5, 1.0, 0.0);
  for (auto kind : {OptimizerKind::DByzSgdm, OptimizerKind::FedAvgM, OptimizerKind::FedAvg}) {
    RoundEnv env{*q, std::vector<bool>(8, false), {}, {AggregatorKind::Avg}, params(0.1, 0.1, 1.0), 0};
    auto state = OptimizerState::initial(q->initial_point(), 8);
    RoundMetrics m;
    for (int t = 0; t < 3000; ++t) m = run_round(kind, state, env);
    EXPECT_LT(m.grad_norm_sq, 1e-8) << to_string(kind);
  }
}

TEST(HyperParams, Validation) {
  EXPECT_THROW(params(0, 1, 1).validate(), std::invalid_argument);
  EXPECT_THROW(params(0.1, 0, 1).validate(), std::invalid_argument);
  EXPECT_THROW(params(0.1, 1, 0).validate(), std::invalid_argument);
  EXPECT_NO_THROW(params(0.1, 1, 1).validate());
}

}  // namespace
}  // namespace dbyz
