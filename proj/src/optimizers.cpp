#include "dbyz/optimizers.hpp"

#include <algorithm>
#include <cmath>

namespace dbyz {

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::DByzSgdm: return "dbyz_sgdm";
    case OptimizerKind::FedAvg: return "fedavg";
    case OptimizerKind::FedAvgM: return "fedavg_m";
  }
  return "?";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "dbyz_sgdm") return OptimizerKind::DByzSgdm;
  if (name == "fedavg") return OptimizerKind::FedAvg;
  if (name == "fedavg_m") return OptimizerKind::FedAvgM;
  throw std::invalid_argument("unknown optimizer kind '" + std::string(name) + "'");
}

double auto_alpha(double L, double eta, double p) {
  if (!(L > 0) || !(eta > 0) || !(p > 0) || p > 1)
    throw std::invalid_argument("auto_alpha requires L > 0, eta > 0, 0 < p <= 1");
  return std::min(1.0, 9.0 * L * eta / p);
}

void HyperParams::validate() const {
  if (!(eta > 0)) throw std::invalid_argument("optimizer.eta must be > 0");
  if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("optimizer.alpha must be in (0, 1]");
  if (!(p > 0 && p <= 1)) throw std::invalid_argument("run.p must be in (0, 1]");
  if (!(beta >= 0 && beta < 1)) throw std::invalid_argument("optimizer.beta must be in [0, 1)");
  if (!(projection_radius >= 0)) throw std::invalid_argument("problem.projection_radius must be >= 0");
  if (!(divergence_bound > 0)) throw std::invalid_argument("run.divergence_bound must be > 0");
}

OptimizerState OptimizerState::initial(const ParamVector& x0, int n) {
  OptimizerState s;
  s.x = x0;
  s.momenta.m.assign(n, ParamVector::Zero(x0.size()));
  s.momenta.delays = DelayState::zeros(n);
  s.shadow.assign(n, ParamVector::Zero(x0.size()));
  s.prev_aggregate = ParamVector::Zero(x0.size());
  return s;
}

namespace {

RngStream client_stream(std::uint64_t seed, ClientId i, int round) {
  return RngStream(seed, StreamTag::ClientGrad, static_cast<std::uint64_t>(i),
                   static_cast<std::uint64_t>(round));
}

struct RoundSetup {
  int t;
  bool forced;
  RoundSample sample;
  std::vector<ClientId> honest_ids;
  std::vector<ClientId> byz_ids;
};

RoundSetup begin_round(const OptimizerState& state, const RoundEnv& env) {
  const int n = env.problem.num_clients();
  if (static_cast<int>(env.is_byz.size()) != n) throw std::invalid_argument("byzantine mask size != n");
  if (static_cast<int>(state.momenta.m.size()) != n) throw std::invalid_argument("momentum table size != n");
  RoundSetup r;
  r.t = state.round + 1;
  r.forced = env.hp.force_full_round1 && r.t == 1;
  r.sample = r.forced ? full_round(n, r.t) : sample_round(n, env.hp.p, r.t, env.seed);
  for (ClientId i : r.sample.active) (env.is_byz[i] ? r.byz_ids : r.honest_ids).push_back(i);
  return r;
}

/// What each sampled Byzantine client would send if it followed the protocol:
/// its refreshed shadow momentum, or the raw gradient when `alpha` is empty.
std::vector<ParamVector> byzantine_protocol_values(OptimizerState& state, const RoundEnv& env,
                                                   const RoundSetup& r, std::optional<double> alpha) {
  std::vector<ParamVector> values;
  values.reserve(r.byz_ids.size());
  for (ClientId i : r.byz_ids) {
    RngStream rng = client_stream(env.seed, i, r.t);
    ParamVector g = byzantine_base_gradient(env.attack, env.problem, i, state.x, rng);
    state.shadow[i] = alpha ? momentum_refresh(state.shadow[i], g, *alpha) : std::move(g);
    values.push_back(state.shadow[i]);
  }
  return values;
}

AttackContext make_context(const RoundEnv& env, int round) {
  AttackContext ctx;
  ctx.round = round;
  ctx.n_total = env.problem.num_clients();
  ctx.n_byzantine = static_cast<int>(std::count(env.is_byz.begin(), env.is_byz.end(), true));
  ctx.problem_has_labels = env.problem.has_labels();
  return ctx;
}

void project_and_check(OptimizerState& state, const RoundEnv& env, int round) {
  if (env.hp.projection_radius > 0) {
    const double norm = state.x.norm();
    if (norm > env.hp.projection_radius) state.x *= env.hp.projection_radius / norm;
  }
  if (!state.x.allFinite() || state.x.cwiseAbs().maxCoeff() > env.hp.divergence_bound)
    throw DivergenceError("iterate diverged at round " + std::to_string(round));
}

RoundMetrics finish_round(OptimizerState& state, const RoundEnv& env, const RoundSetup& r, bool stepped) {
  state.momenta.delays = update_delays(state.momenta.delays, r.sample);
  if (env.trace) env.trace->record(r.sample, state.momenta.delays);
  state.round = r.t;

  RoundMetrics m;
  m.round = r.t;
  m.stepped = stepped;
  m.grad_norm_sq = env.problem.global_grad(state.x).squaredNorm();
  m.loss = env.problem.global_loss(state.x);
  m.accuracy = env.problem.accuracy(state.x);
  m.sampled = static_cast<int>(r.sample.active.size());
  m.byz_sampled = static_cast<int>(r.byz_ids.size());
  m.byz_majority = byz_majority(r.sample, env.is_byz);
  return m;
}

ParamVector aggregate_and_step(OptimizerState& state, const RoundEnv& env, int round,
                               std::span<const ParamVector> inputs) {
  if (env.observer) env.observer(round, inputs);
  RngStream bucket_rng(env.seed, StreamTag::Bucketing, 0, static_cast<std::uint64_t>(round));
  ParamVector agg = aggregate<double>(env.aggregator, inputs, state.prev_aggregate, bucket_rng);
  state.x -= env.hp.eta * agg;
  state.prev_aggregate = agg;
  project_and_check(state, env, round);
  return agg;
}

}  // namespace

RoundMetrics dbyz_sgdm_round(OptimizerState& state, const RoundEnv& env) {
  const RoundSetup r = begin_round(state, env);
  const double alpha = r.forced ? 1.0 : env.hp.alpha;
  auto& table = state.momenta.m;

  for (ClientId i : r.honest_ids) {
    RngStream rng = client_stream(env.seed, i, r.t);
    table[i] = momentum_refresh(table[i], env.problem.stochastic_grad(i, state.x, rng), alpha);
  }

  if (!r.byz_ids.empty()) {
    const auto protocol = byzantine_protocol_values(state, env, r, alpha);
    std::vector<ParamVector> fresh, all;
    for (ClientId i : r.honest_ids) fresh.push_back(table[i]);
    for (std::size_t i = 0; i < table.size(); ++i)
      if (!env.is_byz[i]) all.push_back(table[i]);
    AttackContext ctx = make_context(env, r.t);
    ctx.honest_fresh = fresh;
    ctx.honest_all = all;
    const ClientId target = env.attack.mimic_target;
    if (target >= 0 && target < static_cast<int>(table.size())) ctx.mimic_source = table[target];
    RngStream attack_rng(env.seed, StreamTag::Attack, 0, static_cast<std::uint64_t>(r.t));
    const auto crafted = craft(env.attack, ctx, protocol, attack_rng);
    for (std::size_t k = 0; k < r.byz_ids.size(); ++k) table[r.byz_ids[k]] = crafted[k];
  }

  aggregate_and_step(state, env, r.t, table);
  return finish_round(state, env, r, true);
}

namespace {

/// Shared body of FedAvg and FedAvg-M. `use_momentum` selects what clients send.
RoundMetrics sampled_only_round(OptimizerState& state, const RoundEnv& env, bool use_momentum) {
  const RoundSetup r = begin_round(state, env);
  if (r.sample.active.empty()) return finish_round(state, env, r, false);

  const double alpha = r.forced ? 1.0 : 1.0 - env.hp.beta;
  const int n = env.problem.num_clients();
  auto& client_m = state.momenta.m;

  // What each sampled client sends, keyed by client id.
  std::vector<std::optional<ParamVector>> sent(n);
  for (ClientId i : r.honest_ids) {
    RngStream rng = client_stream(env.seed, i, r.t);
    ParamVector g = env.problem.stochastic_grad(i, state.x, rng);
    if (use_momentum) {
      client_m[i] = momentum_refresh(client_m[i], g, alpha);
      sent[i] = client_m[i];
    } else {
      sent[i] = std::move(g);
    }
  }

  if (!r.byz_ids.empty()) {
    const auto protocol = byzantine_protocol_values(
        state, env, r, use_momentum ? std::optional<double>(alpha) : std::nullopt);
    std::vector<ParamVector> fresh, all;
    for (ClientId i : r.honest_ids) fresh.push_back(*sent[i]);

    const AttackKind kind = env.attack.kind;
    const bool needs_all = kind == AttackKind::Ipm || kind == AttackKind::Alie;
    // Gradients of unsampled honest clients come from their own streams, which
    // an omniscient adversary can replay.
    auto honest_now = [&](ClientId i) -> ParamVector {
      if (sent[i]) return *sent[i];
      if (use_momentum) return client_m[i];
      RngStream rng = client_stream(env.seed, i, r.t);
      return env.problem.stochastic_grad(i, state.x, rng);
    };
    if (needs_all)
      for (ClientId i = 0; i < n; ++i)
        if (!env.is_byz[i]) all.push_back(honest_now(i));

    AttackContext ctx = make_context(env, r.t);
    ctx.honest_fresh = fresh;
    ctx.honest_all = needs_all ? std::span<const ParamVector>(all) : std::span<const ParamVector>(fresh);
    const ClientId target = env.attack.mimic_target;
    if (kind == AttackKind::Mimic && target >= 0 && target < n) ctx.mimic_source = honest_now(target);
    RngStream attack_rng(env.seed, StreamTag::Attack, 0, static_cast<std::uint64_t>(r.t));
    const auto crafted = craft(env.attack, ctx, protocol, attack_rng);
    for (std::size_t k = 0; k < r.byz_ids.size(); ++k) sent[r.byz_ids[k]] = crafted[k];
  }

  std::vector<ParamVector> inputs;
  inputs.reserve(r.sample.active.size());
  for (ClientId i : r.sample.active) inputs.push_back(std::move(*sent[i]));
  aggregate_and_step(state, env, r.t, inputs);
  return finish_round(state, env, r, true);
}

}  // namespace

RoundMetrics fedavg_round(OptimizerState& state, const RoundEnv& env) {
  return sampled_only_round(state, env, false);
}

RoundMetrics fedavg_m_round(OptimizerState& state, const RoundEnv& env) {
  return sampled_only_round(state, env, true);
}

RoundMetrics run_round(OptimizerKind kind, OptimizerState& state, const RoundEnv& env) {
  switch (kind) {
    case OptimizerKind::DByzSgdm: return dbyz_sgdm_round(state, env);
    case OptimizerKind::FedAvg: return fedavg_round(state, env);
    case OptimizerKind::FedAvgM: return fedavg_m_round(state, env);
  }
  throw std::logic_error("unknown optimizer");
}

}  // namespace dbyz
