#include "dbyz/attacks.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <stdexcept>

namespace dbyz {

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::None: return "NA";
    case AttackKind::BitFlip: return "BF";
    case AttackKind::LabelFlip: return "LF";
    case AttackKind::Mimic: return "mimic";
    case AttackKind::Ipm: return "IPM";
    case AttackKind::Alie: return "ALIE";
    case AttackKind::Inf: return "INF";
    case AttackKind::MimicWorld2: return "mimic_world2";
  }
  return "?";
}

AttackKind parse_attack_kind(std::string_view name) {
  if (name == "NA") return AttackKind::None;
  if (name == "BF") return AttackKind::BitFlip;
  if (name == "LF") return AttackKind::LabelFlip;
  if (name == "mimic") return AttackKind::Mimic;
  if (name == "IPM") return AttackKind::Ipm;
  if (name == "ALIE") return AttackKind::Alie;
  if (name == "INF") return AttackKind::Inf;
  throw std::invalid_argument("unknown attack kind '" + std::string(name) + "'");
}

double alie_auto_z(int n, int byz) {
  if (n <= 0) return 1.5;
  const double q = static_cast<double>(n - (n + 1) / 2 + byz) / n;
  if (!(q > 0.5 && q < 1.0)) return 1.5;
  return boost::math::quantile(boost::math::normal_distribution<double>(), q);
}

ParamVector byzantine_base_gradient(const AttackSpec& spec, const Problem& problem, ClientId i,
                                    const ParamVector& x, RngStream& rng) {
  switch (spec.kind) {
    case AttackKind::LabelFlip:
      return problem.flipped_label_grad(i, x, rng);
    case AttackKind::MimicWorld2:
      if (!spec.world1) throw std::invalid_argument("mimic_world2 needs a World 1 problem");
      return spec.world1->stochastic_grad(i, x, rng);
    default:
      return problem.stochastic_grad(i, x, rng);
  }
}

std::vector<ParamVector> mimic_world2(const Problem& world1, std::span<const ClientId> ids,
                                      const ParamVector& x, int round, std::uint64_t seed) {
  std::vector<ParamVector> out;
  out.reserve(ids.size());
  for (ClientId i : ids) {
    RngStream rng(seed, StreamTag::ClientGrad, static_cast<std::uint64_t>(i),
                  static_cast<std::uint64_t>(round));
    out.push_back(world1.stochastic_grad(i, x, rng));
  }
  return out;
}

namespace {

std::span<const ParamVector> statistics_pool(const AttackSpec& spec, const AttackContext& ctx) {
  if (!spec.use_all_honest && !ctx.honest_fresh.empty()) return ctx.honest_fresh;
  if (ctx.honest_all.empty()) throw std::invalid_argument("attack needs at least one honest vector");
  return ctx.honest_all;
}

}  // namespace

std::vector<ParamVector> craft(const AttackSpec& spec, const AttackContext& ctx,
                               std::span<const ParamVector> honest_values, RngStream&) {
  const std::size_t count = honest_values.size();
  std::vector<ParamVector> out;
  if (count == 0) return out;
  out.reserve(count);
  const auto dim = honest_values.front().size();

  switch (spec.kind) {
    case AttackKind::None:
    case AttackKind::MimicWorld2:
      out.assign(honest_values.begin(), honest_values.end());
      break;
    case AttackKind::LabelFlip:
      if (!ctx.problem_has_labels) throw std::invalid_argument("attack unsupported for problem");
      out.assign(honest_values.begin(), honest_values.end());
      break;
    case AttackKind::BitFlip:
      for (const auto& h : honest_values) out.push_back(-h);
      break;
    case AttackKind::Mimic:
      if (!ctx.mimic_source) throw std::invalid_argument("mimic attack needs its target's vector");
      out.assign(count, *ctx.mimic_source);
      break;
    case AttackKind::Ipm: {
      const ParamVector m = mean<double>(statistics_pool(spec, ctx));
      out.assign(count, -spec.ipm_epsilon * m);
      break;
    }
    case AttackKind::Alie: {
      const auto pool = statistics_pool(spec, ctx);
      const ParamVector mu = mean<double>(pool);
      ParamVector var = ParamVector::Zero(dim);
      for (const auto& v : pool) var += (v - mu).cwiseAbs2();
      var /= static_cast<double>(pool.size());
      const double z = spec.alie_z ? *spec.alie_z : alie_auto_z(ctx.n_total, ctx.n_byzantine);
      out.assign(count, mu - z * var.cwiseSqrt());
      break;
    }
    case AttackKind::Inf:
      out.assign(count, ParamVector::Constant(dim, kInfAttackValue));
      break;
  }
  return out;
}

}  // namespace dbyz
