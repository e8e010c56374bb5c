#include "dbyz/config.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace dbyz {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"problem",
       {"kind", "d", "zeta", "sigma", "mu", "bbar_norm", "classes", "per_class", "separation",
        "l2_reg", "batch_size", "partition", "mnist_images", "mnist_labels", "mnist_test_images",
        "mnist_test_labels", "mnist_limit", "projection_radius"}},
      {"optimizer", {"kind", "eta", "alpha"}},
      {"aggregator", {"kind", "krum_f", "cp_radius", "cp_iters", "rfa_tol", "rfa_max_iters", "bucket_s"}},
      {"attack", {"kind", "ipm_epsilon", "alie_z", "mimic_target", "statistics"}},
      {"run",
       {"n", "delta", "p", "rounds", "seeds", "out", "workers", "record_wallclock", "write_trace",
        "divergence_bound", "force_full_round1"}},
  };
  return keys;
}

/// Typed accessor that prefixes every error with the key path.
class Section {
 public:
  Section(const pt::ptree& tree, std::string name) : name_(std::move(name)) {
    if (auto child = tree.get_child_optional(name_)) node_ = &*child;
  }

  bool has(const std::string& key) const { return node_ && node_->get_child_optional(key).has_value(); }

  std::string raw(const std::string& key) const { return node_->get<std::string>(key); }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    if (!has(key)) return fallback;
    return convert<T>(key, raw(key));
  }

  template <typename T>
  T require(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required key " + path(key));
    return convert<T>(key, raw(key));
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

 private:
  template <typename T>
  T convert(const std::string& key, const std::string& text) const {
    std::istringstream in(text);
    T value{};
    if constexpr (std::is_same_v<T, bool>) {
      std::string word;
      in >> word;
      if (word == "true" || word == "1") return true;
      if (word == "false" || word == "0") return false;
      throw ConfigError(path(key) + ": expected a boolean, got '" + text + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else {
      in >> value;
      std::string rest;
      if (in.fail() || (in >> rest, !rest.empty()))
        throw ConfigError(path(key) + ": cannot parse '" + text + "'");
      return value;
    }
  }

  std::string name_;
  const pt::ptree* node_ = nullptr;
};

void check_unknown_keys(const pt::ptree& tree) {
  for (const auto& [section, node] : tree) {
    auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("unknown section '" + section + "'");
    for (const auto& [key, value] : node) {
      if (!it->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
      if (!value.empty()) throw ConfigError("nested value under " + section + "." + key);
    }
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("run.seeds: cannot parse '" + item + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
  return seeds;
}

template <typename F>
void rethrow_as_config(F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int ExperimentConfig::byzantine_count() const { return static_cast<int>(std::lround(delta * n)); }

std::vector<bool> ExperimentConfig::byzantine_mask() const {
  std::vector<bool> mask(n, false);
  for (int i = n - byzantine_count(); i < n; ++i) mask[i] = true;
  return mask;
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  const auto& pr = problem;
  os << "problem.kind=" << pr.kind << "\nproblem.d=" << pr.d << "\nproblem.zeta=" << fmt_double(pr.zeta)
     << "\nproblem.sigma=" << fmt_double(pr.sigma) << "\nproblem.mu=" << fmt_double(pr.mu)
     << "\nproblem.bbar_norm=" << fmt_double(pr.bbar_norm) << "\nproblem.classes=" << pr.classes
     << "\nproblem.per_class=" << pr.per_class << "\nproblem.separation=" << fmt_double(pr.separation)
     << "\nproblem.l2_reg=" << fmt_double(pr.l2_reg) << "\nproblem.batch_size=" << pr.batch_size
     << "\nproblem.partition=" << pr.partition << "\nproblem.mnist_images=" << pr.mnist_images
     << "\nproblem.mnist_labels=" << pr.mnist_labels << "\nproblem.mnist_test_images=" << pr.mnist_test_images
     << "\nproblem.mnist_test_labels=" << pr.mnist_test_labels << "\nproblem.mnist_limit=" << pr.mnist_limit
     << "\nproblem.projection_radius=" << fmt_double(hp.projection_radius)
     << "\noptimizer.kind=" << to_string(optimizer) << "\noptimizer.eta=" << fmt_double(hp.eta)
     << "\noptimizer.alpha=" << (alpha_auto ? std::string("auto") : fmt_double(hp.alpha))
     << "\naggregator.kind=" << to_string(aggregator.kind) << "\naggregator.krum_f=" << aggregator.krum_f
     << "\naggregator.cp_radius=" << fmt_double(aggregator.cp_radius)
     << "\naggregator.cp_iters=" << aggregator.cp_iters << "\naggregator.rfa_tol=" << fmt_double(aggregator.rfa_tol)
     << "\naggregator.rfa_max_iters=" << aggregator.rfa_max_iters << "\naggregator.bucket_s=" << aggregator.bucket_s
     << "\nattack.kind=" << to_string(attack.kind) << "\nattack.ipm_epsilon=" << fmt_double(attack.ipm_epsilon)
     << "\nattack.alie_z=" << (attack.alie_z ? fmt_double(*attack.alie_z) : std::string("auto"))
     << "\nattack.mimic_target=" << attack.mimic_target
     << "\nattack.statistics=" << (attack.use_all_honest ? "all" : "fresh") << "\nrun.n=" << n
     << "\nrun.delta=" << fmt_double(delta) << "\nrun.p=" << fmt_double(hp.p) << "\nrun.rounds=" << rounds
     << "\nrun.divergence_bound=" << fmt_double(hp.divergence_bound)
     << "\nrun.force_full_round1=" << hp.force_full_round1 << "\n";
  return os.str();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const pt::ptree& tree) {
  check_unknown_keys(tree);
  ExperimentConfig cfg;
  const Section problem(tree, "problem"), opt(tree, "optimizer"), agg(tree, "aggregator"),
      attack(tree, "attack"), run(tree, "run");

  auto& pr = cfg.problem;
  pr.kind = problem.get<std::string>("kind", pr.kind);
  if (pr.kind != "quadratic" && pr.kind != "logreg_synthetic" && pr.kind != "logreg_mnist")
    throw ConfigError("problem.kind: unknown problem '" + pr.kind + "'");
  pr.d = problem.get("d", pr.d);
  pr.zeta = problem.get("zeta", pr.zeta);
  pr.sigma = problem.get("sigma", pr.sigma);
  pr.mu = problem.get("mu", pr.mu);
  pr.bbar_norm = problem.get("bbar_norm", pr.bbar_norm);
  pr.classes = problem.get("classes", pr.classes);
  pr.per_class = problem.get("per_class", pr.per_class);
  pr.separation = problem.get("separation", pr.separation);
  pr.l2_reg = problem.get("l2_reg", pr.l2_reg);
  pr.batch_size = problem.get("batch_size", pr.batch_size);
  pr.partition = problem.get<std::string>("partition", pr.partition);
  pr.mnist_images = problem.get<std::string>("mnist_images", "");
  pr.mnist_labels = problem.get<std::string>("mnist_labels", "");
  pr.mnist_test_images = problem.get<std::string>("mnist_test_images", "");
  pr.mnist_test_labels = problem.get<std::string>("mnist_test_labels", "");
  pr.mnist_limit = problem.get<std::size_t>("mnist_limit", 0);
  cfg.hp.projection_radius = problem.get("projection_radius", 0.0);
  if (pr.d < 1) throw ConfigError("problem.d must be >= 1");
  if (!(pr.zeta >= 0)) throw ConfigError("problem.zeta must be >= 0");
  if (!(pr.sigma >= 0)) throw ConfigError("problem.sigma must be >= 0");
  if (!(pr.mu > 0)) throw ConfigError("problem.mu must be > 0");
  if (pr.partition != "noniid" && pr.partition != "iid")
    throw ConfigError("problem.partition must be noniid or iid");
  if (pr.kind == "logreg_mnist" && (pr.mnist_images.empty() || pr.mnist_labels.empty()))
    throw ConfigError("problem.mnist_images and problem.mnist_labels are required for logreg_mnist");

  rethrow_as_config([&] { cfg.optimizer = parse_optimizer_kind(opt.get<std::string>("kind", "dbyz_sgdm")); });
  cfg.hp.eta = opt.require<double>("eta");
  const std::string alpha = opt.get<std::string>("alpha", "auto");
  cfg.alpha_auto = alpha == "auto";
  if (!cfg.alpha_auto) cfg.hp.alpha = opt.get<double>("alpha", 1.0);

  cfg.n = run.get("n", cfg.n);
  cfg.delta = run.get("delta", cfg.delta);
  cfg.hp.p = run.get("p", cfg.hp.p);
  cfg.rounds = run.require<int>("rounds");
  if (run.has("seeds")) cfg.seeds = parse_seeds(run.raw("seeds"));
  cfg.out_dir = run.get<std::string>("out", cfg.out_dir);
  cfg.workers = run.get("workers", cfg.workers);
  cfg.record_wallclock = run.get("record_wallclock", cfg.record_wallclock);
  cfg.write_trace = run.get("write_trace", cfg.write_trace);
  cfg.hp.divergence_bound = run.get("divergence_bound", cfg.hp.divergence_bound);
  cfg.hp.force_full_round1 = run.get("force_full_round1", cfg.hp.force_full_round1);
  if (cfg.n < 3) throw ConfigError("run.n must be >= 3");
  if (!(cfg.delta >= 0)) throw ConfigError("run.delta must be >= 0");
  if (!(cfg.delta < 0.5)) throw ConfigError("run.delta: delta must be < 1/2");
  if (std::abs(cfg.delta * cfg.n - std::round(cfg.delta * cfg.n)) > 1e-9)
    throw ConfigError("run.delta: delta * n must be an integer");
  if (cfg.rounds < 1) throw ConfigError("run.rounds must be >= 1");
  if (cfg.workers < 1) throw ConfigError("run.workers must be >= 1");

  rethrow_as_config([&] { cfg.aggregator.kind = parse_aggregator_kind(agg.get<std::string>("kind", "avg")); });
  cfg.aggregator.krum_f = agg.get("krum_f", static_cast<int>(std::ceil(cfg.delta * cfg.n - 1e-9)));
  cfg.aggregator.cp_radius = agg.get("cp_radius", cfg.aggregator.cp_radius);
  cfg.aggregator.cp_iters = agg.get("cp_iters", cfg.aggregator.cp_iters);
  cfg.aggregator.rfa_tol = agg.get("rfa_tol", cfg.aggregator.rfa_tol);
  cfg.aggregator.rfa_max_iters = agg.get("rfa_max_iters", cfg.aggregator.rfa_max_iters);
  cfg.aggregator.bucket_s = agg.get("bucket_s", cfg.aggregator.bucket_s);
  rethrow_as_config([&] { cfg.aggregator.validate(cfg.n); });

  rethrow_as_config([&] { cfg.attack.kind = parse_attack_kind(attack.get<std::string>("kind", "NA")); });
  cfg.attack.ipm_epsilon = attack.get("ipm_epsilon", cfg.attack.ipm_epsilon);
  const std::string z = attack.get<std::string>("alie_z", "auto");
  if (z != "auto") cfg.attack.alie_z = attack.get<double>("alie_z", 0.0);
  cfg.attack.mimic_target = attack.get("mimic_target", 0);
  const std::string stats = attack.get<std::string>("statistics", "all");
  if (stats != "all" && stats != "fresh") throw ConfigError("attack.statistics must be all or fresh");
  cfg.attack.use_all_honest = stats == "all";
  if (!(cfg.attack.ipm_epsilon > 0)) throw ConfigError("attack.ipm_epsilon must be > 0");
  if (cfg.attack.mimic_target < 0 || cfg.attack.mimic_target >= cfg.n - cfg.byzantine_count())
    throw ConfigError("attack.mimic_target must name an honest client");
  if (cfg.n - cfg.byzantine_count() < 2) throw ConfigError("run.n: at least two honest clients are required");

  rethrow_as_config([&] { cfg.hp.validate(); });
  return cfg;
}

pt::ptree read_ini(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return tree;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) { return parse_config(read_ini(path)); }

ExperimentConfig parse_config_string(const std::string& ini) {
  std::istringstream in(ini);
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(tree);
}

namespace {

GridAxes axes_from_tree(const pt::ptree& tree) {
  GridAxes axes;
  auto section = tree.get_child_optional("axes");
  if (!section) throw ConfigError("axes file needs an [axes] section");
  for (const auto& [key, node] : *section) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw ConfigError("axes key '" + key + "' must be section.key");
    const auto sec = schema().find(key.substr(0, dot));
    if (sec == schema().end() || !sec->second.count(key.substr(dot + 1)))
      throw ConfigError("unknown axes key " + key);
    std::vector<std::string> values;
    std::stringstream in(node.data());
    std::string item;
    while (std::getline(in, item, ',')) {
      item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
      if (!item.empty()) values.push_back(item);
    }
    if (values.empty()) throw ConfigError("axes key " + key + " has no values");
    axes.emplace_back(key, std::move(values));
  }
  return axes;
}

}  // namespace

GridAxes parse_axes_file(const std::filesystem::path& path) { return axes_from_tree(read_ini(path)); }

GridAxes parse_axes_string(const std::string& ini) {
  std::istringstream in(ini);
  pt::ptree tree;
  pt::ini_parser::read_ini(in, tree);
  return axes_from_tree(tree);
}

std::vector<ExperimentConfig> expand_grid(const pt::ptree& base, const GridAxes& axes) {
  std::vector<ExperimentConfig> out;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    pt::ptree tree = base;
    for (std::size_t a = 0; a < axes.size(); ++a) tree.put(axes[a].first, axes[a].second[idx[a]]);
    out.push_back(parse_config(tree));
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].second.size()) break;
      idx[a] = 0;
      if (a == 0) return out;
    }
    if (axes.empty()) return out;
  }
}

}  // namespace dbyz
