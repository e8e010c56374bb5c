#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "dbyz/aggregators.hpp"
#include "dbyz/attacks.hpp"
#include "dbyz/optimizers.hpp"

namespace dbyz {

struct ProblemConfig {
  std::string kind = "quadratic";  // quadratic | logreg_synthetic | logreg_mnist
  int d = 10;
  double zeta = 1.0;
  double sigma = 0.0;
  double mu = 1.0;
  double bbar_norm = 1.0;
  // logistic regression
  int classes = 10;
  int per_class = 200;
  double separation = 3.0;
  double l2_reg = 1e-4;
  int batch_size = 32;
  std::string partition = "noniid";  // noniid | iid
  std::string mnist_images;
  std::string mnist_labels;
  std::string mnist_test_images;
  std::string mnist_test_labels;
  std::size_t mnist_limit = 0;
};

/// A fully validated experiment description.
struct ExperimentConfig {
  ProblemConfig problem;
  OptimizerKind optimizer = OptimizerKind::DByzSgdm;
  HyperParams hp;
  bool alpha_auto = false;
  AggregatorSpec aggregator;
  AttackSpec attack;
  int n = 25;
  double delta = 0.0;
  int rounds = 100;
  std::vector<std::uint64_t> seeds = {0};
  std::string out_dir = "results";
  int workers = 1;
  bool record_wallclock = false;
  bool write_trace = false;

  int byzantine_count() const;
  std::vector<bool> byzantine_mask() const;
  /// Stable FNV-1a hash of everything that shapes the trajectory (not seeds,
  /// output location, worker count or wall-clock recording).
  std::string hash() const;
  std::string canonical() const;
};

/// Thrown for schema violations; the message names the offending key path.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sections: problem, optimizer, aggregator, attack, run. Unknown keys and
/// missing required keys (optimizer.eta) are errors.
ExperimentConfig parse_config(const boost::property_tree::ptree& tree);
ExperimentConfig parse_config_file(const std::filesystem::path& path);
ExperimentConfig parse_config_string(const std::string& ini);
boost::property_tree::ptree read_ini(const std::filesystem::path& path);

/// Grid axes: each key "section.key" maps to a comma-separated value list.
using GridAxes = std::vector<std::pair<std::string, std::vector<std::string>>>;
GridAxes parse_axes_file(const std::filesystem::path& path);
GridAxes parse_axes_string(const std::string& ini);

/// One config per point of the Cartesian product, in row-major axis order.
std::vector<ExperimentConfig> expand_grid(const boost::property_tree::ptree& base, const GridAxes& axes);

}  // namespace dbyz
