#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace dbyz::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct Options {
  /// Worker count for the parallel determinism check; 0 picks the hardware maximum.
  int workers = 0;
  /// Directory searched for MNIST IDX files; empty reads $MNIST_DIR.
  std::string mnist_dir;
};

CriterionResult aggregator_oracles();
CriterionResult robustness_contract();
CriterionResult lower_bound();
CriterionResult benign_reduction();
CriterionResult participation_scaling();
CriterionResult neighborhood_law();
CriterionResult failure_mode();
CriterionResult lemma_numerics();
CriterionResult ingestion(const Options& opt);
CriterionResult determinism(const Options& opt);

/// Runs every criterion, printing one PASS/FAIL line per criterion (plus
/// indented detail) as each completes. Returns the number of failures.
int run_all(std::ostream& out, const Options& opt = {});

}  // namespace dbyz::acceptance
