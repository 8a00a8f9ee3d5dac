#pragma once

#include <string>
#include <vector>

namespace illab {

struct CriterionResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Suites: pdl, gradients, eg, fisher, regret-fast, regret-full, all.
// Throws ConfigError on an unknown suite name.
std::vector<CriterionResult> run_verify_suite(const std::string& suite);

}  // namespace illab
