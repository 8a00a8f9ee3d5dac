#pragma once

#include <map>
#include <string>
#include <vector>

#include "illab/learner.hpp"

namespace illab {

enum class Algorithm { Aggrevated, Reinforce, TreeBanditUcb };

// Flat section.key = value configuration with '#' comments. Unknown keys are
// rejected; parsing and printing are locale-independent.
class ExperimentFile {
 public:
  // Parses text; throws ConfigError mentioning the offending line.
  static ExperimentFile parse(const std::string& text);
  static ExperimentFile load(const std::string& path);

  // Materializes every default; the result round-trips byte-for-byte.
  std::string resolved() const;
  // 16-hex digest of the resolved configuration, optionally ignoring one key.
  std::string hash(const std::string& ignore_key = "") const;

  RunConfig run_config() const;
  Algorithm algorithm() const;
  bool timing_enabled() const;

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

 private:
  std::map<std::string, std::string> values_;  // fully resolved
};

std::string format_double(double v);  // %.17g

// Fixed schema: episode,mu_pi,mu_star,inst_regret,cum_regret,wall_ms. With
// timing disabled the wall column prints 0 so output is byte-reproducible.
std::string curve_csv(const RegretCurve& curve, bool timing);
std::string summary_text(const RegretCurve& curve, const RunResult& result);

// Exit status 0 on success, 2 on configuration errors, 3 on numeric errors.
int cmd_run(const std::string& config_path, const std::string& out_dir);
int cmd_sweep(const std::string& config_path, const std::string& var,
              const std::string& values, const std::string& out_dir);
int cmd_verify(const std::string& suite);

}  // namespace illab
