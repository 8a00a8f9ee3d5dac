#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "illab/environments.hpp"
#include "illab/estimators.hpp"
#include "illab/mdp.hpp"
#include "illab/optimizers.hpp"
#include "illab/oracles.hpp"
#include "illab/policies.hpp"

namespace illab {

enum class UpdateRule { Ogd, Eg, Natural, Ftl, WeightedMajority };
enum class EnvKind { Tree, BanditRows, RandomTabular, PointMass, Parse };
enum class PolicyFamilyKind { Simplex, TabularSoftmax, LinearSoftmax, MlpSoftmax, Gaussian };
enum class LrSchedule { Constant, InvSqrt };
enum class GradientForm { ActionSum, Score };

struct RunConfig {
  EnvKind env = EnvKind::Tree;

  // tree
  int tree_depth = 2;
  double leaf_best = 0.2;
  double leaf_other = 0.8;
  int optimal_leaf = 0;
  int expert_leaf = -1;  // -1 selects the optimal expert
  CostKind leaf_noise = CostKind::Bernoulli;

  // random tabular / bandit rows
  int num_states = 4;
  int num_actions = 2;
  int horizon = 3;
  std::uint64_t env_seed = 0;
  double bandit_gap = 0.1;

  // point mass
  double pm_pos_weight = 1.0;
  double pm_vel_weight = 0.1;
  double pm_act_weight = 0.01;
  double pm_dt = 0.1;

  // parsing
  int parse_sentences = 200;
  int parse_max_len = 12;
  int parse_vocab = 20;
  std::uint64_t corpus_seed = 1;
  double parse_holdout = 0.2;
  std::string corpus_file;  // load instead of generating when nonempty

  // policy
  PolicyFamilyKind family = PolicyFamilyKind::Simplex;
  int hidden = 16;
  std::uint64_t init_seed = 0;
  double init_log_std = -0.5;

  // update
  UpdateRule rule = UpdateRule::Eg;
  double lr = 0.5;
  LrSchedule lr_schedule = LrSchedule::InvSqrt;
  bool use_advantage = false;
  GradientForm gradient_form = GradientForm::ActionSum;
  CgSettings cg;
  double wm_mu = 0.0;  // numerator of the mu_n = c / sqrt(n) schedule; 0 = sqrt(2 ln M)

  // oracle
  OracleMode oracle = OracleMode::Exact;
  int oracle_rollouts = 1;
  ValueConvention value_convention = ValueConvention::MinQ;

  // run
  int episodes = 100;
  int rollouts_per_episode = 1;
  double alpha0 = 0.0;
  double alpha_decay = 0.9;
  std::uint64_t seed = 0;
  int eval_rollouts = 1000;  // Monte-Carlo evaluation count (continuous env)
  int rollout_threads = 1;
};

// Per-episode learner cost against the expert's, with prefix-summed regret.
// Wall-clock is recorded for reporting and excluded from the determinism
// contract.
struct RegretCurve {
  double mu_star = 0.0;
  std::vector<double> mu;
  std::vector<double> inst;
  std::vector<double> cum;
  std::vector<double> wall_ms;

  void push(double mu_n, double ms) {
    mu.push_back(mu_n);
    inst.push_back(mu_n - mu_star);
    cum.push_back((cum.empty() ? 0.0 : cum.back()) + mu_n - mu_star);
    wall_ms.push_back(ms);
  }
  int episodes() const { return static_cast<int>(mu.size()); }
};

struct RunResult {
  RegretCurve curve;
  double best_mu = 0.0;  // best validation value among the visited policies
  int best_episode = 0;
  std::optional<SimplexPolicy> best_simplex;  // tabular representations
  std::vector<double> best_params;            // differentiable families
  double best_heldout_uas = 0.0;              // parse runs
};

RunResult run_aggrevated(const RunConfig& config);

// Score-function policy gradient on realized returns; the no-oracle baseline.
RunResult run_reinforce(const RunConfig& config);

// Optimism-over-leaf-trajectories baseline on the tree: each root-to-leaf
// path is an arm, selected by its lower confidence index.
RegretCurve run_tree_bandit_ucb(const TreeEnv& tree, int episodes, std::uint64_t seed);

std::vector<double> cumulative_regret(std::span<const double> mu, double mu_star);

// Least-squares slope of log series[n] against log n over the 1-based episode
// window [first, last].
double slope_fit(std::span<const double> series, int first, int last);

// Assembled environments, shared between the learner and the verification
// suites.
TreeEnv tree_from_config(const RunConfig& config);
BanditRowsEnv bandit_rows_from_config(const RunConfig& config);

}  // namespace illab
