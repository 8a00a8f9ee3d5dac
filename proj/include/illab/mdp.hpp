#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "illab/rng.hpp"

namespace illab {

enum class CostKind { Deterministic, Bernoulli, UniformInterval };

// Per-(t,s,a) cost descriptor. Three parametric families keep exact means
// available for every construction used here.
struct CostModel {
  CostKind kind = CostKind::Deterministic;
  double a = 0.0;  // value | mean | interval low
  double b = 0.0;  // unused | unused | interval high

  static CostModel deterministic(double v) { return {CostKind::Deterministic, v, 0.0}; }
  static CostModel bernoulli(double p) { return {CostKind::Bernoulli, p, 0.0}; }
  static CostModel uniform(double lo, double hi) { return {CostKind::UniformInterval, lo, hi}; }

  double mean() const {
    switch (kind) {
      case CostKind::Deterministic: return a;
      case CostKind::Bernoulli: return a;
      case CostKind::UniformInterval: return 0.5 * (a + b);
    }
    return 0.0;
  }

  double sample(Rng& rng) const {
    switch (kind) {
      case CostKind::Deterministic: return a;
      case CostKind::Bernoulli: return rng.bernoulli(a) ? 1.0 : 0.0;
      case CostKind::UniformInterval: return rng.uniform(a, b);
    }
    return 0.0;
  }
};

// Sparse transition row P_t(.|s,a): (next state, probability) pairs.
struct SparseRow {
  std::vector<std::pair<int, double>> entries;
};

// Tabular finite-horizon MDP. Steps are t = 1..H; costs are incurred at every
// step including t = H; transitions exist for t = 1..H-1.
class FiniteMdp {
 public:
  // transitions[t][s*A + a] for t = 0..H-2 (0-based step index);
  // costs[t][s*A + a] for t = 0..H-1.
  FiniteMdp(int num_states, int num_actions, int horizon,
            std::vector<std::vector<SparseRow>> transitions,
            std::vector<std::vector<CostModel>> costs,
            std::vector<double> initial_dist, double cost_bound);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int horizon() const { return horizon_; }
  double cost_bound() const { return cost_bound_; }
  const std::vector<double>& initial_dist() const { return initial_dist_; }

  // t is the 0-based step index, valid for 0..H-2.
  const SparseRow& transition_row(int t, int s, int a) const {
    return transitions_[t][s * num_actions_ + a];
  }
  const CostModel& cost_model(int t, int s, int a) const {
    return costs_[t][s * num_actions_ + a];
  }
  double mean_cost(int t, int s, int a) const { return costs_[t][s * num_actions_ + a].mean(); }
  double sample_cost(int t, int s, int a, Rng& rng) const {
    return costs_[t][s * num_actions_ + a].sample(rng);
  }
  int sample_transition(int t, int s, int a, Rng& rng) const;

 private:
  void validate() const;

  int num_states_;
  int num_actions_;
  int horizon_;
  std::vector<std::vector<SparseRow>> transitions_;
  std::vector<std::vector<CostModel>> costs_;
  std::vector<double> initial_dist_;
  double cost_bound_;
};

// Per-(state, step) probability table over actions. Rows are validated and
// renormalized exactly on every write.
class SimplexPolicy {
 public:
  SimplexPolicy() = default;
  SimplexPolicy(int num_states, int num_actions, int horizon);  // uniform rows

  static SimplexPolicy deterministic(int num_states, int num_actions, int horizon,
                                     const std::vector<int>& action_per_state);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int horizon() const { return horizon_; }

  std::span<const double> row(int t, int s) const {
    return {&table_[(static_cast<std::size_t>(t) * num_states_ + s) * num_actions_],
            static_cast<std::size_t>(num_actions_)};
  }
  void set_row(int t, int s, std::span<const double> probs);
  // Sets the same row at every step (stationary policies share rows).
  void set_row_all_steps(int s, std::span<const double> probs);

  double prob(int t, int s, int a) const { return row(t, s)[a]; }

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  int horizon_ = 0;
  std::vector<double> table_;
};

// d_t for t = 1..H plus the average over steps.
struct StateDistribution {
  std::vector<std::vector<double>> per_step;  // [t-1][s]
  std::vector<double> average;                // d-bar

  const std::vector<double>& at_step(int t) const { return per_step[t - 1]; }
};

struct TrajStep {
  int state;
  int action;
  double cost;
  double behavior_prob;  // probability the behavior policy assigned the action
};

struct Trajectory {
  std::vector<TrajStep> steps;
  int length() const { return static_cast<int>(steps.size()); }
};

// Exact cost-to-go tables from the backward recursion.
class QTable {
 public:
  QTable(int num_states, int num_actions, int horizon)
      : num_states_(num_states),
        num_actions_(num_actions),
        horizon_(horizon),
        q_(static_cast<std::size_t>(horizon) * num_states * num_actions, 0.0),
        v_(static_cast<std::size_t>(horizon) * num_states, 0.0) {}

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int horizon() const { return horizon_; }

  // t is 1-based here to match the recursion indices.
  double q(int t, int s, int a) const {
    return q_[(static_cast<std::size_t>(t - 1) * num_states_ + s) * num_actions_ + a];
  }
  double& q(int t, int s, int a) {
    return q_[(static_cast<std::size_t>(t - 1) * num_states_ + s) * num_actions_ + a];
  }
  double v(int t, int s) const { return v_[static_cast<std::size_t>(t - 1) * num_states_ + s]; }
  double& v(int t, int s) { return v_[static_cast<std::size_t>(t - 1) * num_states_ + s]; }

  std::span<const double> q_row(int t, int s) const {
    return {&q_[(static_cast<std::size_t>(t - 1) * num_states_ + s) * num_actions_],
            static_cast<std::size_t>(num_actions_)};
  }

 private:
  int num_states_;
  int num_actions_;
  int horizon_;
  std::vector<double> q_;
  std::vector<double> v_;
};

// Forward recursion d_1 = rho0, d_{t+1}(s') = sum_{s,a} d_t(s) pi(a|s,t) P_t(s'|s,a).
StateDistribution state_distribution(const FiniteMdp& mdp, const SimplexPolicy& policy);

// mu(pi) = sum_t sum_s d_t(s) sum_a pi(a|s,t) cbar_t(s,a), computed exactly.
double expected_cost(const FiniteMdp& mdp, const SimplexPolicy& policy);

// Backward recursion with Q_{H+1} identically 0; also fills V_t.
QTable exact_q(const FiniteMdp& mdp, const SimplexPolicy& policy);

// Deterministic cost-minimizing policy per (state, step) from backward
// induction; ties break toward the lower action index.
SimplexPolicy optimal_policy(const FiniteMdp& mdp);

// Action distribution supplier for rollouts; t is the 1-based step.
using ActionDist = std::function<std::span<const double>(int s, int t)>;

Trajectory rollout(const FiniteMdp& mdp, const ActionDist& probs, Rng& rng);
Trajectory rollout(const FiniteMdp& mdp, const SimplexPolicy& policy, Rng& rng);

// Row-wise convex combination: alpha * expert + (1 - alpha) * learner.
SimplexPolicy mix_policies(const SimplexPolicy& expert, const SimplexPolicy& learner,
                           double alpha);

// | (mu(p1) - mu(p2)) - sum_t E_{s~d_t^{p1}, a~p1}[Q_t^{p2}(s,a) - V_t^{p2}(s)] |,
// the un-scaled form of the performance-difference identity.
double performance_difference_residual(const FiniteMdp& mdp, const SimplexPolicy& p1,
                                       const SimplexPolicy& p2);

}  // namespace illab
