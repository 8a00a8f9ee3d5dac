#include "illab/mdp.hpp"

#include <cmath>
#include <string>

#include "illab/errors.hpp"
#include "illab/tolerances.hpp"
#include "illab/vecmath.hpp"

namespace illab {

FiniteMdp::FiniteMdp(int num_states, int num_actions, int horizon,
                     std::vector<std::vector<SparseRow>> transitions,
                     std::vector<std::vector<CostModel>> costs,
                     std::vector<double> initial_dist, double cost_bound)
    : num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      transitions_(std::move(transitions)),
      costs_(std::move(costs)),
      initial_dist_(std::move(initial_dist)),
      cost_bound_(cost_bound) {
  validate();
}

void FiniteMdp::validate() const {
  if (num_states_ < 1 || num_actions_ < 1 || horizon_ < 1) {
    throw ConfigError("mdp dimensions must be positive");
  }
  if (static_cast<int>(transitions_.size()) != horizon_ - 1) {
    throw ConfigError("expected one transition table per step 1..H-1");
  }
  if (static_cast<int>(costs_.size()) != horizon_) {
    throw ConfigError("expected one cost table per step 1..H");
  }
  if (static_cast<int>(initial_dist_.size()) != num_states_) {
    throw ConfigError("initial distribution size != num_states");
  }
  const std::size_t rows = static_cast<std::size_t>(num_states_) * num_actions_;
  for (int t = 0; t < horizon_ - 1; ++t) {
    if (transitions_[t].size() != rows) throw ConfigError("transition table has wrong shape");
    for (const SparseRow& row : transitions_[t]) {
      double mass = 0.0;
      for (const auto& [next, p] : row.entries) {
        if (next < 0 || next >= num_states_) throw ConfigError("transition to unknown state");
        if (p < 0.0) throw ConfigError("negative transition probability");
        mass += p;
      }
      if (std::fabs(mass - 1.0) > tols().row_sum) {
        throw ConfigError("transition row does not sum to 1");
      }
    }
  }
  for (int t = 0; t < horizon_; ++t) {
    if (costs_[t].size() != rows) throw ConfigError("cost table has wrong shape");
    for (const CostModel& c : costs_[t]) {
      double lo = 0.0, hi = 0.0;
      switch (c.kind) {
        case CostKind::Deterministic: lo = hi = c.a; break;
        case CostKind::Bernoulli:
          if (c.a < 0.0 || c.a > 1.0) throw ConfigError("bernoulli cost mean outside [0,1]");
          lo = 0.0;
          hi = c.a > 0.0 ? 1.0 : 0.0;
          break;
        case CostKind::UniformInterval: lo = c.a; hi = c.b; break;
      }
      if (lo < 0.0 || hi > cost_bound_ + tols().row_sum) {
        throw ConfigError("realizable cost outside [0, cost_bound]");
      }
    }
  }
  double mass = sum(initial_dist_);
  for (double p : initial_dist_) {
    if (p < 0.0) throw ConfigError("negative initial probability");
  }
  if (std::fabs(mass - 1.0) > tols().row_sum) {
    throw ConfigError("initial distribution does not sum to 1");
  }
}

int FiniteMdp::sample_transition(int t, int s, int a, Rng& rng) const {
  const SparseRow& row = transition_row(t, s, a);
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& [next, p] : row.entries) {
    acc += p;
    if (u < acc) return next;
  }
  return row.entries.back().first;
}

SimplexPolicy::SimplexPolicy(int num_states, int num_actions, int horizon)
    : num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      table_(static_cast<std::size_t>(num_states) * num_actions * horizon,
             1.0 / num_actions) {}

SimplexPolicy SimplexPolicy::deterministic(int num_states, int num_actions, int horizon,
                                           const std::vector<int>& action_per_state) {
  if (static_cast<int>(action_per_state.size()) != num_states) {
    throw ConfigError("need one action per state");
  }
  SimplexPolicy p(num_states, num_actions, horizon);
  std::vector<double> row(num_actions, 0.0);
  for (int s = 0; s < num_states; ++s) {
    const int a = action_per_state[s];
    if (a < 0 || a >= num_actions) throw ConfigError("action index out of range");
    row.assign(num_actions, 0.0);
    row[a] = 1.0;
    p.set_row_all_steps(s, row);
  }
  return p;
}

void SimplexPolicy::set_row(int t, int s, std::span<const double> probs) {
  if (static_cast<int>(probs.size()) != num_actions_) {
    throw ConfigError("policy row has wrong length");
  }
  double mass = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw PolicyError("negative or NaN probability in policy row");
    mass += p;
  }
  if (std::fabs(mass - 1.0) > tols().row_sum) {
    throw PolicyError("policy row does not sum to 1");
  }
  double* dst = &table_[(static_cast<std::size_t>(t) * num_states_ + s) * num_actions_];
  for (int a = 0; a < num_actions_; ++a) dst[a] = probs[a] / mass;
}

void SimplexPolicy::set_row_all_steps(int s, std::span<const double> probs) {
  for (int t = 0; t < horizon_; ++t) set_row(t, s, probs);
}

namespace {

void check_compatible(const FiniteMdp& mdp, const SimplexPolicy& policy) {
  if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions() ||
      policy.horizon() != mdp.horizon()) {
    throw ConfigError("policy dimensions do not match the mdp");
  }
}

}  // namespace

StateDistribution state_distribution(const FiniteMdp& mdp, const SimplexPolicy& policy) {
  check_compatible(mdp, policy);
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  StateDistribution out;
  out.per_step.resize(H);
  out.per_step[0] = mdp.initial_dist();
  for (int t = 0; t < H - 1; ++t) {
    std::vector<double>& next = out.per_step[t + 1];
    next.assign(S, 0.0);
    const std::vector<double>& cur = out.per_step[t];
    for (int s = 0; s < S; ++s) {
      if (cur[s] == 0.0) continue;
      const std::span<const double> pi = policy.row(t, s);
      for (int a = 0; a < A; ++a) {
        const double w = cur[s] * pi[a];
        if (w == 0.0) continue;
        for (const auto& [sn, p] : mdp.transition_row(t, s, a).entries) {
          next[sn] += w * p;
        }
      }
    }
  }
  out.average.assign(S, 0.0);
  for (int t = 0; t < H; ++t) {
    axpy(1.0 / H, out.per_step[t], out.average);
  }
  return out;
}

double expected_cost(const FiniteMdp& mdp, const SimplexPolicy& policy) {
  const StateDistribution d = state_distribution(mdp, policy);
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  double mu = 0.0;
  for (int t = 0; t < H; ++t) {
    for (int s = 0; s < S; ++s) {
      const double ds = d.per_step[t][s];
      if (ds == 0.0) continue;
      const std::span<const double> pi = policy.row(t, s);
      for (int a = 0; a < A; ++a) {
        if (pi[a] == 0.0) continue;
        mu += ds * pi[a] * mdp.mean_cost(t, s, a);
      }
    }
  }
  return mu;
}

QTable exact_q(const FiniteMdp& mdp, const SimplexPolicy& policy) {
  check_compatible(mdp, policy);
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  QTable table(S, A, H);
  for (int t = H; t >= 1; --t) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double q = mdp.mean_cost(t - 1, s, a);
        if (t < H) {
          for (const auto& [sn, p] : mdp.transition_row(t - 1, s, a).entries) {
            q += p * table.v(t + 1, sn);
          }
        }
        table.q(t, s, a) = q;
      }
      table.v(t, s) = dot(policy.row(t - 1, s), table.q_row(t, s));
    }
  }
  return table;
}

SimplexPolicy optimal_policy(const FiniteMdp& mdp) {
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  SimplexPolicy policy(S, A, H);
  std::vector<double> value(S, 0.0), next_value(S, 0.0);
  std::vector<double> row(A, 0.0);
  for (int t = H; t >= 1; --t) {
    for (int s = 0; s < S; ++s) {
      int best = 0;
      double best_q = 0.0;
      for (int a = 0; a < A; ++a) {
        double q = mdp.mean_cost(t - 1, s, a);
        if (t < H) {
          for (const auto& [sn, p] : mdp.transition_row(t - 1, s, a).entries) {
            q += p * value[sn];
          }
        }
        if (a == 0 || q < best_q) {
          best = a;
          best_q = q;
        }
      }
      row.assign(A, 0.0);
      row[best] = 1.0;
      policy.set_row(t - 1, s, row);
      next_value[s] = best_q;
    }
    std::swap(value, next_value);
  }
  return policy;
}

namespace {

void check_distribution(std::span<const double> probs) {
  double mass = 0.0;
  for (double p : probs) {
    if (!(p >= -tols().rollout_policy)) {
      throw PolicyError("policy emitted a negative action probability");
    }
    mass += p;
  }
  if (std::fabs(mass - 1.0) > tols().rollout_policy) {
    throw PolicyError("policy emitted an unnormalized action distribution");
  }
}

}  // namespace

Trajectory rollout(const FiniteMdp& mdp, const ActionDist& probs, Rng& rng) {
  Trajectory traj;
  const int H = mdp.horizon();
  traj.steps.reserve(H);
  int s = rng.categorical(mdp.initial_dist());
  for (int t = 1; t <= H; ++t) {
    const std::span<const double> pi = probs(s, t);
    check_distribution(pi);
    const int a = rng.categorical(pi);
    const double c = mdp.sample_cost(t - 1, s, a, rng);
    traj.steps.push_back({s, a, c, pi[a]});
    if (t < H) s = mdp.sample_transition(t - 1, s, a, rng);
  }
  return traj;
}

Trajectory rollout(const FiniteMdp& mdp, const SimplexPolicy& policy, Rng& rng) {
  check_compatible(mdp, policy);
  return rollout(
      mdp, [&policy](int s, int t) { return policy.row(t - 1, s); }, rng);
}

SimplexPolicy mix_policies(const SimplexPolicy& expert, const SimplexPolicy& learner,
                           double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("mixing rate must lie in [0,1]");
  }
  if (expert.num_states() != learner.num_states() ||
      expert.num_actions() != learner.num_actions() ||
      expert.horizon() != learner.horizon()) {
    throw ConfigError("cannot mix policies over different spaces");
  }
  const int S = expert.num_states(), A = expert.num_actions(), H = expert.horizon();
  SimplexPolicy mixed(S, A, H);
  std::vector<double> row(A);
  for (int t = 0; t < H; ++t) {
    for (int s = 0; s < S; ++s) {
      const std::span<const double> e = expert.row(t, s);
      const std::span<const double> l = learner.row(t, s);
      for (int a = 0; a < A; ++a) row[a] = alpha * e[a] + (1.0 - alpha) * l[a];
      mixed.set_row(t, s, row);
    }
  }
  return mixed;
}

double performance_difference_residual(const FiniteMdp& mdp, const SimplexPolicy& p1,
                                       const SimplexPolicy& p2) {
  const double gap = expected_cost(mdp, p1) - expected_cost(mdp, p2);
  const StateDistribution d1 = state_distribution(mdp, p1);
  const QTable q2 = exact_q(mdp, p2);
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  double advantage_sum = 0.0;
  for (int t = 1; t <= H; ++t) {
    for (int s = 0; s < S; ++s) {
      const double ds = d1.per_step[t - 1][s];
      if (ds == 0.0) continue;
      const std::span<const double> pi = p1.row(t - 1, s);
      for (int a = 0; a < A; ++a) {
        if (pi[a] == 0.0) continue;
        advantage_sum += ds * pi[a] * (q2.q(t, s, a) - q2.v(t, s));
      }
    }
  }
  return std::fabs(gap - advantage_sum);
}

}  // namespace illab
