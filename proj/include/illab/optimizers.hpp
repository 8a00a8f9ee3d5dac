#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "illab/environments.hpp"
#include "illab/estimators.hpp"
#include "illab/mdp.hpp"
#include "illab/oracles.hpp"
#include "illab/policies.hpp"

namespace illab {

// theta' = theta - eta * gradient.
std::vector<double> ogd_step(std::span<const double> theta, std::span<const double> gradient,
                             double eta);

// Visitation-weighted cost-to-go vectors per state:
// qtilde_s = sum_t d_t(s) Q_t(s) / (H dbar(s)); states with no mass are
// flagged unvisited and skipped.
struct EgWeightedCosts {
  std::vector<std::vector<double>> qtilde;  // [s][a]
  std::vector<std::uint8_t> visited;        // [s]
};
EgWeightedCosts eg_weighted_costs(const StateDistribution& dist, const QTable& qstar);

// Multiplicative simplex update with max subtraction; zero entries stay zero.
std::vector<double> eg_step_closed_form(std::span<const double> row, double eta,
                                        std::span<const double> qtilde);

// Numeric minimizer of x.q + (1/eta) KL(x || row) over the simplex, run to a
// 1e-10 first-order residual. Exists solely as an independent check of the
// closed form; throws OracleError if it fails to converge.
std::vector<double> eg_step_argmin_oracle(std::span<const double> row, double eta,
                                          std::span<const double> qtilde);

struct CgSettings {
  int max_iters = 50;
  double tol = 1e-10;
  double damping = 1e-3;
  double kl_budget = 0.01;
};

struct CgResult {
  std::vector<double> delta;
  double residual = 0.0;
  int iters = 0;
  bool converged = false;
};

// Solves (S S^T + damping I) delta = g by conjugate gradients using only
// factor-vector products; no d x d matrix is ever formed.
CgResult cg_solve_low_rank(const FisherFactor& factor, std::span<const double> g,
                           const CgSettings& settings);

// eta = sqrt(kl_budget / (g.delta)); throws DegenerateDirectionError when the
// curvature product is not positive.
double natural_step_size(double kl_budget, std::span<const double> g,
                         std::span<const double> delta);

// Growing per-state sums of cost-to-go vectors across episodes.
class AggregatedDataset {
 public:
  AggregatedDataset(int num_states, int num_actions);

  void append(int state, std::span<const double> qvec);
  bool seen(int state) const { return seen_[state] != 0; }
  std::span<const double> sums(int state) const {
    return {&sums_[static_cast<std::size_t>(state) * num_actions_],
            static_cast<std::size_t>(num_actions_)};
  }
  int num_pairs() const { return num_pairs_; }

 private:
  int num_states_, num_actions_;
  int num_pairs_ = 0;
  std::vector<double> sums_;
  std::vector<std::uint8_t> seen_;
};

// Cost-sensitive classification over the aggregated data: per seen state the
// summed-cost argmin action (ties to the lower index), unseen states go left.
SimplexPolicy ftl_cost_sensitive(const AggregatedDataset& dataset, const TreeSpec& tree);

// Action the root-to-leaf base policy takes at a state (off-path states and
// leaves default to go-left).
int base_policy_action(const TreeSpec& tree, int leaf_index, int state);

// One multiplicative-weights update over the base-policy hull from a single
// roll-in trajectory; queries the noisy oracle once per distinct
// (state, action) pair along the trajectory.
BasePolicyMixture weighted_majority_step(const BasePolicyMixture& mix,
                                         const Trajectory& traj, const TreeSpec& tree,
                                         const ExpertOracle& oracle, double mu, Rng& rng);

// Runs multiplicative weights over linear losses w.y_n from the uniform start
// and reports measured regret against the best fixed simplex point together
// with the ln(d)/mu + (mu/2) sum w y^2 bound.
struct EgRegretResult {
  double measured = 0.0;
  double bound = 0.0;
};
EgRegretResult eg_regret_bound_check(const std::vector<std::vector<double>>& losses,
                                     double mu);

}  // namespace illab
