#pragma once

#include <span>
#include <vector>

#include "illab/environments.hpp"
#include "illab/mdp.hpp"
#include "illab/oracles.hpp"
#include "illab/policies.hpp"

namespace illab {

enum class EstimatorKind {
  ExactDiscrete,
  SampledDiscrete,
  SampledScore,
  SampledContinuous,
  VrDiscrete,
  VrScore,
  VrContinuous,
};

struct GradientEstimate {
  std::vector<double> grad;
  int episode = 0;
  int rollouts = 0;
  EstimatorKind kind = EstimatorKind::ExactDiscrete;
};

// Thin Fisher factor: column i is grad_theta log rho(tau_i) / (H sqrt(K)).
// The implied Fisher estimate is the Gram product of the factor, applied
// matrix-free.
class FisherFactor {
 public:
  FisherFactor(int dim, int cols) : dim_(dim), cols_(cols), data_(static_cast<std::size_t>(dim) * cols, 0.0) {}

  int dim() const { return dim_; }
  int cols() const { return cols_; }
  std::span<double> column(int i) { return {&data_[static_cast<std::size_t>(i) * dim_], static_cast<std::size_t>(dim_)}; }
  std::span<const double> column(int i) const {
    return {&data_[static_cast<std::size_t>(i) * dim_], static_cast<std::size_t>(dim_)};
  }

  // out = (S S^T + damping I) x without materializing the Gram matrix.
  void gram_matvec(std::span<const double> x, double damping, std::span<double> out) const;

 private:
  int dim_, cols_;
  std::vector<double> data_;  // column-major
};

// Evaluates a differentiable policy at every state and returns the per-(s,t)
// table, so the exact evaluation machinery applies to parametric families.
SimplexPolicy materialize_policy(const FiniteMdp& mdp, const DiscretePolicy& policy,
                                 const Featurizer* featurizer);

// ell_n(pi) = (1/H) sum_t E_{s~d_t^rollin} E_{a~pi}[Q_t(s,a)], all terms exact.
double surrogate_loss_exact(const FiniteMdp& mdp, const ExpertOracle& oracle,
                            const SimplexPolicy& learner, const SimplexPolicy& rollin);
double surrogate_loss_exact(const FiniteMdp& mdp, const ExpertOracle& oracle,
                            const DiscretePolicy& learner, const Featurizer* featurizer,
                            const SimplexPolicy& rollin);

// grad of the surrogate over exact state distributions (discrete actions).
GradientEstimate exact_gradient_discrete(const FiniteMdp& mdp, const ExpertOracle& oracle,
                                         const DiscretePolicy& policy,
                                         const Featurizer* featurizer,
                                         const SimplexPolicy& rollin);

// (1/(HK)) sum_{i,t} sum_a grad pi(a|s) G(s,a), with G the cost-to-go or the
// advantage. Noisy oracles are queried fresh per (state, action).
GradientEstimate sampled_gradient_discrete(const FiniteMdp& mdp,
                                           std::span<const Trajectory> trajectories,
                                           const ExpertOracle& oracle,
                                           const DiscretePolicy& policy,
                                           const Featurizer* featurizer, bool use_advantage,
                                           Rng* rng, int episode = 0);

// Score-function form of the discrete estimator; this is the variant whose
// variance an advantage baseline actually reduces (the full action sum above
// is pointwise invariant to action-independent baselines).
GradientEstimate sampled_gradient_score(const FiniteMdp& mdp,
                                        std::span<const Trajectory> trajectories,
                                        const ExpertOracle& oracle,
                                        const DiscretePolicy& policy,
                                        const Featurizer* featurizer, bool use_advantage,
                                        Rng* rng, int episode = 0);

// Importance-weighted surrogate value: the policy is evaluated at its current
// parameters, the recorded behavior probabilities supply the denominator.
double surrogate_loss_importance(const FiniteMdp& mdp,
                                 std::span<const Trajectory> trajectories,
                                 const ExpertOracle& oracle, const DiscretePolicy& policy,
                                 const Featurizer* featurizer, Rng* rng);

FisherFactor fisher_factor(const FiniteMdp& mdp, std::span<const Trajectory> trajectories,
                           const DiscretePolicy& policy, const Featurizer* featurizer);

// ---------------------------------------------------------------------------
// Continuous-action versions over the point-mass task, whose expert
// cost-to-go is available in closed form.
// ---------------------------------------------------------------------------

ContTrajectory rollout(const PointMassEnv& env, const GaussianPolicy& policy, Rng& rng);

double surrogate_loss_importance(const PointMassEnv& env,
                                 std::span<const ContTrajectory> trajectories,
                                 const GaussianPolicy& policy);

// Score-function gradient at the behavior parameters, where the importance
// ratio is 1.
GradientEstimate sampled_gradient_continuous(const PointMassEnv& env,
                                             std::span<const ContTrajectory> trajectories,
                                             const GaussianPolicy& policy,
                                             bool use_advantage, int episode = 0);

FisherFactor fisher_factor(std::span<const ContTrajectory> trajectories,
                           const GaussianPolicy& policy);

}  // namespace illab
