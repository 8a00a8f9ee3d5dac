#include "illab/estimators.hpp"

#include <cmath>

#include "illab/errors.hpp"
#include "illab/vecmath.hpp"

namespace illab {

void FisherFactor::gram_matvec(std::span<const double> x, double damping,
                               std::span<double> out) const {
  std::vector<double> proj(cols_, 0.0);
  for (int i = 0; i < cols_; ++i) proj[i] = dot(column(i), x);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = damping * x[j];
  for (int i = 0; i < cols_; ++i) axpy(proj[i], column(i), out);
}

SimplexPolicy materialize_policy(const FiniteMdp& mdp, const DiscretePolicy& policy,
                                 const Featurizer* featurizer) {
  SimplexPolicy table(mdp.num_states(), mdp.num_actions(), mdp.horizon());
  std::vector<double> scratch;
  for (int s = 0; s < mdp.num_states(); ++s) {
    const DiscreteObs obs = tabular_obs(s, featurizer, scratch);
    table.set_row_all_steps(s, policy.probs(obs));
  }
  return table;
}

namespace {

void require_exact(const ExpertOracle& oracle, const char* what) {
  if (!oracle.exact_capable()) {
    throw UnsupportedModeError(std::string(what) + " requires an exact oracle");
  }
}

}  // namespace

double surrogate_loss_exact(const FiniteMdp& mdp, const ExpertOracle& oracle,
                            const SimplexPolicy& learner, const SimplexPolicy& rollin) {
  require_exact(oracle, "exact surrogate loss");
  const StateDistribution d = state_distribution(mdp, rollin);
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  double loss = 0.0;
  for (int t = 1; t <= H; ++t) {
    for (int s = 0; s < S; ++s) {
      const double ds = d.per_step[t - 1][s];
      if (ds == 0.0) continue;
      const std::span<const double> pi = learner.row(t - 1, s);
      for (int a = 0; a < A; ++a) {
        if (pi[a] == 0.0) continue;
        loss += ds * pi[a] * oracle.query_q(s, t, a, nullptr);
      }
    }
  }
  return loss / H;
}

double surrogate_loss_exact(const FiniteMdp& mdp, const ExpertOracle& oracle,
                            const DiscretePolicy& learner, const Featurizer* featurizer,
                            const SimplexPolicy& rollin) {
  return surrogate_loss_exact(mdp, oracle, materialize_policy(mdp, learner, featurizer),
                              rollin);
}

GradientEstimate exact_gradient_discrete(const FiniteMdp& mdp, const ExpertOracle& oracle,
                                         const DiscretePolicy& policy,
                                         const Featurizer* featurizer,
                                         const SimplexPolicy& rollin) {
  require_exact(oracle, "exact gradient");
  const StateDistribution d = state_distribution(mdp, rollin);
  const int S = mdp.num_states(), H = mdp.horizon();
  GradientEstimate est;
  est.kind = EstimatorKind::ExactDiscrete;
  est.grad.assign(policy.dim(), 0.0);
  std::vector<double> scratch;
  for (int t = 1; t <= H; ++t) {
    for (int s = 0; s < S; ++s) {
      const double ds = d.per_step[t - 1][s];
      if (ds == 0.0) continue;
      const DiscreteObs obs = tabular_obs(s, featurizer, scratch);
      const std::vector<double> q = oracle.query_q_vector(s, t, nullptr);
      add_policy_gradient_weighted(policy, obs, q, ds / H, est.grad);
    }
  }
  if (!all_finite(est.grad)) throw NumericError("non-finite exact gradient");
  return est;
}

namespace {

// Shared driver for the two sampled discrete forms.
GradientEstimate sampled_discrete_impl(const FiniteMdp& mdp,
                                       std::span<const Trajectory> trajectories,
                                       const ExpertOracle& oracle,
                                       const DiscretePolicy& policy,
                                       const Featurizer* featurizer, bool use_advantage,
                                       bool score_form, Rng* rng, int episode) {
  if (trajectories.empty()) throw DataError("empty trajectory batch");
  if (use_advantage && !oracle.exact_capable()) {
    throw UnsupportedModeError("advantage baseline requires an exact-value oracle");
  }
  const int H = mdp.horizon();
  const int K = static_cast<int>(trajectories.size());
  GradientEstimate est;
  est.episode = episode;
  est.rollouts = K;
  est.kind = score_form ? (use_advantage ? EstimatorKind::VrScore : EstimatorKind::SampledScore)
                        : (use_advantage ? EstimatorKind::VrDiscrete
                                         : EstimatorKind::SampledDiscrete);
  est.grad.assign(policy.dim(), 0.0);
  const double scale = 1.0 / (static_cast<double>(H) * K);
  std::vector<double> scratch;
  for (const Trajectory& traj : trajectories) {
    for (int t = 1; t <= traj.length(); ++t) {
      const TrajStep& step = traj.steps[t - 1];
      const DiscreteObs obs = tabular_obs(step.state, featurizer, scratch);
      if (score_form) {
        double g = oracle.query_q(step.state, t, step.action, rng);
        if (use_advantage) g -= oracle.value(step.state, t);
        policy.add_log_prob_grad(obs, step.action, scale * g, est.grad);
      } else {
        std::vector<double> q = oracle.query_q_vector(step.state, t, rng);
        if (use_advantage) {
          const double v = oracle.value(step.state, t);
          for (double& x : q) x -= v;
        }
        add_policy_gradient_weighted(policy, obs, q, scale, est.grad);
      }
    }
  }
  if (!all_finite(est.grad)) throw NumericError("non-finite sampled gradient");
  return est;
}

}  // namespace

GradientEstimate sampled_gradient_discrete(const FiniteMdp& mdp,
                                           std::span<const Trajectory> trajectories,
                                           const ExpertOracle& oracle,
                                           const DiscretePolicy& policy,
                                           const Featurizer* featurizer, bool use_advantage,
                                           Rng* rng, int episode) {
  return sampled_discrete_impl(mdp, trajectories, oracle, policy, featurizer, use_advantage,
                               /*score_form=*/false, rng, episode);
}

GradientEstimate sampled_gradient_score(const FiniteMdp& mdp,
                                        std::span<const Trajectory> trajectories,
                                        const ExpertOracle& oracle,
                                        const DiscretePolicy& policy,
                                        const Featurizer* featurizer, bool use_advantage,
                                        Rng* rng, int episode) {
  return sampled_discrete_impl(mdp, trajectories, oracle, policy, featurizer, use_advantage,
                               /*score_form=*/true, rng, episode);
}

double surrogate_loss_importance(const FiniteMdp& mdp,
                                 std::span<const Trajectory> trajectories,
                                 const ExpertOracle& oracle, const DiscretePolicy& policy,
                                 const Featurizer* featurizer, Rng* rng) {
  if (trajectories.empty()) throw DataError("empty trajectory batch");
  const int H = mdp.horizon();
  const int K = static_cast<int>(trajectories.size());
  double loss = 0.0;
  std::vector<double> scratch;
  for (const Trajectory& traj : trajectories) {
    for (int t = 1; t <= traj.length(); ++t) {
      const TrajStep& step = traj.steps[t - 1];
      if (!(step.behavior_prob > 0.0)) {
        throw DataError("recorded behavior probability must be positive");
      }
      const DiscreteObs obs = tabular_obs(step.state, featurizer, scratch);
      const double ratio = policy.probs(obs)[step.action] / step.behavior_prob;
      loss += ratio * oracle.query_q(step.state, t, step.action, rng);
    }
  }
  return loss / (static_cast<double>(H) * K);
}

FisherFactor fisher_factor(const FiniteMdp& mdp, std::span<const Trajectory> trajectories,
                           const DiscretePolicy& policy, const Featurizer* featurizer) {
  if (trajectories.empty()) throw DataError("empty trajectory batch");
  const int K = static_cast<int>(trajectories.size());
  FisherFactor factor(policy.dim(), K);
  const double scale = 1.0 / (mdp.horizon() * std::sqrt(static_cast<double>(K)));
  std::vector<double> scratch;
  for (int i = 0; i < K; ++i) {
    std::span<double> col = factor.column(i);
    for (int t = 1; t <= trajectories[i].length(); ++t) {
      const TrajStep& step = trajectories[i].steps[t - 1];
      const DiscreteObs obs = tabular_obs(step.state, featurizer, scratch);
      policy.add_log_prob_grad(obs, step.action, scale, col);
    }
  }
  return factor;
}

// ---------------------------------------------------------------------------
// Point-mass versions
// ---------------------------------------------------------------------------

ContTrajectory rollout(const PointMassEnv& env, const GaussianPolicy& policy, Rng& rng) {
  ContTrajectory traj;
  traj.steps.reserve(env.horizon());
  std::array<double, 2> x = env.sample_init(rng);
  for (int t = 1; t <= env.horizon(); ++t) {
    const auto feat = point_mass_features(x);
    const double u = policy.sample(feat, rng);
    const double density = policy.density(feat, u);
    traj.steps.push_back({x, u, env.step_cost(x, u), density});
    if (t < env.horizon()) x = env.step(x, u);
  }
  return traj;
}

double surrogate_loss_importance(const PointMassEnv& env,
                                 std::span<const ContTrajectory> trajectories,
                                 const GaussianPolicy& policy) {
  if (trajectories.empty()) throw DataError("empty trajectory batch");
  double loss = 0.0;
  for (const ContTrajectory& traj : trajectories) {
    for (int t = 1; t <= traj.length(); ++t) {
      const ContStep& step = traj.steps[t - 1];
      if (!(step.behavior_density > 0.0)) {
        throw DataError("recorded behavior density must be positive");
      }
      const double ratio =
          policy.density(point_mass_features(step.state), step.action) / step.behavior_density;
      loss += ratio * env.q_star(step.state, step.action, t);
    }
  }
  return loss / (static_cast<double>(env.horizon()) * trajectories.size());
}

GradientEstimate sampled_gradient_continuous(const PointMassEnv& env,
                                             std::span<const ContTrajectory> trajectories,
                                             const GaussianPolicy& policy,
                                             bool use_advantage, int episode) {
  if (trajectories.empty()) throw DataError("empty trajectory batch");
  const int K = static_cast<int>(trajectories.size());
  GradientEstimate est;
  est.episode = episode;
  est.rollouts = K;
  est.kind = use_advantage ? EstimatorKind::VrContinuous : EstimatorKind::SampledContinuous;
  est.grad.assign(policy.dim(), 0.0);
  const double scale = 1.0 / (static_cast<double>(env.horizon()) * K);
  for (const ContTrajectory& traj : trajectories) {
    for (int t = 1; t <= traj.length(); ++t) {
      const ContStep& step = traj.steps[t - 1];
      double g = env.q_star(step.state, step.action, t);
      if (use_advantage) g -= env.v_star(step.state, t);
      policy.add_grad_log_density(point_mass_features(step.state), step.action, scale * g,
                                  est.grad);
    }
  }
  if (!all_finite(est.grad)) throw NumericError("non-finite sampled gradient");
  return est;
}

FisherFactor fisher_factor(std::span<const ContTrajectory> trajectories,
                           const GaussianPolicy& policy) {
  if (trajectories.empty()) throw DataError("empty trajectory batch");
  const int K = static_cast<int>(trajectories.size());
  FisherFactor factor(policy.dim(), K);
  for (int i = 0; i < K; ++i) {
    const int H = trajectories[i].length();
    const double scale = 1.0 / (H * std::sqrt(static_cast<double>(K)));
    std::span<double> col = factor.column(i);
    for (const ContStep& step : trajectories[i].steps) {
      policy.add_grad_log_density(point_mass_features(step.state), step.action, scale, col);
    }
  }
  return factor;
}

}  // namespace illab
