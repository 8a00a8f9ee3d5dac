#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "illab/environments.hpp"
#include "illab/mdp.hpp"
#include "illab/rng.hpp"

namespace illab {

// Observation handed to differentiable policies. Tabular families read the
// state id; feature families read the feature vector. A nonempty legality
// mask restricts the distribution's support.
struct DiscreteObs {
  int state = -1;
  std::span<const double> features{};
  std::span<const std::uint8_t> legal{};
};

class DifferentiablePolicy {
 public:
  virtual ~DifferentiablePolicy() = default;

  int dim() const { return static_cast<int>(theta_.size()); }
  const std::vector<double>& params() const { return theta_; }
  void set_params(std::vector<double> theta);

 protected:
  std::vector<double> theta_;
};

// Discrete-action families share a softmax head over family-specific logits.
class DiscretePolicy : public DifferentiablePolicy {
 public:
  virtual int num_actions() const = 0;
  virtual std::vector<double> probs(const DiscreteObs& obs) const = 0;
  // out += (d logits / d theta)^T gz, i.e. the chain rule below the softmax.
  virtual void accumulate_logit_grad(const DiscreteObs& obs, std::span<const double> gz,
                                     std::span<double> out) const = 0;

  // grad_theta log pi(action | obs); throws NumericError on a zero-probability
  // action.
  std::vector<double> log_prob_grad(const DiscreteObs& obs, int action) const;
  void add_log_prob_grad(const DiscreteObs& obs, int action, double scale,
                         std::span<double> out) const;
};

// out += scale * sum_a grad_theta pi(a|obs) q[a], using the softmax identity
// grad_logit[j] = pi_j (q_j - pi.q).
void add_policy_gradient_weighted(const DiscretePolicy& policy, const DiscreteObs& obs,
                                  std::span<const double> q, double scale,
                                  std::span<double> out);

// Per-state logit table; theta starts at zero (uniform policy).
class TabularSoftmaxPolicy final : public DiscretePolicy {
 public:
  TabularSoftmaxPolicy(int num_states, int num_actions);
  int num_actions() const override { return num_actions_; }
  std::vector<double> probs(const DiscreteObs& obs) const override;
  void accumulate_logit_grad(const DiscreteObs& obs, std::span<const double> gz,
                             std::span<double> out) const override;

 private:
  int num_states_, num_actions_;
};

// logits = W x; scaled-uniform fan-in initialization from the seed.
class LinearSoftmaxPolicy final : public DiscretePolicy {
 public:
  LinearSoftmaxPolicy(int num_features, int num_actions, std::uint64_t seed);
  int num_actions() const override { return num_actions_; }
  std::vector<double> probs(const DiscreteObs& obs) const override;
  void accumulate_logit_grad(const DiscreteObs& obs, std::span<const double> gz,
                             std::span<double> out) const override;

 private:
  int num_features_, num_actions_;
};

// One rectified-linear hidden layer: logits = W2 relu(W1 x + b1) + b2.
class MlpSoftmaxPolicy final : public DiscretePolicy {
 public:
  MlpSoftmaxPolicy(int num_features, int hidden, int num_actions, std::uint64_t seed);
  int num_actions() const override { return num_actions_; }
  std::vector<double> probs(const DiscreteObs& obs) const override;
  void accumulate_logit_grad(const DiscreteObs& obs, std::span<const double> gz,
                             std::span<double> out) const override;

 private:
  void forward(std::span<const double> x, std::vector<double>& hidden_pre,
               std::vector<double>& logits) const;
  int num_features_, hidden_, num_actions_;
};

// Scalar-action Gaussian: mean = w.x, state-independent learnable log-std
// floored at sigma_min so densities stay finite.
class GaussianPolicy final : public DifferentiablePolicy {
 public:
  static constexpr double kSigmaMin = 1e-3;

  GaussianPolicy(int num_features, double init_log_std, std::uint64_t seed);

  double mean(std::span<const double> x) const;
  double stddev() const;
  double sample(std::span<const double> x, Rng& rng) const;
  double density(std::span<const double> x, double action) const;
  double log_density(std::span<const double> x, double action) const;
  std::vector<double> grad_log_density(std::span<const double> x, double action) const;
  void add_grad_log_density(std::span<const double> x, double action, double scale,
                            std::span<double> out) const;

 private:
  int num_features_;
};

// State featurizers for tabular environments.
class Featurizer {
 public:
  virtual ~Featurizer() = default;
  virtual int dim() const = 0;
  virtual void write(int state, std::span<double> out) const = 0;
};

// One-hot state encoding with a trailing constant for bias terms.
class OneHotFeaturizer final : public Featurizer {
 public:
  explicit OneHotFeaturizer(int num_states) : num_states_(num_states) {}
  int dim() const override { return num_states_ + 1; }
  void write(int state, std::span<double> out) const override;

 private:
  int num_states_;
};

// Builds the observation for a tabular state, writing features into scratch
// when a featurizer is supplied.
DiscreteObs tabular_obs(int state, const Featurizer* featurizer,
                        std::vector<double>& scratch);

// Reactive parser features: one-hot ids of the three most recent stack,
// buffer, and arc items, their normalized positions, a bias, and conjunction
// blocks for the attachment-decisive pairs (stack0/buffer0, stack0/buffer1,
// stack1/buffer0).
class ParseFeaturizer {
 public:
  explicit ParseFeaturizer(int vocab) : vocab_(vocab) {}
  int dim() const {
    const int slot = vocab_ + 2;
    return 9 * slot + 9 + 1 + 3 * slot * slot;
  }
  void write(const ParserState& state, std::span<double> out) const;

 private:
  int vocab_;
};

// grad_theta log pi(a|obs), exposed as a free function for symmetry with the
// trajectory version.
std::vector<double> log_policy_gradient(const DiscretePolicy& policy, const DiscreteObs& obs,
                                        int action);

// sum_t grad_theta log pi(a_t|s_t) over a tabular trajectory.
std::vector<double> trajectory_log_gradient(const DiscretePolicy& policy,
                                            const Featurizer* featurizer,
                                            const Trajectory& traj);

// Weight vector over the deterministic root-to-leaf base policies of a tree.
struct BasePolicyMixture {
  std::vector<double> weights;

  explicit BasePolicyMixture(int num_leaves)
      : weights(num_leaves, 1.0 / num_leaves) {}
  explicit BasePolicyMixture(std::vector<double> w);
};

// The state-level stochastic policy equivalent to drawing a base policy at
// the root: each internal row is the renormalized subtree weight split;
// zero-mass nodes get uniform rows.
SimplexPolicy mixture_as_simplex(const BasePolicyMixture& mix, const TreeSpec& tree);

}  // namespace illab
