#include "illab/policies.hpp"

#include <algorithm>
#include <cmath>

#include "illab/errors.hpp"
#include "illab/tolerances.hpp"
#include "illab/vecmath.hpp"

namespace illab {

void DifferentiablePolicy::set_params(std::vector<double> theta) {
  if (theta.size() != theta_.size()) throw ConfigError("parameter vector has wrong length");
  if (!all_finite(theta)) throw NumericError("non-finite policy parameters");
  theta_ = std::move(theta);
}

std::vector<double> DiscretePolicy::log_prob_grad(const DiscreteObs& obs, int action) const {
  std::vector<double> out(theta_.size(), 0.0);
  add_log_prob_grad(obs, action, 1.0, out);
  return out;
}

void DiscretePolicy::add_log_prob_grad(const DiscreteObs& obs, int action, double scale,
                                       std::span<double> out) const {
  const std::vector<double> pi = probs(obs);
  if (action < 0 || action >= num_actions() || pi[action] <= 0.0) {
    throw NumericError("log-gradient of a zero-probability action");
  }
  std::vector<double> gz(pi.size(), 0.0);
  for (std::size_t j = 0; j < pi.size(); ++j) gz[j] = -scale * pi[j];
  gz[action] += scale;
  accumulate_logit_grad(obs, gz, out);
}

void add_policy_gradient_weighted(const DiscretePolicy& policy, const DiscreteObs& obs,
                                  std::span<const double> q, double scale,
                                  std::span<double> out) {
  const std::vector<double> pi = policy.probs(obs);
  double baseline = 0.0;
  for (std::size_t j = 0; j < pi.size(); ++j) baseline += pi[j] * q[j];
  std::vector<double> gz(pi.size(), 0.0);
  for (std::size_t j = 0; j < pi.size(); ++j) {
    if (pi[j] > 0.0) gz[j] = scale * pi[j] * (q[j] - baseline);
  }
  policy.accumulate_logit_grad(obs, gz, out);
}

// ---------------------------------------------------------------------------
// Tabular softmax
// ---------------------------------------------------------------------------

TabularSoftmaxPolicy::TabularSoftmaxPolicy(int num_states, int num_actions)
    : num_states_(num_states), num_actions_(num_actions) {
  theta_.assign(static_cast<std::size_t>(num_states) * num_actions, 0.0);
}

std::vector<double> TabularSoftmaxPolicy::probs(const DiscreteObs& obs) const {
  if (obs.state < 0 || obs.state >= num_states_) {
    throw ConfigError("tabular policy needs a valid state id");
  }
  std::vector<double> logits(theta_.begin() + static_cast<std::size_t>(obs.state) * num_actions_,
                             theta_.begin() + static_cast<std::size_t>(obs.state + 1) * num_actions_);
  if (!all_finite(logits)) throw NumericError("non-finite logits");
  softmax_inplace(logits, obs.legal);
  return logits;
}

void TabularSoftmaxPolicy::accumulate_logit_grad(const DiscreteObs& obs,
                                                 std::span<const double> gz,
                                                 std::span<double> out) const {
  double* dst = &out[static_cast<std::size_t>(obs.state) * num_actions_];
  for (int j = 0; j < num_actions_; ++j) dst[j] += gz[j];
}

// ---------------------------------------------------------------------------
// Linear softmax
// ---------------------------------------------------------------------------

namespace {

std::vector<double> fan_in_init(std::size_t count, int fan_in, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x1417));
  const double scale = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  std::vector<double> w(count);
  for (double& v : w) v = rng.uniform(-scale, scale);
  return w;
}

}  // namespace

LinearSoftmaxPolicy::LinearSoftmaxPolicy(int num_features, int num_actions,
                                         std::uint64_t seed)
    : num_features_(num_features), num_actions_(num_actions) {
  theta_ = fan_in_init(static_cast<std::size_t>(num_features) * num_actions, num_features,
                       seed);
}

std::vector<double> LinearSoftmaxPolicy::probs(const DiscreteObs& obs) const {
  if (static_cast<int>(obs.features.size()) != num_features_) {
    throw ConfigError("feature vector has wrong length");
  }
  std::vector<double> logits(num_actions_);
  for (int a = 0; a < num_actions_; ++a) {
    logits[a] = dot({&theta_[static_cast<std::size_t>(a) * num_features_],
                     static_cast<std::size_t>(num_features_)},
                    obs.features);
  }
  if (!all_finite(logits)) throw NumericError("non-finite logits");
  softmax_inplace(logits, obs.legal);
  return logits;
}

void LinearSoftmaxPolicy::accumulate_logit_grad(const DiscreteObs& obs,
                                                std::span<const double> gz,
                                                std::span<double> out) const {
  for (int a = 0; a < num_actions_; ++a) {
    if (gz[a] == 0.0) continue;
    double* row = &out[static_cast<std::size_t>(a) * num_features_];
    for (int f = 0; f < num_features_; ++f) row[f] += gz[a] * obs.features[f];
  }
}

// ---------------------------------------------------------------------------
// One-hidden-layer softmax
// ---------------------------------------------------------------------------

MlpSoftmaxPolicy::MlpSoftmaxPolicy(int num_features, int hidden, int num_actions,
                                   std::uint64_t seed)
    : num_features_(num_features), hidden_(hidden), num_actions_(num_actions) {
  const std::size_t w1 = static_cast<std::size_t>(hidden) * num_features;
  const std::size_t w2 = static_cast<std::size_t>(num_actions) * hidden;
  theta_ = fan_in_init(w1, num_features, seed);
  theta_.resize(w1 + hidden, 0.0);  // b1
  std::vector<double> top = fan_in_init(w2, hidden, mix_seed(seed, 2));
  theta_.insert(theta_.end(), top.begin(), top.end());
  theta_.resize(w1 + hidden + w2 + num_actions, 0.0);  // b2
}

void MlpSoftmaxPolicy::forward(std::span<const double> x, std::vector<double>& hidden_pre,
                               std::vector<double>& logits) const {
  const std::size_t w1 = static_cast<std::size_t>(hidden_) * num_features_;
  const double* b1 = &theta_[w1];
  const double* w2 = &theta_[w1 + hidden_];
  const double* b2 = &theta_[w1 + hidden_ + static_cast<std::size_t>(num_actions_) * hidden_];
  hidden_pre.assign(hidden_, 0.0);
  for (int j = 0; j < hidden_; ++j) {
    hidden_pre[j] = b1[j] + dot({&theta_[static_cast<std::size_t>(j) * num_features_],
                                 static_cast<std::size_t>(num_features_)},
                                x);
  }
  logits.assign(num_actions_, 0.0);
  for (int a = 0; a < num_actions_; ++a) {
    double z = b2[a];
    for (int j = 0; j < hidden_; ++j) {
      if (hidden_pre[j] > 0.0) z += w2[static_cast<std::size_t>(a) * hidden_ + j] * hidden_pre[j];
    }
    logits[a] = z;
  }
}

std::vector<double> MlpSoftmaxPolicy::probs(const DiscreteObs& obs) const {
  if (static_cast<int>(obs.features.size()) != num_features_) {
    throw ConfigError("feature vector has wrong length");
  }
  std::vector<double> hidden_pre, logits;
  forward(obs.features, hidden_pre, logits);
  if (!all_finite(logits)) throw NumericError("non-finite logits");
  softmax_inplace(logits, obs.legal);
  return logits;
}

void MlpSoftmaxPolicy::accumulate_logit_grad(const DiscreteObs& obs,
                                             std::span<const double> gz,
                                             std::span<double> out) const {
  std::vector<double> hidden_pre, logits;
  forward(obs.features, hidden_pre, logits);
  const std::size_t w1 = static_cast<std::size_t>(hidden_) * num_features_;
  const std::size_t w2_off = w1 + hidden_;
  const std::size_t b2_off = w2_off + static_cast<std::size_t>(num_actions_) * hidden_;
  std::vector<double> dh(hidden_, 0.0);
  for (int a = 0; a < num_actions_; ++a) {
    if (gz[a] == 0.0) continue;
    out[b2_off + a] += gz[a];
    for (int j = 0; j < hidden_; ++j) {
      if (hidden_pre[j] > 0.0) {
        out[w2_off + static_cast<std::size_t>(a) * hidden_ + j] += gz[a] * hidden_pre[j];
        dh[j] += gz[a] * theta_[w2_off + static_cast<std::size_t>(a) * hidden_ + j];
      }
    }
  }
  for (int j = 0; j < hidden_; ++j) {
    if (hidden_pre[j] <= 0.0 || dh[j] == 0.0) continue;
    out[w1 + j] += dh[j];
    double* row = &out[static_cast<std::size_t>(j) * num_features_];
    for (int f = 0; f < num_features_; ++f) row[f] += dh[j] * obs.features[f];
  }
}

// ---------------------------------------------------------------------------
// Gaussian
// ---------------------------------------------------------------------------

GaussianPolicy::GaussianPolicy(int num_features, double init_log_std, std::uint64_t seed)
    : num_features_(num_features) {
  theta_ = fan_in_init(num_features, num_features, seed);
  theta_.push_back(init_log_std);
}

double GaussianPolicy::mean(std::span<const double> x) const {
  return dot({theta_.data(), static_cast<std::size_t>(num_features_)}, x);
}

double GaussianPolicy::stddev() const {
  return std::max(std::exp(theta_.back()), kSigmaMin);
}

double GaussianPolicy::sample(std::span<const double> x, Rng& rng) const {
  return mean(x) + stddev() * rng.gaussian();
}

double GaussianPolicy::log_density(std::span<const double> x, double action) const {
  const double s = stddev();
  const double z = (action - mean(x)) / s;
  return -0.5 * z * z - std::log(s) - 0.5 * std::log(2.0 * M_PI);
}

double GaussianPolicy::density(std::span<const double> x, double action) const {
  return std::exp(log_density(x, action));
}

std::vector<double> GaussianPolicy::grad_log_density(std::span<const double> x,
                                                     double action) const {
  std::vector<double> out(theta_.size(), 0.0);
  add_grad_log_density(x, action, 1.0, out);
  return out;
}

void GaussianPolicy::add_grad_log_density(std::span<const double> x, double action,
                                          double scale, std::span<double> out) const {
  const double s = stddev();
  const double z = (action - mean(x)) / s;
  for (int f = 0; f < num_features_; ++f) out[f] += scale * z / s * x[f];
  // The floor zeroes the log-std derivative when active.
  if (std::exp(theta_.back()) >= kSigmaMin) out[num_features_] += scale * (z * z - 1.0);
}

// ---------------------------------------------------------------------------
// Featurizers
// ---------------------------------------------------------------------------

void OneHotFeaturizer::write(int state, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  out[state] = 1.0;
  out[num_states_] = 1.0;
}

DiscreteObs tabular_obs(int state, const Featurizer* featurizer,
                        std::vector<double>& scratch) {
  DiscreteObs obs;
  obs.state = state;
  if (featurizer != nullptr) {
    scratch.resize(featurizer->dim());
    featurizer->write(state, scratch);
    obs.features = scratch;
  }
  return obs;
}

void ParseFeaturizer::write(const ParserState& state, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const Sentence& sent = *state.sentence;
  const int slot_size = vocab_ + 2;
  const int len = sent.length();
  const auto id_of = [&](int pos) {
    // pos -1 = empty slot, 0 = virtual root, >= 1 = sentence token.
    if (pos < 0) return vocab_ + 1;
    if (pos == 0) return 0;
    return sent.tokens[pos - 1];
  };
  const auto encode = [&](int slot, int pos) {
    out[slot * slot_size + id_of(pos)] = 1.0;
    out[9 * slot_size + slot] = pos > 0 ? static_cast<double>(pos) / len : 0.0;
  };
  const auto stack_pos = [&](int depth) {
    const int si = static_cast<int>(state.stack.size()) - 1 - depth;
    return si >= 0 ? state.stack[si] : -1;
  };
  const auto buffer_pos = [&](int ahead) {
    const int pos = state.buffer_pos + ahead;
    return pos <= len ? pos : -1;
  };
  for (int i = 0; i < 3; ++i) encode(i, stack_pos(i));
  for (int i = 0; i < 3; ++i) encode(3 + i, buffer_pos(i));
  for (int i = 0; i < 3; ++i) {
    const int ai = static_cast<int>(state.arc_order.size()) - 1 - i;
    encode(6 + i, ai >= 0 ? state.arc_order[ai] : -1);
  }
  const int scalars = 9 * slot_size + 9;
  out[scalars] = 1.0;
  // Conjunctions of the pairs that decide attachments.
  const int pair_base = scalars + 1;
  const int pairs[3][2] = {{stack_pos(0), buffer_pos(0)},
                           {stack_pos(0), buffer_pos(1)},
                           {stack_pos(1), buffer_pos(0)}};
  for (int p = 0; p < 3; ++p) {
    const int index = id_of(pairs[p][0]) * slot_size + id_of(pairs[p][1]);
    out[pair_base + p * slot_size * slot_size + index] = 1.0;
  }
}

// ---------------------------------------------------------------------------
// Trajectory gradients and base-policy mixtures
// ---------------------------------------------------------------------------

std::vector<double> log_policy_gradient(const DiscretePolicy& policy, const DiscreteObs& obs,
                                        int action) {
  return policy.log_prob_grad(obs, action);
}

std::vector<double> trajectory_log_gradient(const DiscretePolicy& policy,
                                            const Featurizer* featurizer,
                                            const Trajectory& traj) {
  std::vector<double> out(policy.dim(), 0.0);
  std::vector<double> scratch;
  for (const TrajStep& step : traj.steps) {
    const DiscreteObs obs = tabular_obs(step.state, featurizer, scratch);
    policy.add_log_prob_grad(obs, step.action, 1.0, out);
  }
  return out;
}

BasePolicyMixture::BasePolicyMixture(std::vector<double> w) : weights(std::move(w)) {
  double mass = 0.0;
  for (double v : weights) {
    if (!(v >= 0.0)) throw ConfigError("mixture weights must be nonnegative");
    mass += v;
  }
  if (std::fabs(mass - 1.0) > tols().row_sum) {
    throw ConfigError("mixture weights must sum to 1");
  }
  for (double& v : weights) v /= mass;
}

SimplexPolicy mixture_as_simplex(const BasePolicyMixture& mix, const TreeSpec& tree) {
  if (static_cast<int>(mix.weights.size()) != tree.num_leaves()) {
    throw ConfigError("one weight per base policy required");
  }
  const int S = tree.num_states();
  std::vector<double> node_mass(S, 0.0);
  for (int leaf = 0; leaf < tree.num_leaves(); ++leaf) {
    node_mass[tree.leaf_state(leaf)] = mix.weights[leaf];
  }
  for (int s = tree.first_leaf_state() - 1; s >= 0; --s) {
    node_mass[s] = node_mass[tree.child(s, 0)] + node_mass[tree.child(s, 1)];
  }
  SimplexPolicy policy(S, 2, tree.depth);
  std::vector<double> row(2);
  for (int s = 0; s < S; ++s) {
    if (tree.is_leaf(s)) continue;  // leaf rows stay uniform
    const double left = node_mass[tree.child(s, 0)];
    const double right = node_mass[tree.child(s, 1)];
    if (left + right > 0.0) {
      row[0] = left / (left + right);
      row[1] = right / (left + right);
      policy.set_row_all_steps(s, row);
    }
  }
  return policy;
}

}  // namespace illab
