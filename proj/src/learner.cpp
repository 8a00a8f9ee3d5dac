#include "illab/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <thread>

#include "illab/errors.hpp"
#include "illab/vecmath.hpp"

namespace illab {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double learning_rate(const RunConfig& cfg, int episode) {
  return cfg.lr_schedule == LrSchedule::InvSqrt ? cfg.lr / std::sqrt(static_cast<double>(episode))
                                                : cfg.lr;
}

double mixing_rate(const RunConfig& cfg, int episode) {
  if (cfg.alpha0 == 0.0) return 0.0;
  return cfg.alpha0 * std::pow(cfg.alpha_decay, episode - 1);
}

void validate_common(const RunConfig& cfg) {
  if (cfg.episodes < 1) throw ConfigError("episodes must be at least 1");
  if (cfg.rollouts_per_episode < 1) throw ConfigError("rollouts per episode must be at least 1");
  if (!(cfg.alpha0 >= 0.0 && cfg.alpha0 <= 1.0)) throw ConfigError("alpha0 must lie in [0,1]");
  if (!(cfg.alpha_decay >= 0.0 && cfg.alpha_decay <= 1.0)) {
    throw ConfigError("alpha decay must lie in [0,1]");
  }
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (cfg.rollout_threads < 1) throw ConfigError("rollout threads must be at least 1");
  if (cfg.use_advantage && cfg.oracle != OracleMode::Exact &&
      cfg.oracle != OracleMode::ClairvoyantParse) {
    throw ConfigError("advantage estimators require an exact-value oracle");
  }
}

std::vector<Trajectory> roll_batch(const FiniteMdp& mdp, const SimplexPolicy& rollin, int K,
                                   int threads, std::uint64_t episode_seed) {
  std::vector<Trajectory> out(K);
  const auto work = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      Rng rng(mix_seed(episode_seed, 0x5eed00 + i));
      out[i] = rollout(mdp, rollin, rng);
    }
  };
  if (threads <= 1 || K <= 1) {
    work(0, K);
  } else {
    const int used = std::min(threads, K);
    std::vector<std::thread> pool;
    pool.reserve(used);
    for (int w = 0; w < used; ++w) {
      const int lo = K * w / used;
      const int hi = K * (w + 1) / used;
      pool.emplace_back(work, lo, hi);
    }
    for (std::thread& t : pool) t.join();
  }
  return out;
}

struct FiniteSetup {
  FiniteMdp mdp;
  SimplexPolicy expert;
  std::optional<TreeSpec> tree;
};

FiniteSetup make_finite_setup(const RunConfig& cfg) {
  switch (cfg.env) {
    case EnvKind::Tree: {
      TreeEnv env = tree_from_config(cfg);
      SimplexPolicy expert = cfg.expert_leaf >= 0 ? tree_leaf_policy(env.spec, cfg.expert_leaf)
                                                  : env.expert;
      return {std::move(env.mdp), std::move(expert), std::move(env.spec)};
    }
    case EnvKind::BanditRows: {
      BanditRowsEnv env = bandit_rows_from_config(cfg);
      return {std::move(env.mdp), std::move(env.expert), std::nullopt};
    }
    case EnvKind::RandomTabular: {
      FiniteMdp mdp =
          make_random_tabular(cfg.num_states, cfg.num_actions, cfg.horizon, cfg.env_seed);
      SimplexPolicy expert = optimal_policy(mdp);
      return {std::move(mdp), std::move(expert), std::nullopt};
    }
    default:
      throw ConfigError("not a finite tabular environment");
  }
}

ExpertOracle make_finite_oracle(const RunConfig& cfg, const FiniteSetup& setup) {
  switch (cfg.oracle) {
    case OracleMode::Exact:
      return ExpertOracle::exact(setup.mdp, setup.expert, cfg.value_convention);
    case OracleMode::MonteCarlo:
      return ExpertOracle::monte_carlo(setup.mdp, setup.expert, cfg.oracle_rollouts);
    case OracleMode::LeafSample:
      if (!setup.tree || cfg.expert_leaf >= 0) {
        throw ConfigError("leaf-sample oracle needs a tree with its optimal expert");
      }
      return ExpertOracle::leaf_sample(setup.mdp, *setup.tree);
    case OracleMode::ClairvoyantParse:
      break;
  }
  throw ConfigError("oracle mode incompatible with a tabular environment");
}

std::unique_ptr<Featurizer> make_tabular_featurizer(const RunConfig& cfg, int num_states) {
  switch (cfg.family) {
    case PolicyFamilyKind::TabularSoftmax:
      return nullptr;
    case PolicyFamilyKind::LinearSoftmax:
    case PolicyFamilyKind::MlpSoftmax:
      return std::make_unique<OneHotFeaturizer>(num_states);
    default:
      throw ConfigError("policy family incompatible with a tabular environment");
  }
}

std::unique_ptr<DiscretePolicy> make_tabular_policy(const RunConfig& cfg, int num_states,
                                                    int num_actions, int feature_dim) {
  switch (cfg.family) {
    case PolicyFamilyKind::TabularSoftmax:
      return std::make_unique<TabularSoftmaxPolicy>(num_states, num_actions);
    case PolicyFamilyKind::LinearSoftmax:
      return std::make_unique<LinearSoftmaxPolicy>(feature_dim, num_actions, cfg.init_seed);
    case PolicyFamilyKind::MlpSoftmax:
      return std::make_unique<MlpSoftmaxPolicy>(feature_dim, cfg.hidden, num_actions,
                                                cfg.init_seed);
    default:
      throw ConfigError("policy family incompatible with a tabular environment");
  }
}

GradientEstimate tabular_gradient(const RunConfig& cfg, const FiniteMdp& mdp,
                                  std::span<const Trajectory> trajs,
                                  const ExpertOracle& oracle, const DiscretePolicy& policy,
                                  const Featurizer* featurizer, Rng* rng, int episode) {
  if (cfg.gradient_form == GradientForm::Score) {
    return sampled_gradient_score(mdp, trajs, oracle, policy, featurizer, cfg.use_advantage,
                                  rng, episode);
  }
  return sampled_gradient_discrete(mdp, trajs, oracle, policy, featurizer, cfg.use_advantage,
                                   rng, episode);
}

// ---------------------------------------------------------------------------
// Finite tabular environments
// ---------------------------------------------------------------------------

RunResult run_finite_aggrevated(const RunConfig& cfg) {
  FiniteSetup setup = make_finite_setup(cfg);
  const FiniteMdp& mdp = setup.mdp;
  const int S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
  const int K = cfg.rollouts_per_episode;

  if ((cfg.rule == UpdateRule::Ftl || cfg.rule == UpdateRule::WeightedMajority) &&
      !setup.tree) {
    throw ConfigError("this update rule is defined over the tree environment");
  }
  const ExpertOracle oracle = make_finite_oracle(cfg, setup);
  if (cfg.rule == UpdateRule::Ftl && cfg.use_advantage) {
    throw ConfigError("cost-sensitive classification takes raw cost-to-go vectors");
  }

  RunResult result;
  result.curve.mu_star = expected_cost(mdp, setup.expert);
  double best = HUGE_VAL;

  // Learner representations; only the configured one is touched.
  SimplexPolicy eg_policy(S, A, H);
  AggregatedDataset dataset(S, A);
  SimplexPolicy ftl_policy =
      SimplexPolicy::deterministic(S, A, H, std::vector<int>(S, 0));
  std::optional<BasePolicyMixture> mixture;
  if (cfg.rule == UpdateRule::WeightedMajority) {
    mixture.emplace(setup.tree->num_leaves());
  }
  std::unique_ptr<Featurizer> featurizer;
  std::unique_ptr<DiscretePolicy> dpolicy;
  if (cfg.rule == UpdateRule::Ogd || cfg.rule == UpdateRule::Natural) {
    featurizer = make_tabular_featurizer(cfg, S);
    dpolicy = make_tabular_policy(cfg, S, A, featurizer ? featurizer->dim() : 0);
  }

  for (int n = 1; n <= cfg.episodes; ++n) {
    const auto t0 = Clock::now();
    SimplexPolicy current = [&] {
      switch (cfg.rule) {
        case UpdateRule::Eg: return eg_policy;
        case UpdateRule::Ftl: return ftl_policy;
        case UpdateRule::WeightedMajority: return mixture_as_simplex(*mixture, *setup.tree);
        default: return materialize_policy(mdp, *dpolicy, featurizer.get());
      }
    }();
    const double mu_n = expected_cost(mdp, current);
    if (mu_n < best) {
      best = mu_n;
      result.best_mu = mu_n;
      result.best_episode = n;
      result.best_simplex = current;
      if (dpolicy) result.best_params = dpolicy->params();
    }

    const double alpha = mixing_rate(cfg, n);
    const SimplexPolicy& rollin =
        alpha > 0.0 ? (current = mix_policies(setup.expert, current, alpha)) : current;
    const std::uint64_t episode_seed = mix_seed(cfg.seed, n);
    const std::vector<Trajectory> trajs =
        roll_batch(mdp, rollin, K, cfg.rollout_threads, episode_seed);
    Rng oracle_rng(mix_seed(episode_seed, 0x09ac1e));

    switch (cfg.rule) {
      case UpdateRule::Eg: {
        const double eta = learning_rate(cfg, n);
        if (oracle.exact_capable()) {
          const StateDistribution dist = state_distribution(mdp, rollin);
          const EgWeightedCosts wc = eg_weighted_costs(dist, *oracle.exact_table());
          for (int s = 0; s < S; ++s) {
            if (!wc.visited[s]) continue;
            eg_policy.set_row_all_steps(
                s, eg_step_closed_form(eg_policy.row(0, s), eta, wc.qtilde[s]));
          }
        } else {
          // Empirical-visitation variant: states the batch never reached stay
          // unchanged; one fresh noisy vector per distinct (state, step).
          std::vector<int> counts(static_cast<std::size_t>(S) * H, 0);
          for (const Trajectory& traj : trajs) {
            for (int t = 1; t <= traj.length(); ++t) {
              ++counts[static_cast<std::size_t>(traj.steps[t - 1].state) * H + (t - 1)];
            }
          }
          std::vector<double> qtilde(A);
          for (int s = 0; s < S; ++s) {
            double total = 0.0;
            std::fill(qtilde.begin(), qtilde.end(), 0.0);
            for (int t = 1; t <= H; ++t) {
              const int c = counts[static_cast<std::size_t>(s) * H + (t - 1)];
              if (c == 0) continue;
              const std::vector<double> qv = oracle.query_q_vector(s, t, &oracle_rng);
              axpy(static_cast<double>(c), qv, qtilde);
              total += c;
            }
            if (total == 0.0) continue;
            for (double& v : qtilde) v /= total;
            eg_policy.set_row_all_steps(
                s, eg_step_closed_form(eg_policy.row(0, s), eta, qtilde));
          }
        }
        break;
      }
      case UpdateRule::Ftl: {
        for (const Trajectory& traj : trajs) {
          for (int t = 1; t <= traj.length(); ++t) {
            dataset.append(traj.steps[t - 1].state,
                           oracle.query_q_vector(traj.steps[t - 1].state, t,
                                                 oracle.exact_capable() ? nullptr
                                                                        : &oracle_rng));
          }
        }
        ftl_policy = ftl_cost_sensitive(dataset, *setup.tree);
        break;
      }
      case UpdateRule::WeightedMajority: {
        const double numerator =
            cfg.wm_mu > 0.0 ? cfg.wm_mu
                            : std::sqrt(2.0 * std::log(
                                                  static_cast<double>(setup.tree->num_leaves())));
        const double mu_step = numerator / std::sqrt(static_cast<double>(n));
        for (const Trajectory& traj : trajs) {
          mixture = weighted_majority_step(*mixture, traj, *setup.tree, oracle, mu_step,
                                           oracle_rng);
        }
        break;
      }
      case UpdateRule::Ogd: {
        const GradientEstimate grad = tabular_gradient(cfg, mdp, trajs, oracle, *dpolicy,
                                                       featurizer.get(), &oracle_rng, n);
        dpolicy->set_params(ogd_step(dpolicy->params(), grad.grad, learning_rate(cfg, n)));
        break;
      }
      case UpdateRule::Natural: {
        const GradientEstimate grad = tabular_gradient(cfg, mdp, trajs, oracle, *dpolicy,
                                                       featurizer.get(), &oracle_rng, n);
        const FisherFactor factor = fisher_factor(mdp, trajs, *dpolicy, featurizer.get());
        const CgResult cg = cg_solve_low_rank(factor, grad.grad, cfg.cg);
        try {
          const double eta = natural_step_size(cfg.cg.kl_budget, grad.grad, cg.delta);
          dpolicy->set_params(ogd_step(dpolicy->params(), cg.delta, eta));
        } catch (const DegenerateDirectionError&) {
          // Keep the parameters; the episode still counts toward regret.
        }
        break;
      }
    }
    result.curve.push(mu_n, elapsed_ms(t0));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Point mass
// ---------------------------------------------------------------------------

std::vector<ContTrajectory> roll_batch(const PointMassEnv& env, const GaussianPolicy& policy,
                                       int K, int threads, std::uint64_t episode_seed) {
  std::vector<ContTrajectory> out(K);
  const auto work = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      Rng rng(mix_seed(episode_seed, 0x5eed00 + i));
      out[i] = rollout(env, policy, rng);
    }
  };
  if (threads <= 1 || K <= 1) {
    work(0, K);
  } else {
    const int used = std::min(threads, K);
    std::vector<std::thread> pool;
    pool.reserve(used);
    for (int w = 0; w < used; ++w) {
      pool.emplace_back(work, K * w / used, K * (w + 1) / used);
    }
    for (std::thread& t : pool) t.join();
  }
  return out;
}

double monte_carlo_cost(const PointMassEnv& env, const GaussianPolicy& policy, int rollouts,
                        std::uint64_t seed) {
  double total = 0.0;
  for (int i = 0; i < rollouts; ++i) {
    Rng rng(mix_seed(seed, 0xeba100 + i));
    const ContTrajectory traj = rollout(env, policy, rng);
    for (const ContStep& step : traj.steps) total += step.cost;
  }
  return total / rollouts;
}

RunResult run_point_mass_aggrevated(const RunConfig& cfg) {
  if (cfg.rule != UpdateRule::Ogd && cfg.rule != UpdateRule::Natural) {
    throw ConfigError("continuous actions support gradient rules only");
  }
  if (cfg.family != PolicyFamilyKind::Gaussian) {
    throw ConfigError("continuous actions need the gaussian family");
  }
  if (cfg.alpha0 != 0.0) {
    throw ConfigError("expert mixing is not defined for continuous rollouts");
  }
  const PointMassEnv env = make_point_mass(cfg.horizon, cfg.pm_pos_weight, cfg.pm_vel_weight,
                                           cfg.pm_act_weight, cfg.pm_dt);
  GaussianPolicy policy(3, cfg.init_log_std, cfg.init_seed);
  RunResult result;
  result.curve.mu_star = env.expert_expected_cost();
  double best = HUGE_VAL;
  for (int n = 1; n <= cfg.episodes; ++n) {
    const auto t0 = Clock::now();
    const std::uint64_t episode_seed = mix_seed(cfg.seed, n);
    const double mu_n =
        monte_carlo_cost(env, policy, cfg.eval_rollouts, mix_seed(episode_seed, 0xe7a1));
    if (mu_n < best) {
      best = mu_n;
      result.best_mu = mu_n;
      result.best_episode = n;
      result.best_params = policy.params();
    }
    const std::vector<ContTrajectory> trajs =
        roll_batch(env, policy, cfg.rollouts_per_episode, cfg.rollout_threads, episode_seed);
    const GradientEstimate grad =
        sampled_gradient_continuous(env, trajs, policy, cfg.use_advantage, n);
    if (cfg.rule == UpdateRule::Ogd) {
      policy.set_params(ogd_step(policy.params(), grad.grad, learning_rate(cfg, n)));
    } else {
      const FisherFactor factor = fisher_factor(trajs, policy);
      const CgResult cg = cg_solve_low_rank(factor, grad.grad, cfg.cg);
      try {
        const double eta = natural_step_size(cfg.cg.kl_budget, grad.grad, cg.delta);
        policy.set_params(ogd_step(policy.params(), cg.delta, eta));
      } catch (const DegenerateDirectionError&) {
      }
    }
    result.curve.push(mu_n, elapsed_ms(t0));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct ParseStepRec {
  ParserState before;
  int action;
};

struct ParseTrajectory {
  std::vector<ParseStepRec> steps;
  int length() const { return static_cast<int>(steps.size()); }
};

struct ParseSetup {
  ParseCorpus corpus;
  std::vector<const Sentence*> train;
  std::vector<const Sentence*> heldout;
  ParseFeaturizer featurizer;
};

ParseSetup make_parse_setup(const RunConfig& cfg) {
  ParseCorpus corpus;
  if (!cfg.corpus_file.empty()) {
    std::ifstream in(cfg.corpus_file);
    if (!in) throw ConfigError("cannot open corpus file: " + cfg.corpus_file);
    corpus = read_corpus(in);
  } else {
    corpus = make_parse_corpus(cfg.parse_sentences, cfg.parse_max_len, cfg.parse_vocab,
                               cfg.corpus_seed);
  }
  const int n = static_cast<int>(corpus.sentences.size());
  if (n < 2) throw ConfigError("corpus needs at least two sentences");
  int heldout = static_cast<int>(std::lround(cfg.parse_holdout * n));
  heldout = std::clamp(heldout, 1, n - 1);
  ParseSetup setup{std::move(corpus), {}, {}, ParseFeaturizer(0)};
  setup.featurizer = ParseFeaturizer(setup.corpus.vocab);
  for (int i = 0; i < n - heldout; ++i) setup.train.push_back(&setup.corpus.sentences[i]);
  for (int i = n - heldout; i < n; ++i) setup.heldout.push_back(&setup.corpus.sentences[i]);
  return setup;
}

double greedy_uas(const Sentence& sentence, const DiscretePolicy& policy,
                  const ParseFeaturizer& featurizer) {
  ParserState state = initial_parse_state(sentence);
  std::vector<double> features(featurizer.dim());
  while (!state.done()) {
    const auto mask = legal_mask(state);
    featurizer.write(state, features);
    const DiscreteObs obs{-1, features, mask};
    const std::vector<double> pi = policy.probs(obs);
    int pick = -1;
    for (int a = 0; a < kNumParseActions; ++a) {
      if (mask[a] && (pick < 0 || pi[a] > pi[pick])) pick = a;
    }
    state = arc_eager_step(state, static_cast<ParseAction>(pick));
  }
  return uas(state);
}

double heldout_uas(const ParseSetup& setup, const DiscretePolicy& policy) {
  double total = 0.0;
  for (const Sentence* sentence : setup.heldout) {
    total += greedy_uas(*sentence, policy, setup.featurizer);
  }
  return total / setup.heldout.size();
}

RunResult run_parse_aggrevated(const RunConfig& cfg) {
  if (cfg.rule != UpdateRule::Ogd && cfg.rule != UpdateRule::Natural) {
    throw ConfigError("parsing supports gradient rules only");
  }
  if (cfg.oracle != OracleMode::ClairvoyantParse) {
    throw ConfigError("parsing uses the clairvoyant oracle");
  }
  ParseSetup setup = make_parse_setup(cfg);
  const int F = setup.featurizer.dim();
  std::unique_ptr<DiscretePolicy> policy;
  switch (cfg.family) {
    case PolicyFamilyKind::LinearSoftmax:
      policy = std::make_unique<LinearSoftmaxPolicy>(F, kNumParseActions, cfg.init_seed);
      break;
    case PolicyFamilyKind::MlpSoftmax:
      policy = std::make_unique<MlpSoftmaxPolicy>(F, cfg.hidden, kNumParseActions,
                                                  cfg.init_seed);
      break;
    default:
      throw ConfigError("parsing needs a feature-based softmax family");
  }
  const ParseOracle oracle;

  RunResult result;
  {
    // The clairvoyant oracle's held-out cost; zero when it reconstructs every
    // gold tree.
    double total = 0.0;
    for (const Sentence* sentence : setup.heldout) {
      total += oracle.value(initial_parse_state(*sentence));
    }
    result.curve.mu_star = total / setup.heldout.size();
  }
  double best = HUGE_VAL;
  const int K = cfg.rollouts_per_episode;
  std::vector<double> features(F);
  std::vector<double> grad(policy->dim());

  for (int n = 1; n <= cfg.episodes; ++n) {
    const auto t0 = Clock::now();
    const double uas_n = heldout_uas(setup, *policy);
    const double mu_n = 1.0 - uas_n;
    if (mu_n < best) {
      best = mu_n;
      result.best_mu = mu_n;
      result.best_episode = n;
      result.best_params = policy->params();
      result.best_heldout_uas = uas_n;
    }
    const double alpha = mixing_rate(cfg, n);
    const std::uint64_t episode_seed = mix_seed(cfg.seed, n);

    std::vector<ParseTrajectory> trajs(K);
    for (int i = 0; i < K; ++i) {
      Rng rng(mix_seed(episode_seed, 0x5eed00 + i));
      const Sentence& sentence =
          *setup.train[rng.uniform_int(0, static_cast<int>(setup.train.size()) - 1)];
      ParserState state = initial_parse_state(sentence);
      while (!state.done()) {
        const auto mask = legal_mask(state);
        setup.featurizer.write(state, features);
        const DiscreteObs obs{-1, features, mask};
        const std::vector<double> pi = policy->probs(obs);
        int action;
        if (alpha > 0.0 && rng.uniform() < alpha) {
          action = static_cast<int>(gold_oracle_action(state));
        } else {
          action = rng.categorical(pi);
        }
        trajs[i].steps.push_back({state, action});
        state = arc_eager_step(state, static_cast<ParseAction>(action));
      }
    }

    std::fill(grad.begin(), grad.end(), 0.0);
    for (const ParseTrajectory& traj : trajs) {
      const double scale = 1.0 / (static_cast<double>(traj.length()) * K);
      for (const ParseStepRec& step : traj.steps) {
        const auto mask = legal_mask(step.before);
        setup.featurizer.write(step.before, features);
        const DiscreteObs obs{-1, features, mask};
        std::vector<double> q = oracle.query_q_vector(step.before);
        if (cfg.use_advantage) {
          const double v = oracle.value(step.before);
          for (double& x : q) x -= v;
        }
        add_policy_gradient_weighted(*policy, obs, q, scale, grad);
      }
    }

    if (cfg.rule == UpdateRule::Ogd) {
      policy->set_params(ogd_step(policy->params(), grad, learning_rate(cfg, n)));
    } else {
      FisherFactor factor(policy->dim(), K);
      for (int i = 0; i < K; ++i) {
        const double scale = 1.0 / (trajs[i].length() * std::sqrt(static_cast<double>(K)));
        std::span<double> col = factor.column(i);
        for (const ParseStepRec& step : trajs[i].steps) {
          const auto mask = legal_mask(step.before);
          setup.featurizer.write(step.before, features);
          const DiscreteObs obs{-1, features, mask};
          policy->add_log_prob_grad(obs, step.action, scale, col);
        }
      }
      const CgResult cg = cg_solve_low_rank(factor, grad, cfg.cg);
      try {
        const double eta = natural_step_size(cfg.cg.kl_budget, grad, cg.delta);
        policy->set_params(ogd_step(policy->params(), cg.delta, eta));
      } catch (const DegenerateDirectionError&) {
      }
    }
    result.curve.push(mu_n, elapsed_ms(t0));
  }
  return result;
}

}  // namespace

TreeEnv tree_from_config(const RunConfig& cfg) {
  const int leaves = 1 << (cfg.tree_depth - 1);
  if (cfg.optimal_leaf < 0 || cfg.optimal_leaf >= leaves) {
    throw ConfigError("optimal leaf index out of range");
  }
  std::vector<double> means(leaves, cfg.leaf_other);
  means[cfg.optimal_leaf] = cfg.leaf_best;
  return make_binary_tree(cfg.tree_depth, means, cfg.leaf_noise);
}

BanditRowsEnv bandit_rows_from_config(const RunConfig& cfg) {
  std::vector<std::vector<double>> means(cfg.num_states,
                                         std::vector<double>(cfg.num_actions, 0.0));
  for (int s = 0; s < cfg.num_states; ++s) {
    const int good = s % cfg.num_actions;
    for (int a = 0; a < cfg.num_actions; ++a) {
      means[s][a] = a == good ? 0.5 - cfg.bandit_gap : 0.5 + cfg.bandit_gap;
    }
  }
  return make_bandit_rows(cfg.num_states, cfg.num_actions, means);
}

RunResult run_aggrevated(const RunConfig& cfg) {
  validate_common(cfg);
  switch (cfg.env) {
    case EnvKind::Tree:
    case EnvKind::BanditRows:
    case EnvKind::RandomTabular:
      return run_finite_aggrevated(cfg);
    case EnvKind::PointMass:
      return run_point_mass_aggrevated(cfg);
    case EnvKind::Parse:
      return run_parse_aggrevated(cfg);
  }
  throw ConfigError("unknown environment");
}

RunResult run_reinforce(const RunConfig& cfg) {
  validate_common(cfg);
  if (cfg.env == EnvKind::PointMass) {
    const PointMassEnv env = make_point_mass(cfg.horizon, cfg.pm_pos_weight,
                                             cfg.pm_vel_weight, cfg.pm_act_weight, cfg.pm_dt);
    GaussianPolicy policy(3, cfg.init_log_std, cfg.init_seed);
    RunResult result;
    result.curve.mu_star = env.expert_expected_cost();
    double best = HUGE_VAL;
    for (int n = 1; n <= cfg.episodes; ++n) {
      const auto t0 = Clock::now();
      const std::uint64_t episode_seed = mix_seed(cfg.seed, n);
      const double mu_n =
          monte_carlo_cost(env, policy, cfg.eval_rollouts, mix_seed(episode_seed, 0xe7a1));
      if (mu_n < best) {
        best = mu_n;
        result.best_mu = mu_n;
        result.best_episode = n;
        result.best_params = policy.params();
      }
      const std::vector<ContTrajectory> trajs = roll_batch(
          env, policy, cfg.rollouts_per_episode, cfg.rollout_threads, episode_seed);
      std::vector<double> grad(policy.dim(), 0.0);
      const double scale =
          1.0 / (static_cast<double>(env.horizon()) * cfg.rollouts_per_episode);
      for (const ContTrajectory& traj : trajs) {
        double to_go = 0.0;
        for (const ContStep& step : traj.steps) to_go += step.cost;
        for (const ContStep& step : traj.steps) {
          policy.add_grad_log_density(point_mass_features(step.state), step.action,
                                      scale * to_go, grad);
          to_go -= step.cost;
        }
      }
      policy.set_params(ogd_step(policy.params(), grad, learning_rate(cfg, n)));
      result.curve.push(mu_n, elapsed_ms(t0));
    }
    return result;
  }

  FiniteSetup setup = make_finite_setup(cfg);
  const FiniteMdp& mdp = setup.mdp;
  std::unique_ptr<Featurizer> featurizer = make_tabular_featurizer(cfg, mdp.num_states());
  std::unique_ptr<DiscretePolicy> policy = make_tabular_policy(
      cfg, mdp.num_states(), mdp.num_actions(), featurizer ? featurizer->dim() : 0);
  RunResult result;
  result.curve.mu_star = expected_cost(mdp, setup.expert);
  double best = HUGE_VAL;
  std::vector<double> scratch;
  for (int n = 1; n <= cfg.episodes; ++n) {
    const auto t0 = Clock::now();
    const SimplexPolicy current = materialize_policy(mdp, *policy, featurizer.get());
    const double mu_n = expected_cost(mdp, current);
    if (mu_n < best) {
      best = mu_n;
      result.best_mu = mu_n;
      result.best_episode = n;
      result.best_simplex = current;
      result.best_params = policy->params();
    }
    const std::uint64_t episode_seed = mix_seed(cfg.seed, n);
    const std::vector<Trajectory> trajs =
        roll_batch(mdp, current, cfg.rollouts_per_episode, cfg.rollout_threads, episode_seed);
    std::vector<double> grad(policy->dim(), 0.0);
    const double scale =
        1.0 / (static_cast<double>(mdp.horizon()) * cfg.rollouts_per_episode);
    for (const Trajectory& traj : trajs) {
      // Score-function gradient weighted by the realized cost to go.
      double to_go = 0.0;
      for (const TrajStep& step : traj.steps) to_go += step.cost;
      for (const TrajStep& step : traj.steps) {
        const DiscreteObs obs = tabular_obs(step.state, featurizer.get(), scratch);
        if (to_go != 0.0) policy->add_log_prob_grad(obs, step.action, scale * to_go, grad);
        to_go -= step.cost;
      }
    }
    policy->set_params(ogd_step(policy->params(), grad, learning_rate(cfg, n)));
    result.curve.push(mu_n, elapsed_ms(t0));
  }
  return result;
}

RegretCurve run_tree_bandit_ucb(const TreeEnv& tree, int episodes, std::uint64_t seed) {
  const int arms = tree.spec.num_leaves();
  RegretCurve curve;
  curve.mu_star = tree.spec.leaf_costs[tree.spec.optimal_leaf].mean();
  std::vector<int> pulls(arms, 0);
  std::vector<double> totals(arms, 0.0);
  Rng rng(mix_seed(seed, 0x0cb));
  for (int n = 1; n <= episodes; ++n) {
    int arm = -1;
    for (int j = 0; j < arms; ++j) {
      if (pulls[j] == 0) {
        arm = j;
        break;
      }
    }
    if (arm < 0) {
      double best_index = HUGE_VAL;
      for (int j = 0; j < arms; ++j) {
        const double index = totals[j] / pulls[j] -
                             std::sqrt(2.0 * std::log(static_cast<double>(n)) / pulls[j]);
        if (index < best_index) {
          best_index = index;
          arm = j;
        }
      }
    }
    totals[arm] += tree.spec.leaf_costs[arm].sample(rng);
    ++pulls[arm];
    curve.push(tree.spec.leaf_costs[arm].mean(), 0.0);
  }
  return curve;
}

std::vector<double> cumulative_regret(std::span<const double> mu, double mu_star) {
  std::vector<double> out;
  out.reserve(mu.size());
  double acc = 0.0;
  for (double m : mu) {
    acc += m - mu_star;
    out.push_back(acc);
  }
  return out;
}

double slope_fit(std::span<const double> series, int first, int last) {
  if (first < 1 || last > static_cast<int>(series.size()) || first >= last) {
    throw ConfigError("slope window out of range");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const int count = last - first + 1;
  for (int n = first; n <= last; ++n) {
    const double y = series[n - 1];
    if (!(y > 0.0)) throw DataError("slope fit needs positive values in the window");
    const double lx = std::log(static_cast<double>(n));
    const double ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) throw DataError("degenerate slope window");
  return (count * sxy - sx * sy) / denom;
}

}  // namespace illab
