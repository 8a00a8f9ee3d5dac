#include "illab/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "illab/environments.hpp"
#include "illab/errors.hpp"
#include "illab/estimators.hpp"
#include "illab/experiment.hpp"
#include "illab/learner.hpp"
#include "illab/optimizers.hpp"
#include "illab/oracles.hpp"
#include "illab/policies.hpp"
#include "illab/rng.hpp"
#include "illab/vecmath.hpp"

namespace illab {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

std::vector<double> random_simplex_row(int n, Rng& rng) {
  std::vector<double> row(n);
  double z = 0.0;
  for (double& v : row) {
    v = -std::log(1.0 - rng.uniform());
    z += v;
  }
  for (double& v : row) v /= z;
  // Make the sum exact so the policy validator accepts it bit-for-bit.
  double total = 0.0;
  for (double v : row) total += v;
  row[0] += 1.0 - total;
  return row;
}

SimplexPolicy random_policy(int S, int A, int H, Rng& rng) {
  SimplexPolicy p(S, A, H);
  for (int t = 0; t < H; ++t) {
    for (int s = 0; s < S; ++s) p.set_row(t, s, random_simplex_row(A, rng));
  }
  return p;
}

void perturb_params(DifferentiablePolicy& policy, double scale, Rng& rng) {
  std::vector<double> theta = policy.params();
  for (double& v : theta) v += rng.uniform(-scale, scale);
  policy.set_params(std::move(theta));
}

// Central finite differences of a scalar function of the parameters.
std::vector<double> fd_gradient(DifferentiablePolicy& policy,
                                const std::function<double()>& value, double step) {
  const std::vector<double> theta = policy.params();
  std::vector<double> grad(theta.size(), 0.0);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    std::vector<double> t = theta;
    t[i] = theta[i] + step;
    policy.set_params(t);
    const double hi = value();
    t[i] = theta[i] - step;
    policy.set_params(t);
    const double lo = value();
    grad[i] = (hi - lo) / (2.0 * step);
  }
  policy.set_params(theta);
  return grad;
}

double rel_inf_error(std::span<const double> got, std::span<const double> want) {
  double diff = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    diff = std::max(diff, std::fabs(got[i] - want[i]));
    ref = std::max(ref, std::fabs(want[i]));
  }
  return diff / std::max(ref, 1e-8);
}

// Dense SPD solve via Cholesky; the independent check for the matrix-free CG.
std::vector<double> dense_spd_solve(std::vector<double> m, std::vector<double> b, int n) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m[i * n + j];
      for (int k = 0; k < j; ++k) s -= m[i * n + k] * m[j * n + k];
      if (i == j) {
        m[i * n + i] = std::sqrt(s);
      } else {
        m[i * n + j] = s / m[j * n + j];
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= m[i * n + k] * b[k];
    b[i] = s / m[i * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= m[k * n + i] * b[k];
    b[i] = s / m[i * n + i];
  }
  return b;
}

// Composite Simpson rule on [lo, hi].
double simpson(const std::function<double(double)>& f, double lo, double hi, int n) {
  if (n % 2 == 1) ++n;
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

RunConfig tree_eg_noisy_config(int depth, int episodes, std::uint64_t seed) {
  RunConfig cfg;
  cfg.env = EnvKind::Tree;
  cfg.tree_depth = depth;
  cfg.leaf_best = 0.2;
  cfg.leaf_other = 0.8;
  cfg.optimal_leaf = (1 << (depth - 1)) - 1;  // rightmost
  cfg.leaf_noise = CostKind::Bernoulli;
  cfg.rule = UpdateRule::WeightedMajority;
  cfg.oracle = OracleMode::LeafSample;
  cfg.episodes = episodes;
  cfg.seed = seed;
  return cfg;
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

CriterionResult check_performance_difference() {
  Rng rng(20240901);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int S = rng.uniform_int(2, 20);
    const int A = rng.uniform_int(2, 4);
    const int H = rng.uniform_int(1, 10);
    const FiniteMdp mdp = make_random_tabular(S, A, H, rng.next_u64());
    const SimplexPolicy p1 = random_policy(S, A, H, rng);
    const SimplexPolicy p2 = random_policy(S, A, H, rng);
    worst = std::max(worst, performance_difference_residual(mdp, p1, p2));
  }
  return {"performance-difference identity on 50 random tabular problems", worst < 1e-8,
          fmt("max residual %.3g (tolerance 1e-8)", worst), 0.0};
}

CriterionResult check_gradient_correctness() {
  Rng rng(77001);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int S = rng.uniform_int(2, 5);
    const int A = rng.uniform_int(2, 3);
    const int H = rng.uniform_int(2, 3);
    const FiniteMdp mdp = make_random_tabular(S, A, H, rng.next_u64());
    const SimplexPolicy expert = optimal_policy(mdp);
    const ExpertOracle oracle = ExpertOracle::exact(mdp, expert);
    const SimplexPolicy rollin = random_policy(S, A, H, rng);

    std::unique_ptr<Featurizer> feat;
    std::unique_ptr<DiscretePolicy> policy;
    switch (trial % 3) {
      case 0:
        policy = std::make_unique<TabularSoftmaxPolicy>(S, A);
        break;
      case 1:
        feat = std::make_unique<OneHotFeaturizer>(S);
        policy = std::make_unique<LinearSoftmaxPolicy>(feat->dim(), A, rng.next_u64());
        break;
      default:
        feat = std::make_unique<OneHotFeaturizer>(S);
        policy = std::make_unique<MlpSoftmaxPolicy>(feat->dim(), 8, A, rng.next_u64());
        break;
    }
    perturb_params(*policy, 0.5, rng);
    const GradientEstimate analytic =
        exact_gradient_discrete(mdp, oracle, *policy, feat.get(), rollin);
    const std::vector<double> numeric = fd_gradient(
        *policy,
        [&] { return surrogate_loss_exact(mdp, oracle, *policy, feat.get(), rollin); },
        1e-5);
    worst = std::max(worst, rel_inf_error(analytic.grad, numeric));
  }
  // Gaussian family: analytic score against central differences of the
  // log-density.
  for (int trial = 0; trial < 100; ++trial) {
    GaussianPolicy policy(3, rng.uniform(-1.0, 0.2), rng.next_u64());
    perturb_params(policy, 0.5, rng);
    const std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1), 1.0};
    const double action = rng.uniform(-2, 2);
    const std::vector<double> analytic = policy.grad_log_density(x, action);
    const std::vector<double> numeric =
        fd_gradient(policy, [&] { return policy.log_density(x, action); }, 1e-5);
    worst = std::max(worst, rel_inf_error(analytic, numeric));
  }
  return {"analytic gradients match central differences (all families)", worst < 1e-5,
          fmt("max relative error %.3g (tolerance 1e-5)", worst), 0.0};
}

CriterionResult check_estimator_unbiasedness() {
  // Discrete: noisy leaf-sample estimates against the exact gradient on a
  // depth-3 tree.
  const std::vector<double> means = {0.15, 0.45, 0.7, 0.9};
  TreeEnv tree = make_binary_tree(3, means, CostKind::Bernoulli);
  TabularSoftmaxPolicy policy(tree.spec.num_states(), 2);
  Rng init_rng(4242);
  perturb_params(policy, 0.7, init_rng);
  const SimplexPolicy rollin = materialize_policy(tree.mdp, policy, nullptr);
  const ExpertOracle exact = ExpertOracle::exact(tree.mdp, tree.expert);
  const ExpertOracle noisy = ExpertOracle::leaf_sample(tree.mdp, tree.spec);
  const GradientEstimate reference =
      exact_gradient_discrete(tree.mdp, exact, policy, nullptr, rollin);

  const int d = policy.dim();
  const int M = 100000;
  std::vector<double> mean(d, 0.0), m2(d, 0.0);
  for (int i = 0; i < M; ++i) {
    Rng rng(mix_seed(555000, i));
    const Trajectory traj = rollout(tree.mdp, rollin, rng);
    const GradientEstimate est = sampled_gradient_discrete(
        tree.mdp, std::span(&traj, 1), noisy, policy, nullptr, false, &rng, i);
    for (int c = 0; c < d; ++c) {
      const double delta = est.grad[c] - mean[c];
      mean[c] += delta / (i + 1);
      m2[c] += delta * (est.grad[c] - mean[c]);
    }
  }
  double worst_sigma = 0.0;
  for (int c = 0; c < d; ++c) {
    const double se = std::sqrt(m2[c] / (static_cast<double>(M) - 1) / M);
    if (se > 0.0) {
      worst_sigma = std::max(worst_sigma, std::fabs(mean[c] - reference.grad[c]) / se);
    } else if (std::fabs(mean[c] - reference.grad[c]) > 1e-12) {
      worst_sigma = HUGE_VAL;
    }
  }
  const bool discrete_ok = worst_sigma <= 3.0;

  // Continuous: score-function estimates against a quadrature oracle on a
  // two-step point mass started at the origin.
  const PointMassEnv env(2, 1.0, 0.1, 0.01, 0.1, 0.0);
  GaussianPolicy gpolicy(3, -0.4, 99);
  Rng grng(808);
  perturb_params(gpolicy, 0.3, grng);
  const double sigma = gpolicy.stddev();
  const int gd = gpolicy.dim();
  const auto qcoef = [&](const std::array<double, 2>& x, int t, double& qa, double& qb,
                         double& qc) {
    qc = env.q_star(x, 0.0, t);
    const double plus = env.q_star(x, 1.0, t);
    const double minus = env.q_star(x, -1.0, t);
    qa = 0.5 * (plus + minus) - qc;
    qb = 0.5 * (plus - minus);
  };
  std::vector<double> quad(gd, 0.0);
  {
    const std::array<double, 2> x0 = {0.0, 0.0};
    const auto f0 = point_mass_features(x0);
    const double m0 = gpolicy.mean(f0);
    const auto glog = [&](const std::array<double, 3>& feat, double m, double a, int c) {
      if (c < 3) return (a - m) / (sigma * sigma) * feat[c];
      return (a - m) * (a - m) / (sigma * sigma) - 1.0;
    };
    const double span10 = 10.0 * sigma;
    for (int c = 0; c < gd; ++c) {
      // Step 1 term.
      double qa, qb, qc;
      qcoef(x0, 1, qa, qb, qc);
      const auto inner1 = [&](double a) {
        const double pdf = std::exp(-0.5 * (a - m0) * (a - m0) / (sigma * sigma)) /
                           (sigma * std::sqrt(2.0 * M_PI));
        return pdf * glog(f0, m0, a, c) * (qa * a * a + qb * a + qc);
      };
      const double term1 = simpson(inner1, m0 - span10, m0 + span10, 4000);
      // Step 2 term: integrate over the first action, then the second.
      const auto outer = [&](double u) {
        const double pdf_u = std::exp(-0.5 * (u - m0) * (u - m0) / (sigma * sigma)) /
                             (sigma * std::sqrt(2.0 * M_PI));
        const std::array<double, 2> x1 = env.step(x0, u);
        const auto f1 = point_mass_features(x1);
        const double m1 = gpolicy.mean(f1);
        double qa2, qb2, qc2;
        qcoef(x1, 2, qa2, qb2, qc2);
        const auto inner2 = [&](double a) {
          const double pdf = std::exp(-0.5 * (a - m1) * (a - m1) / (sigma * sigma)) /
                             (sigma * std::sqrt(2.0 * M_PI));
          return pdf * glog(f1, m1, a, c) * (qa2 * a * a + qb2 * a + qc2);
        };
        return pdf_u * simpson(inner2, m1 - span10, m1 + span10, 400);
      };
      const double term2 = simpson(outer, m0 - span10, m0 + span10, 400);
      quad[c] = 0.5 * (term1 + term2);
    }
  }
  const int MC = 100000;
  std::vector<double> gmean(gd, 0.0), gm2(gd, 0.0);
  for (int i = 0; i < MC; ++i) {
    Rng rng(mix_seed(777000, i));
    const ContTrajectory traj = rollout(env, gpolicy, rng);
    const GradientEstimate est =
        sampled_gradient_continuous(env, std::span(&traj, 1), gpolicy, false, i);
    for (int c = 0; c < gd; ++c) {
      const double delta = est.grad[c] - gmean[c];
      gmean[c] += delta / (i + 1);
      gm2[c] += delta * (est.grad[c] - gmean[c]);
    }
  }
  double worst_gsigma = 0.0;
  for (int c = 0; c < gd; ++c) {
    const double se = std::sqrt(gm2[c] / (static_cast<double>(MC) - 1) / MC);
    if (se > 0.0) worst_gsigma = std::max(worst_gsigma, std::fabs(gmean[c] - quad[c]) / se);
  }
  const bool continuous_ok = worst_gsigma <= 3.0;

  // Advantage variants: the full action sum is pointwise invariant to the
  // baseline; the score form shows the actual variance reduction.
  Rng vr_rng(31337);
  double max_pointwise = 0.0;
  const int d2 = policy.dim();
  const int M2 = 4000;
  std::vector<double> mean_plain(d2, 0.0), mean_vr(d2, 0.0);
  std::vector<double> var_plain(d2, 0.0), var_vr(d2, 0.0);
  {
    std::vector<std::vector<double>> plain_samples, vr_samples;
    plain_samples.reserve(M2);
    vr_samples.reserve(M2);
    for (int i = 0; i < M2; ++i) {
      Rng rng(mix_seed(90210, i));
      const Trajectory traj = rollout(tree.mdp, rollin, rng);
      const std::span<const Trajectory> batch(&traj, 1);
      const GradientEstimate sum_plain =
          sampled_gradient_discrete(tree.mdp, batch, exact, policy, nullptr, false, nullptr, i);
      const GradientEstimate sum_vr =
          sampled_gradient_discrete(tree.mdp, batch, exact, policy, nullptr, true, nullptr, i);
      for (int c = 0; c < d2; ++c) {
        max_pointwise = std::max(max_pointwise, std::fabs(sum_plain.grad[c] - sum_vr.grad[c]));
      }
      const GradientEstimate score_plain =
          sampled_gradient_score(tree.mdp, batch, exact, policy, nullptr, false, nullptr, i);
      const GradientEstimate score_vr =
          sampled_gradient_score(tree.mdp, batch, exact, policy, nullptr, true, nullptr, i);
      plain_samples.push_back(score_plain.grad);
      vr_samples.push_back(score_vr.grad);
    }
    for (int c = 0; c < d2; ++c) {
      for (int i = 0; i < M2; ++i) {
        mean_plain[c] += plain_samples[i][c];
        mean_vr[c] += vr_samples[i][c];
      }
      mean_plain[c] /= M2;
      mean_vr[c] /= M2;
      for (int i = 0; i < M2; ++i) {
        var_plain[c] += (plain_samples[i][c] - mean_plain[c]) * (plain_samples[i][c] - mean_plain[c]);
        var_vr[c] += (vr_samples[i][c] - mean_vr[c]) * (vr_samples[i][c] - mean_vr[c]);
      }
      var_plain[c] /= M2 - 1;
      var_vr[c] /= M2 - 1;
    }
  }
  int reduced = 0, active = 0;
  double trace_plain = 0.0, trace_vr = 0.0;
  double worst_mean_gap = 0.0;
  for (int c = 0; c < d2; ++c) {
    trace_plain += var_plain[c];
    trace_vr += var_vr[c];
    if (var_plain[c] > 1e-14 || var_vr[c] > 1e-14) {
      ++active;
      if (var_vr[c] < var_plain[c]) ++reduced;
      const double se = std::sqrt((var_plain[c] + var_vr[c]) / M2);
      if (se > 0.0) {
        worst_mean_gap = std::max(worst_mean_gap, std::fabs(mean_plain[c] - mean_vr[c]) / se);
      }
    }
  }
  const bool vr_ok = max_pointwise < 1e-12 && active > 0 &&
                     reduced * 5 >= active * 4 && trace_vr < trace_plain &&
                     worst_mean_gap <= 3.0;

  const bool pass = discrete_ok && continuous_ok && vr_ok;
  return {"sampled estimators are unbiased and the baseline reduces variance", pass,
          fmt("discrete max %.2f sigma; continuous max %.2f sigma; action-sum baseline "
              "invariance %.1e; variance reduced on %d/%d components (trace %.3g -> %.3g), "
              "means within %.2f sigma",
              worst_sigma, worst_gsigma, max_pointwise, reduced, active, trace_plain,
              trace_vr, worst_mean_gap),
          0.0};
}

CriterionResult check_eg_equivalence() {
  Rng rng(616001);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int A = rng.uniform_int(2, 6);
    const std::vector<double> row = random_simplex_row(A, rng);
    const double eta = rng.uniform(0.01, 5.0);
    std::vector<double> q(A);
    for (double& v : q) v = rng.uniform(0.0, 1.0);
    const std::vector<double> closed = eg_step_closed_form(row, eta, q);
    const std::vector<double> argmin = eg_step_argmin_oracle(row, eta, q);
    for (int a = 0; a < A; ++a) worst = std::max(worst, std::fabs(closed[a] - argmin[a]));
  }
  return {"multiplicative update equals the KL-regularized argmin", worst < 1e-6,
          fmt("max deviation %.3g over 100 instances (tolerance 1e-6)", worst), 0.0};
}

CriterionResult check_eg_regret_bound() {
  Rng rng(51501);
  int violations = 0;
  int cases = 0;
  double tightest = HUGE_VAL;
  const auto run_case = [&](const std::vector<std::vector<double>>& ys, double mu) {
    const EgRegretResult r = eg_regret_bound_check(ys, mu);
    ++cases;
    if (r.measured > r.bound + 1e-9) ++violations;
    tightest = std::min(tightest, r.bound - r.measured);
  };
  for (int trial = 0; trial < 100; ++trial) {
    const int d = rng.uniform_int(2, 64);
    const int N = 1000;
    std::vector<std::vector<double>> ys(N, std::vector<double>(d));
    for (auto& y : ys) {
      for (double& v : y) v = rng.uniform(-1.0, 1.0);
    }
    run_case(ys, rng.uniform(0.02, 1.0));
  }
  // Adversarial alternating losses.
  {
    std::vector<std::vector<double>> ys(1000, std::vector<double>(2));
    for (int n = 0; n < 1000; ++n) {
      ys[n][0] = n % 2 == 0 ? 1.0 : -1.0;
      ys[n][1] = n % 2 == 0 ? -1.0 : 1.0;
    }
    run_case(ys, 0.1);
  }
  {
    std::vector<std::vector<double>> ys(1000, std::vector<double>(2));
    for (int n = 0; n < 1000; ++n) {
      ys[n][0] = n % 2 == 0 ? 1.0 : 0.0;
      ys[n][1] = 1.0 - ys[n][0];
    }
    run_case(ys, 0.1);
  }
  return {"multiplicative-weights regret stays within its bound", violations == 0,
          fmt("%d/%d sequences within the bound; smallest slack %.4g", cases - violations,
              cases, tightest),
          0.0};
}

CriterionResult check_exact_oracle_tree_ftl() {
  RunConfig cfg;
  cfg.env = EnvKind::Tree;
  cfg.tree_depth = 10;
  cfg.leaf_best = 0.2;
  cfg.leaf_other = 0.8;
  cfg.optimal_leaf = (1 << 9) - 1;
  cfg.leaf_noise = CostKind::Deterministic;
  cfg.rule = UpdateRule::Ftl;
  cfg.oracle = OracleMode::Exact;
  cfg.episodes = 30;
  cfg.seed = 7;
  const RunResult result = run_aggrevated(cfg);
  int reached = -1;
  for (int n = 1; n <= cfg.episodes; ++n) {
    if (std::fabs(result.curve.mu[n - 1] - 0.2) < 1e-12) {
      reached = n;
      break;
    }
  }
  bool constant_after = reached > 0;
  for (int n = reached; n >= 1 && n <= cfg.episodes; ++n) {
    constant_after = constant_after && std::fabs(result.curve.mu[n - 1] - 0.2) < 1e-12;
  }
  const double final_regret = result.curve.cum.back();
  const bool pass = reached > 0 && reached <= 10 && constant_after && final_regret <= 9.0;
  return {"exact-oracle tree learner pins the optimal path within depth-1 episodes", pass,
          fmt("optimal from episode %d (budget 10); final cumulative regret %.3f <= 9",
              reached, final_regret),
          0.0};
}

CriterionResult check_noisy_tree_regret() {
  const int N = 1 << 14;
  std::vector<double> final_regret;
  double slope8 = 0.0;
  for (const int depth : {4, 6, 8}) {
    RunConfig cfg = tree_eg_noisy_config(depth, N, 11);
    const RunResult result = run_aggrevated(cfg);
    final_regret.push_back(result.curve.cum.back());
    if (depth == 8) slope8 = slope_fit(result.curve.cum, N / 4, N);
  }
  // Growth exponent of the final regret across depths.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const std::vector<int> depths = {4, 6, 8};
  for (int i = 0; i < 3; ++i) {
    const double lx = std::log(static_cast<double>(depths[i]));
    const double ly = std::log(std::max(final_regret[i], 1e-9));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double growth = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
  const bool pass = slope8 >= 0.4 && slope8 <= 0.6 && growth < 2.0;
  return {"noisy-oracle tree regret grows like sqrt(N) and mildly in depth", pass,
          fmt("slope %.3f in [0.4,0.6] at depth 8; depth-growth exponent %.2f < 2 "
              "(regret %.1f/%.1f/%.1f)",
              slope8, growth, final_regret[0], final_regret[1], final_regret[2]),
          0.0};
}

CriterionResult check_il_vs_rl_gap() {
  const int N = 10000;
  std::vector<double> ratios;
  for (const int depth : {4, 6, 8, 10}) {
    RunConfig cfg = tree_eg_noisy_config(depth, N, 23);
    const RunResult il = run_aggrevated(cfg);
    const TreeEnv tree = tree_from_config(cfg);
    const RegretCurve rl = run_tree_bandit_ucb(tree, N, 23);
    ratios.push_back(rl.cum.back() / il.curve.cum.back());
  }
  bool monotone = true;
  for (std::size_t i = 1; i < ratios.size(); ++i) monotone = monotone && ratios[i] > ratios[i - 1];
  const bool pass = monotone && ratios.back() > 3.0;
  return {"bandit-baseline regret outgrows the imitation learner in depth", pass,
          fmt("ratios %.2f / %.2f / %.2f / %.2f (monotone, last > 3)", ratios[0], ratios[1],
              ratios[2], ratios[3]),
          0.0};
}

CriterionResult check_general_mdp_regret() {
  const int N = 1 << 16;
  std::vector<double> final_regret;
  std::vector<double> slopes;
  for (const int S : {8, 16, 32, 64}) {
    RunConfig cfg;
    cfg.env = EnvKind::RandomTabular;
    cfg.num_states = S;
    cfg.num_actions = 4;
    cfg.horizon = 5;
    cfg.env_seed = 3;
    cfg.rule = UpdateRule::Eg;
    cfg.oracle = OracleMode::MonteCarlo;
    cfg.lr = 1.0;
    cfg.episodes = N;
    cfg.seed = 29;
    const RunResult result = run_aggrevated(cfg);
    final_regret.push_back(result.curve.cum.back());
    slopes.push_back(slope_fit(result.curve.cum, N / 4, N));
  }
  bool slopes_ok = true;
  for (double s : slopes) slopes_ok = slopes_ok && s >= 0.4 && s <= 0.6;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const std::vector<int> sizes = {8, 16, 32, 64};
  for (int i = 0; i < 4; ++i) {
    const double lx = std::log(static_cast<double>(sizes[i]));
    const double ly = std::log(final_regret[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double exponent = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
  const bool pass = slopes_ok && exponent >= 0.3 && exponent <= 0.7;
  return {"tabular multiplicative updates scale like sqrt(N) and sqrt(S)", pass,
          fmt("slopes %.3f/%.3f/%.3f/%.3f in [0.4,0.6]; size exponent %.2f in [0.3,0.7]",
              slopes[0], slopes[1], slopes[2], slopes[3], exponent),
          0.0};
}

CriterionResult check_bandit_rows_regret() {
  RunConfig cfg;
  cfg.env = EnvKind::BanditRows;
  cfg.num_states = 16;
  cfg.num_actions = 4;
  cfg.horizon = 1;
  cfg.bandit_gap = 0.1;
  cfg.rule = UpdateRule::Eg;
  cfg.oracle = OracleMode::MonteCarlo;
  cfg.lr = 1.0;
  cfg.episodes = 1 << 15;
  cfg.seed = 41;
  const RunResult result = run_aggrevated(cfg);
  const double slope = slope_fit(result.curve.cum, cfg.episodes / 4, cfg.episodes);
  const bool pass = slope >= 0.4 && slope <= 0.6;
  return {"single-step bandit rows follow the sqrt(N) regret order", pass,
          fmt("slope %.3f in [0.4,0.6]; final regret %.1f", slope, result.curve.cum.back()),
          0.0};
}

CriterionResult check_natural_gradient() {
  // Low-rank CG against a dense factorization.
  Rng rng(260101);
  const int d = 200, K = 20;
  FisherFactor factor(d, K);
  for (int i = 0; i < K; ++i) {
    std::span<double> col = factor.column(i);
    for (double& v : col) v = rng.uniform(-1.0, 1.0);
  }
  std::vector<double> g(d);
  for (double& v : g) v = rng.uniform(-1.0, 1.0);
  CgSettings settings;
  settings.max_iters = 60;
  settings.tol = 1e-12;
  settings.damping = 1e-3;
  settings.kl_budget = 0.01;
  const CgResult cg = cg_solve_low_rank(factor, g, settings);
  std::vector<double> dense(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) dense[i * d + i] = settings.damping;
  for (int k = 0; k < K; ++k) {
    const std::span<const double> col = factor.column(k);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) dense[i * d + j] += col[i] * col[j];
    }
  }
  const std::vector<double> reference = dense_spd_solve(dense, g, d);
  const double cg_err = rel_inf_error(cg.delta, reference);

  // The scaled step's quadratic form against the divergence budget.
  const double eta = natural_step_size(settings.kl_budget, g, cg.delta);
  std::vector<double> adelta(d, 0.0);
  factor.gram_matvec(cg.delta, settings.damping, adelta);
  const double quad = eta * eta * dot(cg.delta, adelta);
  const double quad_tol = 10.0 * cg.residual * eta * eta * norm2(cg.delta) + 1e-12;
  const bool quad_ok = std::fabs(quad - settings.kl_budget) <= quad_tol;

  // End-to-end: the two-level tree with the exact oracle.
  RunConfig cfg;
  cfg.env = EnvKind::Tree;
  cfg.tree_depth = 2;
  cfg.leaf_noise = CostKind::Deterministic;
  cfg.rule = UpdateRule::Natural;
  cfg.family = PolicyFamilyKind::TabularSoftmax;
  cfg.oracle = OracleMode::Exact;
  cfg.episodes = 50;
  cfg.rollouts_per_episode = 10;
  cfg.cg.kl_budget = 0.05;
  cfg.seed = 5;
  const RunResult result = run_aggrevated(cfg);
  const bool loop_ok = result.best_mu <= 0.21;

  const bool pass = cg_err < 1e-6 && quad_ok && loop_ok;
  return {"matrix-free natural gradient matches the dense solve and learns the tree", pass,
          fmt("cg error %.2g (tol 1e-6); |step KL - budget| %.2g (tol %.2g); best tree cost "
              "%.4f <= 0.21",
              cg_err, std::fabs(quad - settings.kl_budget), quad_tol, result.best_mu),
          0.0};
}

CriterionResult check_super_expert() {
  RunConfig cfg;
  cfg.env = EnvKind::Tree;
  cfg.tree_depth = 2;
  cfg.leaf_best = 0.2;
  cfg.leaf_other = 0.8;
  cfg.optimal_leaf = 0;
  cfg.expert_leaf = 1;  // demonstrator walks to the expensive leaf
  cfg.leaf_noise = CostKind::Deterministic;
  cfg.rule = UpdateRule::Eg;
  cfg.oracle = OracleMode::Exact;
  cfg.value_convention = ValueConvention::ExpertMeanQ;
  cfg.episodes = 50;
  cfg.seed = 13;
  const RunResult result = run_aggrevated(cfg);
  const double expert_cost = result.curve.mu_star;
  const bool pass = result.best_mu < expert_cost - 0.1;
  return {"learner beats a deliberately sub-optimal demonstrator", pass,
          fmt("best cost %.4f vs demonstrator %.4f (margin %.3f >= 0.1)", result.best_mu,
              expert_cost, expert_cost - result.best_mu),
          0.0};
}

CriterionResult check_parsing() {
  const ParseCorpus corpus = make_parse_corpus(200, 12, 20, 1);
  const ParseOracle oracle;
  int perfect = 0;
  for (const Sentence& sentence : corpus.sentences) {
    ParserState state = initial_parse_state(sentence);
    while (!state.done()) state = arc_eager_step(state, gold_oracle_action(state));
    if (uas(state) == 1.0) ++perfect;
  }
  const bool oracle_ok = perfect == static_cast<int>(corpus.sentences.size());

  RunConfig cfg;
  cfg.env = EnvKind::Parse;
  cfg.parse_sentences = 200;
  cfg.parse_max_len = 12;
  cfg.parse_vocab = 20;
  cfg.corpus_seed = 1;
  cfg.parse_holdout = 0.2;
  cfg.family = PolicyFamilyKind::LinearSoftmax;
  cfg.rule = UpdateRule::Ogd;
  cfg.oracle = OracleMode::ClairvoyantParse;
  cfg.lr = 2.0;
  cfg.lr_schedule = LrSchedule::InvSqrt;
  cfg.episodes = 200;
  cfg.rollouts_per_episode = 8;
  cfg.alpha0 = 1.0;
  cfg.alpha_decay = 0.9;
  cfg.seed = 17;
  const RunResult result = run_aggrevated(cfg);
  const bool pass = oracle_ok && result.best_heldout_uas >= 0.9;
  return {"clairvoyant parses perfectly and the reactive learner reaches 0.9", pass,
          fmt("oracle UAS 1.0 on %d/200 sentences; best held-out UAS %.3f >= 0.9", perfect,
              result.best_heldout_uas),
          0.0};
}

CriterionResult check_determinism() {
  namespace fs = std::filesystem;
  const fs::path base =
      fs::temp_directory_path() /
      ("illab_verify_" + std::to_string(Clock::now().time_since_epoch().count()));
  fs::create_directories(base);
  const std::string config =
      "env.kind = tree\n"
      "env.tree_depth = 4\n"
      "env.optimal_leaf = 5\n"
      "update.rule = weighted_majority\n"
      "oracle.mode = leaf_sample\n"
      "run.episodes = 60\n"
      "run.rollouts = 4\n"
      "run.seed = 99\n";
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const auto run_with = [&](const std::string& text, const std::string& tag) {
    const fs::path cfg_path = base / (tag + ".cfg");
    std::ofstream(cfg_path) << text;
    const fs::path out = base / tag;
    if (cmd_run(cfg_path.string(), out.string()) != 0) return std::string();
    return slurp(out / "curve.csv");
  };
  const std::string a = run_with(config, "a");
  const std::string b = run_with(config, "b");
  const std::string c = run_with(config + "run.threads = 4\n", "c");
  const std::string d = run_with(config + "run.threads = 4\n", "d");
  // Round trip: rerunning from the resolved configuration reproduces the
  // curve byte for byte.
  const std::string resolved = slurp(base / "a" / "resolved_config.txt");
  const std::string e = run_with(resolved, "e");
  const bool pass = !a.empty() && a == b && !c.empty() && c == d && a == c && a == e;
  std::error_code ec;
  fs::remove_all(base, ec);
  return {"runs are byte-reproducible, including parallel rollouts", pass,
          fmt("repeat %s; threads=4 repeat %s; threads=4 vs 1 %s; resolved round-trip %s",
              a == b ? "identical" : "differs", c == d ? "identical" : "differs",
              a == c ? "identical" : "differs", a == e ? "identical" : "differs"),
          0.0};
}

using CriterionFn = CriterionResult (*)();

struct CriterionEntry {
  int number;
  CriterionFn fn;
};

const std::vector<CriterionEntry>& all_criteria() {
  static const std::vector<CriterionEntry> entries = {
      {1, check_performance_difference},
      {2, check_gradient_correctness},
      {3, check_estimator_unbiasedness},
      {4, check_eg_equivalence},
      {5, check_eg_regret_bound},
      {6, check_exact_oracle_tree_ftl},
      {7, check_noisy_tree_regret},
      {8, check_il_vs_rl_gap},
      {9, check_general_mdp_regret},
      {10, check_bandit_rows_regret},
      {11, check_natural_gradient},
      {12, check_super_expert},
      {13, check_parsing},
      {14, check_determinism},
  };
  return entries;
}

}  // namespace

std::vector<CriterionResult> run_verify_suite(const std::string& suite) {
  std::vector<int> selected;
  if (suite == "all" || suite.empty()) {
    for (const auto& e : all_criteria()) selected.push_back(e.number);
  } else if (suite == "pdl") {
    selected = {1};
  } else if (suite == "gradients") {
    selected = {2, 3};
  } else if (suite == "eg") {
    selected = {4, 5};
  } else if (suite == "fisher") {
    selected = {11};
  } else if (suite == "regret-fast") {
    selected = {6, 10, 12, 14};
  } else if (suite == "regret-full") {
    selected = {7, 8, 9, 13};
  } else {
    throw ConfigError("unknown verify suite '" + suite +
                      "' (expected pdl|gradients|eg|fisher|regret-fast|regret-full|all)");
  }
  std::vector<CriterionResult> results;
  for (const int number : selected) {
    for (const auto& entry : all_criteria()) {
      if (entry.number != number) continue;
      const auto t0 = Clock::now();
      CriterionResult r = entry.fn();
      r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      r.name = "criterion " + std::to_string(number) + ": " + r.name;
      results.push_back(std::move(r));
    }
  }
  return results;
}

}  // namespace illab
