#include "illab/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "illab/errors.hpp"
#include "illab/tolerances.hpp"
#include "illab/vecmath.hpp"

namespace illab {

std::vector<double> ogd_step(std::span<const double> theta, std::span<const double> gradient,
                             double eta) {
  if (theta.size() != gradient.size()) throw ConfigError("theta/gradient size mismatch");
  if (!(eta > 0.0)) throw ConfigError("learning rate must be positive");
  if (!all_finite(theta) || !all_finite(gradient)) {
    throw NumericError("non-finite inputs to a gradient step");
  }
  std::vector<double> next(theta.begin(), theta.end());
  axpy(-eta, gradient, next);
  return next;
}

EgWeightedCosts eg_weighted_costs(const StateDistribution& dist, const QTable& qstar) {
  const int H = static_cast<int>(dist.per_step.size());
  const int S = qstar.num_states();
  const int A = qstar.num_actions();
  EgWeightedCosts out;
  out.qtilde.assign(S, std::vector<double>(A, 0.0));
  out.visited.assign(S, 0);
  for (int s = 0; s < S; ++s) {
    const double mass = dist.average[s];
    if (mass <= 0.0) continue;
    out.visited[s] = 1;
    for (int t = 1; t <= H; ++t) {
      const double w = dist.per_step[t - 1][s] / (H * mass);
      if (w == 0.0) continue;
      for (int a = 0; a < A; ++a) out.qtilde[s][a] += w * qstar.q(t, s, a);
    }
  }
  return out;
}

std::vector<double> eg_step_closed_form(std::span<const double> row, double eta,
                                        std::span<const double> qtilde) {
  if (row.size() != qtilde.size()) throw ConfigError("row/costs size mismatch");
  if (!all_finite(qtilde)) throw NumericError("non-finite costs in multiplicative update");
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] > 0.0) {
      best = std::min(best, qtilde[i]);
      any = true;
    }
  }
  if (!any) throw DataError("all-zero simplex row");
  std::vector<double> next(row.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] > 0.0) {
      next[i] = row[i] * std::exp(-eta * (qtilde[i] - best));
      z += next[i];
    }
  }
  for (double& v : next) v /= z;
  return next;
}

namespace {

// Euclidean projection onto the probability simplex.
void project_simplex(std::vector<double>& y) {
  std::vector<double> u = y;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, tau = 0.0;
  int rho = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double candidate = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - candidate > 0.0) {
      rho = static_cast<int>(i + 1);
      tau = candidate;
    }
  }
  (void)rho;
  for (double& v : y) v = std::max(0.0, v - tau);
}

}  // namespace

std::vector<double> eg_step_argmin_oracle(std::span<const double> row, double eta,
                                          std::span<const double> qtilde) {
  // Optimize over the support of the row; zero entries stay zero. The last
  // support coordinate is eliminated through the simplex constraint and the
  // rest is minimized by damped Newton steps, an independent route to the
  // same stationary point the multiplicative form reaches in closed form.
  std::vector<int> support;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] > 0.0) support.push_back(static_cast<int>(i));
  }
  if (support.empty()) throw DataError("all-zero simplex row");
  const int m = static_cast<int>(support.size());
  std::vector<double> base(m), q(m), x(m);
  for (int i = 0; i < m; ++i) {
    base[i] = row[support[i]];
    q[i] = qtilde[support[i]];
    x[i] = base[i];
  }
  const auto objective = [&](const std::vector<double>& p) {
    double f = 0.0;
    for (int i = 0; i < m; ++i) {
      if (p[i] <= 0.0) return std::numeric_limits<double>::infinity();
      f += p[i] * q[i] + p[i] * std::log(p[i] / base[i]) / eta;
    }
    return f;
  };
  // Stationarity on the simplex: the full gradient is constant across the
  // support.
  const auto residual_of = [&](const std::vector<double>& p) {
    double mean = 0.0;
    std::vector<double> g(m);
    for (int i = 0; i < m; ++i) {
      g[i] = q[i] + (std::log(p[i] / base[i]) + 1.0) / eta;
      mean += g[i];
    }
    mean /= m;
    double r = 0.0;
    for (int i = 0; i < m; ++i) r = std::max(r, std::fabs(g[i] - mean));
    return r;
  };

  if (m == 1) {
    std::vector<double> full(row.size(), 0.0);
    full[support[0]] = 1.0;
    return full;
  }

  double f = objective(x);
  std::vector<double> grad(m - 1), hinv_g(m - 1), trial(m);
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    const double residual = residual_of(x);
    if (residual <= 1e-10) {
      converged = true;
      break;
    }
    // Inside the basin the objective change underflows before the residual
    // does, so the descent test only guards the globalization phase.
    const bool local = residual <= 1e-6;
    // Reduced gradient and Newton direction; the Hessian is diagonal plus a
    // rank-one term handled in closed form.
    const double tail = q[m - 1] + (std::log(x[m - 1] / base[m - 1]) + 1.0) / eta;
    for (int i = 0; i < m - 1; ++i) {
      grad[i] = q[i] + (std::log(x[i] / base[i]) + 1.0) / eta - tail;
    }
    const double c = 1.0 / (eta * x[m - 1]);
    double ones_hg = 0.0, ones_h1 = 0.0;
    for (int i = 0; i < m - 1; ++i) {
      hinv_g[i] = grad[i] * eta * x[i];
      ones_hg += hinv_g[i];
      ones_h1 += eta * x[i];
    }
    const double correction = c * ones_hg / (1.0 + c * ones_h1);
    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      double head = 0.0;
      bool feasible = true;
      for (int i = 0; i < m - 1; ++i) {
        trial[i] = x[i] - step * (hinv_g[i] - correction * eta * x[i]);
        feasible = feasible && trial[i] > 0.0;
        head += trial[i];
      }
      trial[m - 1] = 1.0 - head;
      feasible = feasible && trial[m - 1] > 0.0;
      if (feasible && (local || objective(trial) <= f)) {
        x = trial;
        f = objective(trial);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  if (!converged && residual_of(x) > 1e-10) {
    throw OracleError("argmin oracle failed to converge");
  }
  std::vector<double> full(row.size(), 0.0);
  for (int i = 0; i < m; ++i) full[support[i]] = x[i];
  const double z = sum(full);
  for (double& v : full) v /= z;
  return full;
}

CgResult cg_solve_low_rank(const FisherFactor& factor, std::span<const double> g,
                           const CgSettings& settings) {
  if (static_cast<int>(g.size()) != factor.dim()) throw ConfigError("rhs has wrong length");
  if (!(settings.tol > 0.0) || settings.damping < 0.0) {
    throw ConfigError("cg settings must have positive tolerance and nonnegative damping");
  }
  const int d = factor.dim();
  CgResult result;
  result.delta.assign(d, 0.0);
  std::vector<double> r(g.begin(), g.end());
  std::vector<double> p = r;
  std::vector<double> ap(d, 0.0);
  double rs = dot(r, r);
  result.residual = std::sqrt(rs);
  if (result.residual <= settings.tol) {
    result.converged = true;
    return result;
  }
  for (int it = 0; it < settings.max_iters; ++it) {
    factor.gram_matvec(p, settings.damping, ap);
    const double denom = dot(p, ap);
    if (!std::isfinite(denom) || denom <= 0.0) {
      throw NumericError("conjugate gradient hit a non-positive curvature direction");
    }
    const double alpha = rs / denom;
    axpy(alpha, p, result.delta);
    axpy(-alpha, ap, r);
    const double rs_next = dot(r, r);
    if (!std::isfinite(rs_next)) throw NumericError("non-finite residual in cg");
    result.iters = it + 1;
    result.residual = std::sqrt(rs_next);
    if (result.residual <= settings.tol) {
      result.converged = true;
      return result;
    }
    const double beta = rs_next / rs;
    for (int i = 0; i < d; ++i) p[i] = r[i] + beta * p[i];
    rs = rs_next;
  }
  // Fixed iteration budget exhausted: report the residual, do not fail.
  return result;
}

double natural_step_size(double kl_budget, std::span<const double> g,
                         std::span<const double> delta) {
  if (!(kl_budget > 0.0)) throw ConfigError("kl budget must be positive");
  const double curvature = dot(g, delta);
  if (!(curvature > 0.0)) {
    throw DegenerateDirectionError("descent direction has nonpositive inner product");
  }
  return std::sqrt(kl_budget / curvature);
}

AggregatedDataset::AggregatedDataset(int num_states, int num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      sums_(static_cast<std::size_t>(num_states) * num_actions, 0.0),
      seen_(num_states, 0) {}

void AggregatedDataset::append(int state, std::span<const double> qvec) {
  if (state < 0 || state >= num_states_) throw ConfigError("state out of range");
  if (static_cast<int>(qvec.size()) != num_actions_) {
    throw ConfigError("cost-to-go vector has wrong length");
  }
  seen_[state] = 1;
  ++num_pairs_;
  double* dst = &sums_[static_cast<std::size_t>(state) * num_actions_];
  for (int a = 0; a < num_actions_; ++a) dst[a] += qvec[a];
}

SimplexPolicy ftl_cost_sensitive(const AggregatedDataset& dataset, const TreeSpec& tree) {
  if (dataset.num_pairs() == 0) throw DataError("cost-sensitive fit needs data");
  const int S = tree.num_states();
  std::vector<int> actions(S, 0);
  for (int s = 0; s < S; ++s) {
    if (!dataset.seen(s)) continue;
    const std::span<const double> sums = dataset.sums(s);
    int best = 0;
    for (std::size_t a = 1; a < sums.size(); ++a) {
      if (sums[a] < sums[best]) best = static_cast<int>(a);
    }
    actions[s] = best;
  }
  return SimplexPolicy::deterministic(S, static_cast<int>(dataset.sums(0).size()),
                                      tree.depth, actions);
}

int base_policy_action(const TreeSpec& tree, int leaf_index, int state) {
  if (tree.is_leaf(state)) return 0;
  const int target = tree.leaf_state(leaf_index);
  // Walk up from the target leaf; if it passes through `state`, the action is
  // the child taken there.
  int node = target;
  while (node > state) {
    const int parent = (node - 1) / 2;
    if (parent == state) return node - (2 * parent + 1);
    node = parent;
  }
  return 0;
}

BasePolicyMixture weighted_majority_step(const BasePolicyMixture& mix,
                                         const Trajectory& traj, const TreeSpec& tree,
                                         const ExpertOracle& oracle, double mu, Rng& rng) {
  if (!(mu > 0.0)) throw ConfigError("step size must be positive");
  const int leaves = tree.num_leaves();
  if (static_cast<int>(mix.weights.size()) != leaves) {
    throw ConfigError("mixture size does not match the tree");
  }
  // One oracle query per distinct (state, action) pair along the trajectory.
  std::vector<double> cached(static_cast<std::size_t>(tree.num_states()) * 2, 0.0);
  std::vector<std::uint8_t> filled(cached.size(), 0);
  const auto sample_q = [&](int s, int t, int a) {
    const std::size_t key = static_cast<std::size_t>(s) * 2 + a;
    if (!filled[key]) {
      cached[key] = oracle.query_q(s, t, a, &rng);
      filled[key] = 1;
    }
    return cached[key];
  };
  std::vector<double> q(leaves, 0.0);
  for (int j = 0; j < leaves; ++j) {
    for (int t = 1; t <= traj.length(); ++t) {
      const int s = traj.steps[t - 1].state;
      q[j] += sample_q(s, t, base_policy_action(tree, j, s));
    }
    q[j] /= tree.depth + 1;
  }
  double best = *std::min_element(q.begin(), q.end());
  std::vector<double> next(leaves, 0.0);
  double z = 0.0;
  for (int j = 0; j < leaves; ++j) {
    next[j] = mix.weights[j] * std::exp(-mu * (q[j] - best));
    z += next[j];
  }
  for (double& v : next) v /= z;
  return BasePolicyMixture(std::move(next));
}

EgRegretResult eg_regret_bound_check(const std::vector<std::vector<double>>& losses,
                                     double mu) {
  if (losses.empty()) return {};
  const int d = static_cast<int>(losses.front().size());
  std::vector<double> w(d, 1.0 / d);
  std::vector<double> totals(d, 0.0);
  double incurred = 0.0;
  double second_moment = 0.0;
  for (const std::vector<double>& y : losses) {
    if (static_cast<int>(y.size()) != d) throw ConfigError("loss vectors must share a length");
    for (int i = 0; i < d; ++i) {
      incurred += w[i] * y[i];
      second_moment += w[i] * y[i] * y[i];
      totals[i] += y[i];
    }
    std::vector<double> next = eg_step_closed_form(w, mu, y);
    w = std::move(next);
  }
  // A linear loss is minimized over the simplex at a vertex.
  const double best = *std::min_element(totals.begin(), totals.end());
  return {incurred - best, std::log(static_cast<double>(d)) / mu + 0.5 * mu * second_moment};
}

}  // namespace illab
