#include "illab/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "illab/errors.hpp"

namespace illab {

ExpertOracle::ExpertOracle(OracleMode mode, const FiniteMdp* mdp, SimplexPolicy expert)
    : mode_(mode), mdp_(mdp), expert_(std::move(expert)) {}

ExpertOracle ExpertOracle::exact(const FiniteMdp& mdp, const SimplexPolicy& expert,
                                 ValueConvention convention) {
  ExpertOracle oracle(OracleMode::Exact, &mdp, expert);
  oracle.convention_ = convention;
  oracle.table_ = exact_q(mdp, expert);
  double hi = 0.0;
  for (int t = 1; t <= mdp.horizon(); ++t) {
    for (int s = 0; s < mdp.num_states(); ++s) {
      for (int a = 0; a < mdp.num_actions(); ++a) {
        hi = std::max(hi, oracle.table_->q(t, s, a));
      }
    }
  }
  oracle.q_max_ = hi;
  return oracle;
}

ExpertOracle ExpertOracle::monte_carlo(const FiniteMdp& mdp, const SimplexPolicy& expert,
                                       int rollouts_per_query) {
  if (rollouts_per_query < 1) throw ConfigError("rollouts per query must be positive");
  ExpertOracle oracle(OracleMode::MonteCarlo, &mdp, expert);
  oracle.rollouts_per_query_ = rollouts_per_query;
  oracle.q_max_ = mdp.cost_bound() * mdp.horizon();
  return oracle;
}

ExpertOracle ExpertOracle::leaf_sample(const FiniteMdp& mdp, const TreeSpec& spec) {
  ExpertOracle oracle(OracleMode::LeafSample, &mdp, SimplexPolicy());
  oracle.tree_ = &spec;
  oracle.q_max_ = 1.0;
  return oracle;
}

void ExpertOracle::check_query(int s, int t, int a) const {
  if (t < 1 || t > mdp_->horizon()) throw std::out_of_range("oracle query outside horizon");
  if (s < 0 || s >= mdp_->num_states() || a < 0 || a >= mdp_->num_actions()) {
    throw ConfigError("oracle query outside the state-action space");
  }
}

double ExpertOracle::rollout_from(int s, int t, int a, Rng& rng) const {
  double total = mdp_->sample_cost(t - 1, s, a, rng);
  int cur = s;
  int act = a;
  for (int step = t; step < mdp_->horizon(); ++step) {
    cur = mdp_->sample_transition(step - 1, cur, act, rng);
    act = rng.categorical(expert_.row(step, cur));
    total += mdp_->sample_cost(step, cur, act, rng);
  }
  return total;
}

double ExpertOracle::query_q(int s, int t, int a, Rng* rng) const {
  check_query(s, t, a);
  switch (mode_) {
    case OracleMode::Exact:
      return table_->q(t, s, a);
    case OracleMode::MonteCarlo: {
      if (rng == nullptr) throw ConfigError("noisy oracle needs a random stream");
      double total = 0.0;
      for (int i = 0; i < rollouts_per_query_; ++i) total += rollout_from(s, t, a, *rng);
      return total / rollouts_per_query_;
    }
    case OracleMode::LeafSample: {
      if (rng == nullptr) throw ConfigError("noisy oracle needs a random stream");
      const int node = tree_->is_leaf(s) ? s : tree_->child(s, a);
      const int leaf = tree_->best_leaf_under(node);
      return tree_->leaf_costs[leaf].sample(*rng);
    }
    case OracleMode::ClairvoyantParse:
      break;
  }
  throw UnsupportedModeError("oracle mode does not answer tabular queries");
}

std::vector<double> ExpertOracle::query_q_vector(int s, int t, Rng* rng) const {
  std::vector<double> out(mdp_->num_actions());
  for (int a = 0; a < mdp_->num_actions(); ++a) out[a] = query_q(s, t, a, rng);
  return out;
}

double ExpertOracle::value(int s, int t) const {
  if (!exact_capable()) {
    throw UnsupportedModeError("state value requires an exact oracle");
  }
  if (convention_ == ValueConvention::ExpertMeanQ) return table_->v(t, s);
  double lo = table_->q(t, s, 0);
  for (int a = 1; a < mdp_->num_actions(); ++a) lo = std::min(lo, table_->q(t, s, a));
  return lo;
}

double ExpertOracle::advantage(int s, int t, int a) const {
  check_query(s, t, a);
  return query_q(s, t, a, nullptr) - value(s, t);
}

double ParseOracle::query_q(const ParserState& state, ParseAction action) const {
  ParserState cur = arc_eager_step(state, action);
  while (!cur.done()) cur = arc_eager_step(cur, gold_oracle_action(cur));
  return 1.0 - uas(cur);
}

double ParseOracle::value(const ParserState& state) const {
  ParserState cur = state;
  while (!cur.done()) cur = arc_eager_step(cur, gold_oracle_action(cur));
  return 1.0 - uas(cur);
}

std::vector<double> ParseOracle::query_q_vector(const ParserState& state) const {
  std::vector<double> out(kNumParseActions, 0.0);
  const double fallback = value(state);
  for (int a = 0; a < kNumParseActions; ++a) {
    const auto action = static_cast<ParseAction>(a);
    out[a] = action_legal(state, action) ? query_q(state, action) : fallback;
  }
  return out;
}

}  // namespace illab
