#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "illab/environments.hpp"
#include "illab/mdp.hpp"

namespace illab {

enum class OracleMode { Exact, MonteCarlo, LeafSample, ClairvoyantParse };

// How V is derived from the expert's cost-to-go: min over actions for an
// optimal expert, the expert's own action average for deliberately
// sub-optimal ones.
enum class ValueConvention { MinQ, ExpertMeanQ };

// Expert cost-to-go oracle over a finite MDP. Exact mode answers from the
// backward-recursion table; noisy modes return unbiased samples and need a
// caller-supplied random stream.
class ExpertOracle {
 public:
  static ExpertOracle exact(const FiniteMdp& mdp, const SimplexPolicy& expert,
                            ValueConvention convention = ValueConvention::MinQ);
  static ExpertOracle monte_carlo(const FiniteMdp& mdp, const SimplexPolicy& expert,
                                  int rollouts_per_query = 1);
  // Tree shortcut: one expert roll-out reduces to sampling the cost of the
  // cheapest leaf reachable after the queried action. Assumes the optimal
  // expert.
  static ExpertOracle leaf_sample(const FiniteMdp& mdp, const TreeSpec& spec);

  OracleMode mode() const { return mode_; }
  bool exact_capable() const { return mode_ == OracleMode::Exact; }

  // t is the 1-based step; rng may be null in exact mode.
  double query_q(int s, int t, int a, Rng* rng) const;
  std::vector<double> query_q_vector(int s, int t, Rng* rng) const;

  // Q(s,t,a) - V(s,t) per the value convention; exact mode only.
  double advantage(int s, int t, int a) const;
  double value(int s, int t) const;

  double q_max() const { return q_max_; }
  const QTable* exact_table() const { return table_ ? &*table_ : nullptr; }

 private:
  ExpertOracle(OracleMode mode, const FiniteMdp* mdp, SimplexPolicy expert);

  void check_query(int s, int t, int a) const;
  double rollout_from(int s, int t, int a, Rng& rng) const;

  OracleMode mode_;
  const FiniteMdp* mdp_;
  SimplexPolicy expert_;
  ValueConvention convention_ = ValueConvention::MinQ;
  int rollouts_per_query_ = 1;
  std::optional<QTable> table_;
  double q_max_ = 0.0;
  // Leaf-sample mode.
  const TreeSpec* tree_ = nullptr;
};

// Clairvoyant parsing oracle: apply the action, finish the parse with the
// gold oracle, and report 1 - UAS of the final configuration.
class ParseOracle {
 public:
  ParseOracle() = default;

  double query_q(const ParserState& state, ParseAction action) const;
  // One entry per action; illegal entries carry the cost of finishing from
  // the current configuration, which equals the final cost at a completed
  // parse.
  std::vector<double> query_q_vector(const ParserState& state) const;
  double value(const ParserState& state) const;  // finish with the oracle as-is
};

}  // namespace illab
