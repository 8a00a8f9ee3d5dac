#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "illab/mdp.hpp"

namespace illab {

// ---------------------------------------------------------------------------
// Binary tree MDP: heap-indexed nodes (root 0, children 2i+1 / 2i+2), horizon
// equals the depth, all internal costs zero, one cost draw at the leaf.
// ---------------------------------------------------------------------------

struct TreeSpec {
  int depth = 0;                     // K levels; S = 2^K - 1 states
  std::vector<CostModel> leaf_costs; // one per leaf, left to right
  int optimal_leaf = 0;              // index among leaves

  int num_states() const { return (1 << depth) - 1; }
  int num_leaves() const { return 1 << (depth - 1); }
  int first_leaf_state() const { return num_leaves() - 1; }
  int leaf_state(int leaf_index) const { return first_leaf_state() + leaf_index; }
  bool is_leaf(int s) const { return s >= first_leaf_state(); }
  int child(int s, int action) const { return 2 * s + 1 + action; }
  // Cheapest-mean leaf reachable from s, and its mean.
  int best_leaf_under(int s) const;
  double min_mean_under(int s) const;
};

struct TreeEnv {
  FiniteMdp mdp;
  TreeSpec spec;
  SimplexPolicy expert;  // optimal deterministic policy (ties broken left)
};

TreeEnv make_binary_tree(int depth, std::span<const double> leaf_means,
                         CostKind noise = CostKind::Bernoulli);

// Deterministic root-to-leaf policy; states off the path default to go-left.
SimplexPolicy tree_leaf_policy(const TreeSpec& spec, int leaf_index);

// The root-to-leaf path of a deterministic base policy, as (state, action)
// decisions at the internal levels.
std::vector<int> tree_leaf_path(const TreeSpec& spec, int leaf_index);

// ---------------------------------------------------------------------------
// Horizon-1 MDP whose states are independent stochastic action-selection
// problems; uniform initial distribution, Bernoulli costs.
// ---------------------------------------------------------------------------

struct BanditRowsEnv {
  FiniteMdp mdp;
  std::vector<std::vector<double>> means;  // [s][a]
  SimplexPolicy expert;                    // per-state argmin mean
};

BanditRowsEnv make_bandit_rows(int num_states, int num_actions,
                               const std::vector<std::vector<double>>& means);

// Random dense transitions (iid uniforms, row-normalized) and deterministic
// uniform[0,1] costs; bit-reproducible from the seed.
FiniteMdp make_random_tabular(int num_states, int num_actions, int horizon,
                              std::uint64_t seed);

// ---------------------------------------------------------------------------
// Double-integrator point mass with quadratic step costs and the
// finite-horizon Riccati controller as the analytic expert.
// ---------------------------------------------------------------------------

class PointMassEnv {
 public:
  PointMassEnv(int horizon, double pos_weight, double vel_weight, double act_weight,
               double dt, double init_halfwidth);

  int horizon() const { return horizon_; }
  double dt() const { return dt_; }
  double init_halfwidth() const { return init_halfwidth_; }

  std::array<double, 2> step(const std::array<double, 2>& x, double u) const;
  double step_cost(const std::array<double, 2>& x, double u) const;
  std::array<double, 2> sample_init(Rng& rng) const;

  // Riccati expert; t is the 1-based step.
  double expert_action(const std::array<double, 2>& x, int t) const;
  double v_star(const std::array<double, 2>& x, int t) const;
  double q_star(const std::array<double, 2>& x, double u, int t) const;
  // Exact expected cost of the expert from the uniform initial box.
  double expert_expected_cost() const;

 private:
  int horizon_;
  double dt_;
  double q_pos_, q_vel_, r_act_;
  double init_halfwidth_;
  // x' = A x + B u with A = [[1,dt],[0,1]], B = [dt^2/2, dt].
  std::array<double, 4> a_;
  std::array<double, 2> b_;
  // Symmetric value matrices P_t (t = 1..H+1) stored as (pxx, pxv, pvv), and
  // feedback gains u_t = -(k0 x + k1 v) for t = 1..H.
  std::vector<std::array<double, 3>> value_;
  std::vector<std::array<double, 2>> gain_;
};

PointMassEnv make_point_mass(int horizon, double pos_weight = 1.0, double vel_weight = 0.1,
                             double act_weight = 0.01, double dt = 0.1,
                             double init_halfwidth = 1.0);

struct ContStep {
  std::array<double, 2> state;
  double action;
  double cost;
  double behavior_density;
};

struct ContTrajectory {
  std::vector<ContStep> steps;
  int length() const { return static_cast<int>(steps.size()); }
};

// Feature convention for point-mass policies: (position, velocity, bias).
inline std::array<double, 3> point_mass_features(const std::array<double, 2>& x) {
  return {x[0], x[1], 1.0};
}

// ---------------------------------------------------------------------------
// Arc-eager transition-based dependency parsing over synthetic sentences.
// Token positions are 1-based; position 0 is the virtual root, which starts
// alone on the stack.
// ---------------------------------------------------------------------------

enum class ParseAction : int { Shift = 0, LeftArc = 1, RightArc = 2, Reduce = 3 };
inline constexpr int kNumParseActions = 4;

struct Sentence {
  std::vector<int> tokens;      // [pos-1] -> vocabulary id for pos = 1..n
  std::vector<int> gold_heads;  // [pos-1] -> head position (0 = root)
  int length() const { return static_cast<int>(tokens.size()); }
};

struct ParserState {
  const Sentence* sentence = nullptr;
  std::vector<int> stack;      // bottom..top; starts as {0}
  int buffer_pos = 1;          // next unconsumed token position
  std::vector<int> head;       // [pos-1] -> assigned head, -1 if unattached
  std::vector<int> arc_order;  // dependents in order of arc creation

  int stack_top() const { return stack.back(); }
  int buffer_front() const { return buffer_pos; }
  bool buffer_empty() const { return sentence && buffer_pos > sentence->length(); }
  bool attached(int pos) const { return pos >= 1 && head[pos - 1] >= 0; }
  bool done() const { return buffer_empty(); }
};

ParserState initial_parse_state(const Sentence& sentence);
bool action_legal(const ParserState& state, ParseAction action);
std::array<std::uint8_t, kNumParseActions> legal_mask(const ParserState& state);
// Returns the successor state; throws TransitionError on an illegal action.
ParserState arc_eager_step(const ParserState& state, ParseAction action);

// Static gold oracle: the clairvoyant action at a (possibly corrupted)
// configuration, total on any state with a nonempty buffer.
ParseAction gold_oracle_action(const ParserState& state);

// Fraction of tokens whose assigned head equals the gold head; unattached
// tokens count as wrong.
double uas(const std::vector<int>& predicted_heads, const std::vector<int>& gold_heads);
double uas(const ParserState& final_state);

struct ParseCorpus {
  std::vector<Sentence> sentences;
  int vocab = 0;
};

// Synthetic infix-expression corpus: alternating operand/operator tokens with
// id-determined operator precedence, so gold trees are projective,
// single-rooted, and predictable from local token features.
ParseCorpus make_parse_corpus(int num_sentences, int max_len, int vocab,
                              std::uint64_t seed);

// One sentence per line as tab-separated token:head pairs.
void write_corpus(std::ostream& out, const ParseCorpus& corpus);
ParseCorpus read_corpus(std::istream& in);

}  // namespace illab
