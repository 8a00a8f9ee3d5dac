#include "illab/environments.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "illab/errors.hpp"

namespace illab {

// ---------------------------------------------------------------------------
// Binary tree
// ---------------------------------------------------------------------------

int TreeSpec::best_leaf_under(int s) const {
  int lo = s, hi = s;
  while (!is_leaf(lo)) lo = child(lo, 0);
  while (!is_leaf(hi)) hi = child(hi, 1);
  const int first = lo - first_leaf_state();
  const int last = hi - first_leaf_state();
  int best = first;
  for (int i = first + 1; i <= last; ++i) {
    if (leaf_costs[i].mean() < leaf_costs[best].mean()) best = i;
  }
  return best;
}

double TreeSpec::min_mean_under(int s) const {
  return leaf_costs[best_leaf_under(s)].mean();
}

TreeEnv make_binary_tree(int depth, std::span<const double> leaf_means, CostKind noise) {
  if (depth < 1) throw ConfigError("tree depth must be at least 1");
  const int leaves = 1 << (depth - 1);
  if (static_cast<int>(leaf_means.size()) != leaves) {
    throw ConfigError("need exactly one mean per leaf");
  }
  TreeSpec spec;
  spec.depth = depth;
  spec.leaf_costs.reserve(leaves);
  for (double m : leaf_means) {
    if (m < 0.0 || m > 1.0) throw ConfigError("leaf means must lie in [0,1]");
    switch (noise) {
      case CostKind::Deterministic:
        spec.leaf_costs.push_back(CostModel::deterministic(m));
        break;
      case CostKind::Bernoulli:
        spec.leaf_costs.push_back(CostModel::bernoulli(m));
        break;
      case CostKind::UniformInterval: {
        // Symmetric interval around the mean, clipped into [0,1].
        const double half = std::min({0.1, m, 1.0 - m});
        spec.leaf_costs.push_back(CostModel::uniform(m - half, m + half));
        break;
      }
    }
  }
  spec.optimal_leaf = 0;
  for (int i = 1; i < leaves; ++i) {
    if (spec.leaf_costs[i].mean() < spec.leaf_costs[spec.optimal_leaf].mean()) {
      spec.optimal_leaf = i;
    }
  }

  const int S = spec.num_states(), A = 2, H = depth;
  std::vector<std::vector<SparseRow>> transitions(H - 1);
  for (int t = 0; t < H - 1; ++t) {
    transitions[t].resize(static_cast<std::size_t>(S) * A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        SparseRow& row = transitions[t][s * A + a];
        // Leaves cannot occur before the final step; self-loops keep every
        // row a distribution.
        row.entries.push_back({spec.is_leaf(s) ? s : spec.child(s, a), 1.0});
      }
    }
  }
  std::vector<std::vector<CostModel>> costs(H);
  for (int t = 0; t < H; ++t) {
    costs[t].resize(static_cast<std::size_t>(S) * A);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        costs[t][s * A + a] = spec.is_leaf(s)
                                  ? spec.leaf_costs[s - spec.first_leaf_state()]
                                  : CostModel::deterministic(0.0);
      }
    }
  }
  std::vector<double> rho0(S, 0.0);
  rho0[0] = 1.0;
  FiniteMdp mdp(S, A, H, std::move(transitions), std::move(costs), std::move(rho0), 1.0);

  // Expert: at every internal node, step toward the cheapest reachable leaf.
  std::vector<int> expert_actions(S, 0);
  for (int s = 0; s < S; ++s) {
    if (spec.is_leaf(s)) continue;
    const double left = spec.min_mean_under(spec.child(s, 0));
    const double right = spec.min_mean_under(spec.child(s, 1));
    expert_actions[s] = right < left ? 1 : 0;
  }
  SimplexPolicy expert = SimplexPolicy::deterministic(S, A, H, expert_actions);
  return TreeEnv{std::move(mdp), std::move(spec), std::move(expert)};
}

std::vector<int> tree_leaf_path(const TreeSpec& spec, int leaf_index) {
  const int target = spec.leaf_state(leaf_index);
  std::vector<int> actions(spec.num_states(), 0);
  int node = target;
  while (node > 0) {
    const int parent = (node - 1) / 2;
    actions[parent] = node - (2 * parent + 1);
    node = parent;
  }
  return actions;
}

SimplexPolicy tree_leaf_policy(const TreeSpec& spec, int leaf_index) {
  if (leaf_index < 0 || leaf_index >= spec.num_leaves()) {
    throw ConfigError("leaf index out of range");
  }
  return SimplexPolicy::deterministic(spec.num_states(), 2, spec.depth,
                                      tree_leaf_path(spec, leaf_index));
}

// ---------------------------------------------------------------------------
// Bandit rows
// ---------------------------------------------------------------------------

BanditRowsEnv make_bandit_rows(int num_states, int num_actions,
                               const std::vector<std::vector<double>>& means) {
  if (static_cast<int>(means.size()) != num_states) {
    throw ConfigError("need one mean row per state");
  }
  std::vector<std::vector<CostModel>> costs(1);
  costs[0].resize(static_cast<std::size_t>(num_states) * num_actions);
  std::vector<int> expert_actions(num_states, 0);
  for (int s = 0; s < num_states; ++s) {
    if (static_cast<int>(means[s].size()) != num_actions) {
      throw ConfigError("mean row has wrong length");
    }
    for (int a = 0; a < num_actions; ++a) {
      const double m = means[s][a];
      if (m < 0.0 || m > 1.0) throw ConfigError("cost means must lie in [0,1]");
      costs[0][s * num_actions + a] = CostModel::bernoulli(m);
      if (m < means[s][expert_actions[s]]) expert_actions[s] = a;
    }
  }
  std::vector<double> rho0(num_states, 1.0 / num_states);
  FiniteMdp mdp(num_states, num_actions, 1, {}, std::move(costs), std::move(rho0), 1.0);
  SimplexPolicy expert =
      SimplexPolicy::deterministic(num_states, num_actions, 1, expert_actions);
  return BanditRowsEnv{std::move(mdp), means, std::move(expert)};
}

// ---------------------------------------------------------------------------
// Random tabular MDP
// ---------------------------------------------------------------------------

FiniteMdp make_random_tabular(int num_states, int num_actions, int horizon,
                              std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x7ab1e5));
  const std::size_t rows = static_cast<std::size_t>(num_states) * num_actions;
  std::vector<std::vector<SparseRow>> transitions(horizon > 1 ? horizon - 1 : 0);
  for (auto& table : transitions) {
    table.resize(rows);
    for (SparseRow& row : table) {
      row.entries.reserve(num_states);
      double mass = 0.0;
      for (int sn = 0; sn < num_states; ++sn) {
        const double w = rng.uniform();
        row.entries.push_back({sn, w});
        mass += w;
      }
      for (auto& [sn, p] : row.entries) p /= mass;
      // Nudge the largest entry so the row sums to 1 exactly.
      double total = 0.0;
      for (const auto& [sn, p] : row.entries) total += p;
      auto biggest = std::max_element(
          row.entries.begin(), row.entries.end(),
          [](const auto& x, const auto& y) { return x.second < y.second; });
      biggest->second += 1.0 - total;
    }
  }
  std::vector<std::vector<CostModel>> costs(horizon);
  for (auto& table : costs) {
    table.resize(rows);
    for (CostModel& c : table) c = CostModel::deterministic(rng.uniform());
  }
  std::vector<double> rho0(num_states, 1.0 / num_states);
  return FiniteMdp(num_states, num_actions, horizon, std::move(transitions),
                   std::move(costs), std::move(rho0), 1.0);
}

// ---------------------------------------------------------------------------
// Point mass
// ---------------------------------------------------------------------------

PointMassEnv::PointMassEnv(int horizon, double pos_weight, double vel_weight,
                           double act_weight, double dt, double init_halfwidth)
    : horizon_(horizon),
      dt_(dt),
      q_pos_(pos_weight),
      q_vel_(vel_weight),
      r_act_(act_weight),
      init_halfwidth_(init_halfwidth) {
  if (horizon < 2) throw ConfigError("point-mass horizon must be at least 2");
  if (pos_weight <= 0.0 || vel_weight <= 0.0 || act_weight <= 0.0) {
    throw ConfigError("cost weights must be positive definite");
  }
  a_ = {1.0, dt, 0.0, 1.0};
  b_ = {0.5 * dt * dt, dt};

  // Backward Riccati recursion with V_{H+1} = 0; costs at steps 1..H.
  value_.assign(horizon_ + 1, {0.0, 0.0, 0.0});
  gain_.assign(horizon_, {0.0, 0.0});
  for (int t = horizon_; t >= 1; --t) {
    const auto& pn = value_[t];  // P_{t+1}, stored at index t (1-based shift below)
    // pb = P_{t+1} B, r_eff = r + B' P_{t+1} B, pa = P_{t+1} A
    const double pb0 = pn[0] * b_[0] + pn[1] * b_[1];
    const double pb1 = pn[1] * b_[0] + pn[2] * b_[1];
    const double r_eff = r_act_ + b_[0] * pb0 + b_[1] * pb1;
    // B' P_{t+1} A  (1x2)
    const double bpa0 = pb0 * a_[0] + pb1 * a_[2];
    const double bpa1 = pb0 * a_[1] + pb1 * a_[3];
    gain_[t - 1] = {bpa0 / r_eff, bpa1 / r_eff};
    // A' P_{t+1} A (symmetric 2x2)
    const double pa00 = pn[0] * a_[0] + pn[1] * a_[2];
    const double pa01 = pn[0] * a_[1] + pn[1] * a_[3];
    const double pa10 = pn[1] * a_[0] + pn[2] * a_[2];
    const double pa11 = pn[1] * a_[1] + pn[2] * a_[3];
    const double apa00 = a_[0] * pa00 + a_[2] * pa10;
    const double apa01 = a_[0] * pa01 + a_[2] * pa11;
    const double apa11 = a_[1] * pa01 + a_[3] * pa11;
    value_[t - 1] = {q_pos_ + apa00 - bpa0 * gain_[t - 1][0],
                     apa01 - 0.5 * (bpa0 * gain_[t - 1][1] + bpa1 * gain_[t - 1][0]),
                     q_vel_ + apa11 - bpa1 * gain_[t - 1][1]};
  }
}

std::array<double, 2> PointMassEnv::step(const std::array<double, 2>& x, double u) const {
  return {a_[0] * x[0] + a_[1] * x[1] + b_[0] * u, a_[2] * x[0] + a_[3] * x[1] + b_[1] * u};
}

double PointMassEnv::step_cost(const std::array<double, 2>& x, double u) const {
  return q_pos_ * x[0] * x[0] + q_vel_ * x[1] * x[1] + r_act_ * u * u;
}

std::array<double, 2> PointMassEnv::sample_init(Rng& rng) const {
  return {rng.uniform(-init_halfwidth_, init_halfwidth_),
          rng.uniform(-init_halfwidth_, init_halfwidth_)};
}

double PointMassEnv::expert_action(const std::array<double, 2>& x, int t) const {
  const auto& k = gain_[t - 1];
  return -(k[0] * x[0] + k[1] * x[1]);
}

double PointMassEnv::v_star(const std::array<double, 2>& x, int t) const {
  const auto& p = value_[t - 1];
  return p[0] * x[0] * x[0] + 2.0 * p[1] * x[0] * x[1] + p[2] * x[1] * x[1];
}

double PointMassEnv::q_star(const std::array<double, 2>& x, double u, int t) const {
  if (t < 1 || t > horizon_) throw std::out_of_range("query outside horizon");
  double q = step_cost(x, u);
  if (t < horizon_) {
    const std::array<double, 2> xn = step(x, u);
    const auto& p = value_[t];  // P_{t+1}
    q += p[0] * xn[0] * xn[0] + 2.0 * p[1] * xn[0] * xn[1] + p[2] * xn[1] * xn[1];
  }
  return q;
}

double PointMassEnv::expert_expected_cost() const {
  // E[x' P_1 x] with independent uniform[-w, w] components: E[p v] = 0 and
  // E[p^2] = E[v^2] = w^2 / 3.
  const double second_moment = init_halfwidth_ * init_halfwidth_ / 3.0;
  return (value_[0][0] + value_[0][2]) * second_moment;
}

PointMassEnv make_point_mass(int horizon, double pos_weight, double vel_weight,
                             double act_weight, double dt, double init_halfwidth) {
  return PointMassEnv(horizon, pos_weight, vel_weight, act_weight, dt, init_halfwidth);
}

// ---------------------------------------------------------------------------
// Arc-eager parser
// ---------------------------------------------------------------------------

ParserState initial_parse_state(const Sentence& sentence) {
  ParserState state;
  state.sentence = &sentence;
  state.stack = {0};
  state.buffer_pos = 1;
  state.head.assign(sentence.length(), -1);
  return state;
}

bool action_legal(const ParserState& state, ParseAction action) {
  const bool has_buffer = !state.buffer_empty();
  const bool has_stack = !state.stack.empty();
  switch (action) {
    case ParseAction::Shift:
      return has_buffer;
    case ParseAction::LeftArc:
      // The virtual root can never receive a head, and neither can an
      // already-attached token.
      return has_buffer && has_stack && state.stack_top() != 0 &&
             !state.attached(state.stack_top());
    case ParseAction::RightArc:
      return has_buffer && has_stack;
    case ParseAction::Reduce:
      return has_stack && state.attached(state.stack_top());
  }
  return false;
}

std::array<std::uint8_t, kNumParseActions> legal_mask(const ParserState& state) {
  std::array<std::uint8_t, kNumParseActions> mask{};
  for (int a = 0; a < kNumParseActions; ++a) {
    mask[a] = action_legal(state, static_cast<ParseAction>(a)) ? 1 : 0;
  }
  return mask;
}

ParserState arc_eager_step(const ParserState& state, ParseAction action) {
  if (!action_legal(state, action)) {
    throw TransitionError("illegal arc-eager action");
  }
  ParserState next = state;
  switch (action) {
    case ParseAction::Shift:
      next.stack.push_back(next.buffer_pos);
      ++next.buffer_pos;
      break;
    case ParseAction::LeftArc: {
      const int dep = next.stack_top();
      next.head[dep - 1] = next.buffer_pos;
      next.arc_order.push_back(dep);
      next.stack.pop_back();
      break;
    }
    case ParseAction::RightArc: {
      const int dep = next.buffer_pos;
      next.head[dep - 1] = next.stack_top();
      next.arc_order.push_back(dep);
      next.stack.push_back(dep);
      ++next.buffer_pos;
      break;
    }
    case ParseAction::Reduce:
      next.stack.pop_back();
      break;
  }
  return next;
}

ParseAction gold_oracle_action(const ParserState& state) {
  if (state.buffer_empty()) throw TransitionError("oracle queried at a finished parse");
  const Sentence& sent = *state.sentence;
  const int top = state.stack_top();
  const int front = state.buffer_front();
  const auto gold_head = [&](int pos) { return sent.gold_heads[pos - 1]; };

  if (action_legal(state, ParseAction::LeftArc) && gold_head(top) == front) {
    return ParseAction::LeftArc;
  }
  if (action_legal(state, ParseAction::RightArc) && top != front &&
      gold_head(front) == top) {
    return ParseAction::RightArc;
  }
  if (action_legal(state, ParseAction::Reduce)) {
    // Pop when the front token still has gold business strictly left of the
    // stack top: its head, or one of its dependents.
    bool blocked = gold_head(front) < top;
    if (!blocked) {
      for (int pos = 1; pos < top && !blocked; ++pos) {
        blocked = gold_head(pos) == front && state.head[pos - 1] < 0;
      }
    }
    if (blocked) return ParseAction::Reduce;
  }
  return ParseAction::Shift;
}

double uas(const std::vector<int>& predicted_heads, const std::vector<int>& gold_heads) {
  if (predicted_heads.size() != gold_heads.size()) {
    throw ConfigError("uas requires matching token counts");
  }
  if (gold_heads.empty()) return 1.0;
  int correct = 0;
  for (std::size_t i = 0; i < gold_heads.size(); ++i) {
    if (predicted_heads[i] >= 0 && predicted_heads[i] == gold_heads[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gold_heads.size());
}

double uas(const ParserState& final_state) {
  return uas(final_state.head, final_state.sentence->gold_heads);
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

namespace {

// Shunting-yard pass turning an alternating operand/operator token sequence
// into dependency heads. Operator precedence equals the token id; equal
// precedence associates left.
std::vector<int> expression_heads(const std::vector<int>& tokens, int num_ops) {
  const int n = static_cast<int>(tokens.size());
  std::vector<int> heads(n, 0);
  std::vector<int> out;  // positions of current subtree roots
  std::vector<int> ops;  // positions of pending operators
  const auto prec = [&](int pos) { return tokens[pos - 1]; };
  const auto reduce_top = [&] {
    const int op = ops.back();
    ops.pop_back();
    const int right = out.back();
    out.pop_back();
    const int left = out.back();
    out.pop_back();
    heads[left - 1] = op;
    heads[right - 1] = op;
    out.push_back(op);
  };
  for (int pos = 1; pos <= n; ++pos) {
    const bool is_operator = tokens[pos - 1] <= num_ops;
    if (!is_operator) {
      out.push_back(pos);
    } else {
      while (!ops.empty() && prec(ops.back()) >= prec(pos)) reduce_top();
      ops.push_back(pos);
    }
  }
  while (!ops.empty()) reduce_top();
  heads[out.back() - 1] = 0;
  return heads;
}

}  // namespace

ParseCorpus make_parse_corpus(int num_sentences, int max_len, int vocab,
                              std::uint64_t seed) {
  if (max_len < 2) throw ConfigError("max sentence length must be at least 2");
  if (vocab < 2) throw ConfigError("vocabulary must hold operators and operands");
  ParseCorpus corpus;
  corpus.vocab = vocab;
  const int num_ops = std::min(4, vocab - 1);
  Rng rng(mix_seed(seed, 0xc09b05));
  corpus.sentences.reserve(num_sentences);
  const int max_operators = std::max(0, (max_len - 1) / 2);
  for (int i = 0; i < num_sentences; ++i) {
    Sentence sent;
    const int ops = max_operators >= 1 ? rng.uniform_int(1, max_operators) : 0;
    const int len = 2 * ops + 1;
    sent.tokens.reserve(len);
    for (int pos = 1; pos <= len; ++pos) {
      if (pos % 2 == 1) {
        sent.tokens.push_back(rng.uniform_int(num_ops + 1, vocab));
      } else {
        sent.tokens.push_back(rng.uniform_int(std::min(2, num_ops), num_ops));
      }
    }
    // Exactly one lowest-precedence operator per sentence, so the head of the
    // whole expression is identifiable from the token alone (one main
    // relation per sentence).
    if (ops >= 1 && num_ops >= 2) {
      sent.tokens[2 * rng.uniform_int(1, ops) - 1] = 1;
    }
    sent.gold_heads = expression_heads(sent.tokens, num_ops);
    corpus.sentences.push_back(std::move(sent));
  }
  return corpus;
}

void write_corpus(std::ostream& out, const ParseCorpus& corpus) {
  for (const Sentence& sent : corpus.sentences) {
    for (int pos = 1; pos <= sent.length(); ++pos) {
      if (pos > 1) out << '\t';
      out << sent.tokens[pos - 1] << ':' << sent.gold_heads[pos - 1];
    }
    out << '\n';
  }
}

ParseCorpus read_corpus(std::istream& in) {
  ParseCorpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Sentence sent;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, '\t')) {
      const std::size_t colon = field.find(':');
      if (colon == std::string::npos) throw ConfigError("corpus field missing ':'");
      sent.tokens.push_back(std::stoi(field.substr(0, colon)));
      sent.gold_heads.push_back(std::stoi(field.substr(colon + 1)));
      corpus.vocab = std::max(corpus.vocab, sent.tokens.back());
    }
    corpus.sentences.push_back(std::move(sent));
  }
  return corpus;
}

}  // namespace illab
