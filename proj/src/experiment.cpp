#include "illab/experiment.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "illab/errors.hpp"
#include "illab/verify.hpp"

namespace illab {

namespace {

// Schema: every known key with its default, in one place. The resolved file
// is this table with overrides applied.
const std::vector<std::pair<std::string, std::string>>& schema() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"env.kind", "tree"},
      {"env.tree_depth", "2"},
      {"env.leaf_best", "0.2"},
      {"env.leaf_other", "0.8"},
      {"env.optimal_leaf", "0"},
      {"env.expert_leaf", "-1"},
      {"env.leaf_noise", "bernoulli"},
      {"env.num_states", "4"},
      {"env.num_actions", "2"},
      {"env.horizon", "3"},
      {"env.seed", "0"},
      {"env.bandit_gap", "0.1"},
      {"env.pm_pos_weight", "1"},
      {"env.pm_vel_weight", "0.1"},
      {"env.pm_act_weight", "0.01"},
      {"env.pm_dt", "0.1"},
      {"env.parse_sentences", "200"},
      {"env.parse_max_len", "12"},
      {"env.parse_vocab", "20"},
      {"env.corpus_seed", "1"},
      {"env.parse_holdout", "0.2"},
      {"env.corpus_file", ""},
      {"policy.family", "simplex"},
      {"policy.hidden", "16"},
      {"policy.init_seed", "0"},
      {"policy.init_log_std", "-0.5"},
      {"update.rule", "eg"},
      {"update.lr", "0.5"},
      {"update.lr_schedule", "inv_sqrt"},
      {"update.use_advantage", "false"},
      {"update.gradient_form", "action_sum"},
      {"update.cg_max_iters", "50"},
      {"update.cg_tol", "1e-10"},
      {"update.cg_damping", "0.001"},
      {"update.kl_budget", "0.05"},
      {"update.wm_mu", "0"},
      {"oracle.mode", "exact"},
      {"oracle.rollouts", "1"},
      {"oracle.value_convention", "min"},
      {"run.algorithm", "aggrevated"},
      {"run.episodes", "100"},
      {"run.rollouts", "1"},
      {"run.alpha0", "0"},
      {"run.alpha_decay", "0.9"},
      {"run.seed", "0"},
      {"run.eval_rollouts", "1000"},
      {"run.threads", "1"},
      {"output.timing", "off"},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("key '" + key + "' expects an integer, got '" + value + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("key '" + key + "' expects an unsigned integer, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ConfigError("key '" + key + "' expects a boolean, got '" + value + "'");
}

template <typename T>
T parse_enum(const std::string& key, const std::string& value,
             const std::vector<std::pair<std::string, T>>& table) {
  for (const auto& [name, v] : table) {
    if (name == value) return v;
  }
  std::string expected;
  for (const auto& [name, v] : table) {
    if (!expected.empty()) expected += "|";
    expected += name;
  }
  throw ConfigError("key '" + key + "' expects one of {" + expected + "}, got '" + value +
                    "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ExperimentFile ExperimentFile::parse(const std::string& text) {
  ExperimentFile file;
  for (const auto& [key, value] : schema()) file.values_[key] = value;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (file.values_.find(key) == file.values_.end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    file.values_[key] = value;
  }
  return file;
}

ExperimentFile ExperimentFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

std::string ExperimentFile::resolved() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key;
    out += " = ";
    out += value;
    out += "\n";
  }
  return out;
}

std::string ExperimentFile::hash(const std::string& ignore_key) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [key, value] : values_) {
    if (key == ignore_key) continue;
    feed(key);
    feed("=");
    feed(value);
    feed("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentFile::set(const std::string& key, const std::string& value) {
  if (values_.find(key) == values_.end()) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

const std::string& ExperimentFile::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

Algorithm ExperimentFile::algorithm() const {
  return parse_enum<Algorithm>("run.algorithm", get("run.algorithm"),
                               {{"aggrevated", Algorithm::Aggrevated},
                                {"reinforce", Algorithm::Reinforce},
                                {"ucb", Algorithm::TreeBanditUcb}});
}

bool ExperimentFile::timing_enabled() const {
  return parse_bool("output.timing", get("output.timing"));
}

RunConfig ExperimentFile::run_config() const {
  RunConfig cfg;
  cfg.env = parse_enum<EnvKind>("env.kind", get("env.kind"),
                                {{"tree", EnvKind::Tree},
                                 {"bandit_rows", EnvKind::BanditRows},
                                 {"random_tabular", EnvKind::RandomTabular},
                                 {"point_mass", EnvKind::PointMass},
                                 {"parse", EnvKind::Parse}});
  cfg.tree_depth = static_cast<int>(parse_int("env.tree_depth", get("env.tree_depth")));
  cfg.leaf_best = parse_double("env.leaf_best", get("env.leaf_best"));
  cfg.leaf_other = parse_double("env.leaf_other", get("env.leaf_other"));
  cfg.optimal_leaf = static_cast<int>(parse_int("env.optimal_leaf", get("env.optimal_leaf")));
  cfg.expert_leaf = static_cast<int>(parse_int("env.expert_leaf", get("env.expert_leaf")));
  cfg.leaf_noise = parse_enum<CostKind>("env.leaf_noise", get("env.leaf_noise"),
                                        {{"bernoulli", CostKind::Bernoulli},
                                         {"deterministic", CostKind::Deterministic},
                                         {"uniform", CostKind::UniformInterval}});
  cfg.num_states = static_cast<int>(parse_int("env.num_states", get("env.num_states")));
  cfg.num_actions = static_cast<int>(parse_int("env.num_actions", get("env.num_actions")));
  cfg.horizon = static_cast<int>(parse_int("env.horizon", get("env.horizon")));
  cfg.env_seed = parse_u64("env.seed", get("env.seed"));
  cfg.bandit_gap = parse_double("env.bandit_gap", get("env.bandit_gap"));
  cfg.pm_pos_weight = parse_double("env.pm_pos_weight", get("env.pm_pos_weight"));
  cfg.pm_vel_weight = parse_double("env.pm_vel_weight", get("env.pm_vel_weight"));
  cfg.pm_act_weight = parse_double("env.pm_act_weight", get("env.pm_act_weight"));
  cfg.pm_dt = parse_double("env.pm_dt", get("env.pm_dt"));
  cfg.parse_sentences =
      static_cast<int>(parse_int("env.parse_sentences", get("env.parse_sentences")));
  cfg.parse_max_len =
      static_cast<int>(parse_int("env.parse_max_len", get("env.parse_max_len")));
  cfg.parse_vocab = static_cast<int>(parse_int("env.parse_vocab", get("env.parse_vocab")));
  cfg.corpus_seed = parse_u64("env.corpus_seed", get("env.corpus_seed"));
  cfg.parse_holdout = parse_double("env.parse_holdout", get("env.parse_holdout"));
  cfg.corpus_file = get("env.corpus_file");
  cfg.family = parse_enum<PolicyFamilyKind>("policy.family", get("policy.family"),
                                            {{"simplex", PolicyFamilyKind::Simplex},
                                             {"tabular_softmax", PolicyFamilyKind::TabularSoftmax},
                                             {"linear_softmax", PolicyFamilyKind::LinearSoftmax},
                                             {"mlp_softmax", PolicyFamilyKind::MlpSoftmax},
                                             {"gaussian", PolicyFamilyKind::Gaussian}});
  cfg.hidden = static_cast<int>(parse_int("policy.hidden", get("policy.hidden")));
  cfg.init_seed = parse_u64("policy.init_seed", get("policy.init_seed"));
  cfg.init_log_std = parse_double("policy.init_log_std", get("policy.init_log_std"));
  cfg.rule = parse_enum<UpdateRule>("update.rule", get("update.rule"),
                                    {{"ogd", UpdateRule::Ogd},
                                     {"eg", UpdateRule::Eg},
                                     {"natural", UpdateRule::Natural},
                                     {"ftl", UpdateRule::Ftl},
                                     {"weighted_majority", UpdateRule::WeightedMajority}});
  cfg.lr = parse_double("update.lr", get("update.lr"));
  cfg.lr_schedule = parse_enum<LrSchedule>("update.lr_schedule", get("update.lr_schedule"),
                                           {{"constant", LrSchedule::Constant},
                                            {"inv_sqrt", LrSchedule::InvSqrt}});
  cfg.use_advantage = parse_bool("update.use_advantage", get("update.use_advantage"));
  cfg.gradient_form = parse_enum<GradientForm>("update.gradient_form",
                                               get("update.gradient_form"),
                                               {{"action_sum", GradientForm::ActionSum},
                                                {"score", GradientForm::Score}});
  cfg.cg.max_iters =
      static_cast<int>(parse_int("update.cg_max_iters", get("update.cg_max_iters")));
  cfg.cg.tol = parse_double("update.cg_tol", get("update.cg_tol"));
  cfg.cg.damping = parse_double("update.cg_damping", get("update.cg_damping"));
  cfg.cg.kl_budget = parse_double("update.kl_budget", get("update.kl_budget"));
  cfg.wm_mu = parse_double("update.wm_mu", get("update.wm_mu"));
  cfg.oracle = parse_enum<OracleMode>("oracle.mode", get("oracle.mode"),
                                      {{"exact", OracleMode::Exact},
                                       {"monte_carlo", OracleMode::MonteCarlo},
                                       {"leaf_sample", OracleMode::LeafSample},
                                       {"clairvoyant_parse", OracleMode::ClairvoyantParse}});
  cfg.oracle_rollouts = static_cast<int>(parse_int("oracle.rollouts", get("oracle.rollouts")));
  cfg.value_convention =
      parse_enum<ValueConvention>("oracle.value_convention", get("oracle.value_convention"),
                                  {{"min", ValueConvention::MinQ},
                                   {"expert_mean", ValueConvention::ExpertMeanQ}});
  cfg.episodes = static_cast<int>(parse_int("run.episodes", get("run.episodes")));
  cfg.rollouts_per_episode = static_cast<int>(parse_int("run.rollouts", get("run.rollouts")));
  cfg.alpha0 = parse_double("run.alpha0", get("run.alpha0"));
  cfg.alpha_decay = parse_double("run.alpha_decay", get("run.alpha_decay"));
  cfg.seed = parse_u64("run.seed", get("run.seed"));
  cfg.eval_rollouts = static_cast<int>(parse_int("run.eval_rollouts", get("run.eval_rollouts")));
  cfg.rollout_threads = static_cast<int>(parse_int("run.threads", get("run.threads")));
  return cfg;
}

std::string curve_csv(const RegretCurve& curve, bool timing) {
  std::string out = "episode,mu_pi,mu_star,inst_regret,cum_regret,wall_ms\n";
  for (int n = 1; n <= curve.episodes(); ++n) {
    out += std::to_string(n);
    out += ",";
    out += format_double(curve.mu[n - 1]);
    out += ",";
    out += format_double(curve.mu_star);
    out += ",";
    out += format_double(curve.inst[n - 1]);
    out += ",";
    out += format_double(curve.cum[n - 1]);
    out += ",";
    out += format_double(timing ? curve.wall_ms[n - 1] : 0.0);
    out += "\n";
  }
  return out;
}

namespace {

double safe_slope(const RegretCurve& curve) {
  const int n = curve.episodes();
  if (n < 4) return std::nan("");
  try {
    return slope_fit(curve.cum, std::max(2, n / 4), n);
  } catch (const std::exception&) {
    return std::nan("");
  }
}

}  // namespace

std::string summary_text(const RegretCurve& curve, const RunResult& result) {
  std::string out;
  out += "final_mu = " + format_double(curve.mu.empty() ? 0.0 : curve.mu.back()) + "\n";
  out += "best_mu = " + format_double(result.best_mu) + "\n";
  out += "best_episode = " + std::to_string(result.best_episode) + "\n";
  out += "mu_star = " + format_double(curve.mu_star) + "\n";
  out += "final_cum_regret = " + format_double(curve.cum.empty() ? 0.0 : curve.cum.back()) +
         "\n";
  out += "loglog_slope = " + format_double(safe_slope(curve)) + "\n";
  return out;
}

namespace {

bool verbose() {
  const char* v = std::getenv("ILLAB_VERBOSE");
  return v != nullptr && v[0] != '\0' && !(v[0] == '0' && v[1] == '\0');
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

struct RunOutputs {
  RegretCurve curve;
  RunResult result;
};

RunOutputs execute(const ExperimentFile& file) {
  const RunConfig cfg = file.run_config();
  RunOutputs out;
  switch (file.algorithm()) {
    case Algorithm::Aggrevated: {
      out.result = run_aggrevated(cfg);
      out.curve = out.result.curve;
      break;
    }
    case Algorithm::Reinforce: {
      out.result = run_reinforce(cfg);
      out.curve = out.result.curve;
      break;
    }
    case Algorithm::TreeBanditUcb: {
      if (cfg.env != EnvKind::Tree) throw ConfigError("the bandit baseline runs on trees");
      const TreeEnv tree = tree_from_config(cfg);
      out.curve = run_tree_bandit_ucb(tree, cfg.episodes, cfg.seed);
      out.result.curve = out.curve;
      if (!out.curve.mu.empty()) {
        out.result.best_mu = *std::min_element(out.curve.mu.begin(), out.curve.mu.end());
      }
      break;
    }
  }
  return out;
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  ExperimentFile file;
  try {
    file = ExperimentFile::load(config_path);
    std::filesystem::create_directories(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    if (verbose()) {
      std::cerr << "illab: running " << file.get("run.algorithm") << " on "
                << file.get("env.kind") << " for " << file.get("run.episodes")
                << " episodes\n";
    }
    const RunOutputs out = execute(file);
    const std::filesystem::path dir(out_dir);
    write_file(dir / "curve.csv", curve_csv(out.curve, file.timing_enabled()));
    write_file(dir / "summary.txt", summary_text(out.curve, out.result));
    write_file(dir / "resolved_config.txt", file.resolved());
    if (verbose()) std::cerr << "illab: wrote " << (dir / "curve.csv").string() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int cmd_sweep(const std::string& config_path, const std::string& var,
              const std::string& values, const std::string& out_dir) {
  static const std::map<std::string, std::string> kVarKeys = {
      {"K", "env.tree_depth"}, {"S", "env.num_states"}, {"A", "env.num_actions"},
      {"N", "run.episodes"},   {"seed", "run.seed"},
  };
  const auto var_it = kVarKeys.find(var);
  if (var_it == kVarKeys.end()) {
    std::cerr << "config error: sweep variable must be one of K,S,A,N,seed\n";
    return 2;
  }
  std::vector<std::string> grid;
  std::istringstream vs(values);
  std::string item;
  while (std::getline(vs, item, ',')) {
    item = trim(item);
    if (!item.empty()) grid.push_back(item);
  }
  if (grid.empty()) {
    std::cerr << "config error: empty sweep grid\n";
    return 2;
  }
  ExperimentFile base;
  try {
    base = ExperimentFile::load(config_path);
    std::filesystem::create_directories(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  std::string sweep_csv = "var,value,final_cum_regret,loglog_slope,config_hash\n";
  for (const std::string& value : grid) {
    ExperimentFile file = base;
    try {
      file.set(var_it->second, value);
      if (verbose()) std::cerr << "illab: sweep " << var << " = " << value << "\n";
      const RunOutputs out = execute(file);
      const std::filesystem::path dir =
          std::filesystem::path(out_dir) / (var + "_" + value);
      std::filesystem::create_directories(dir);
      write_file(dir / "curve.csv", curve_csv(out.curve, file.timing_enabled()));
      write_file(dir / "summary.txt", summary_text(out.curve, out.result));
      write_file(dir / "resolved_config.txt", file.resolved());
      sweep_csv += var + "," + value + "," +
                   format_double(out.curve.cum.empty() ? 0.0 : out.curve.cum.back()) + "," +
                   format_double(safe_slope(out.curve)) + "," +
                   file.hash(var_it->second) + "\n";
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    } catch (const NumericError& e) {
      std::cerr << "numeric error: " << e.what() << "\n";
      return 3;
    }
  }
  try {
    write_file(std::filesystem::path(out_dir) / "sweep.csv", sweep_csv);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cmd_verify(const std::string& suite) {
  std::vector<CriterionResult> results;
  try {
    results = run_verify_suite(suite);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  bool all_pass = true;
  for (const CriterionResult& r : results) {
    std::printf("[%s] %s (%s) [%.1fs]\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str(), r.seconds);
    all_pass = all_pass && r.pass;
  }
  std::printf("%zu/%zu checks passed\n",
              static_cast<std::size_t>(std::count_if(results.begin(), results.end(),
                                                     [](const auto& r) { return r.pass; })),
              results.size());
  return all_pass ? 0 : 1;
}

}  // namespace illab
