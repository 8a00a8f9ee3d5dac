// Experiment runner: config-driven runs, parameter sweeps, and the built-in
// verification suites.

#include <string>

#include <CLI11.hpp>

#include "illab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"imitation-learning laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, var, values, suite = "all";

  CLI::App* run = app.add_subcommand("run", "execute one configured experiment");
  run->add_option("config", config_path, "experiment config file")->required();
  run->add_option("outdir", out_dir, "output directory")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "run a grid over one variable");
  sweep->add_option("config", config_path, "experiment config file")->required();
  sweep->add_option("outdir", out_dir, "output directory")->required();
  sweep->add_option("--var", var, "sweep variable: K, S, A, N, or seed")->required();
  sweep->add_option("--values", values, "comma-separated grid values")->required();

  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("suite", suite,
                     "pdl|gradients|eg|fisher|regret-fast|regret-full|all");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return illab::cmd_run(config_path, out_dir);
  if (sweep->parsed()) return illab::cmd_sweep(config_path, var, values, out_dir);
  return illab::cmd_verify(suite);
}
