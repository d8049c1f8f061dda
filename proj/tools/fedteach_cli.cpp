// Command-line front end: run | sweep | plot | validate-config.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fedteach/commands.hpp"

namespace {

/// Policy specs contain commas, so lists on the command line are split on ';'.
std::vector<std::string> split_policies(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::istringstream in(item);
    std::string piece;
    while (std::getline(in, piece, ';'))
      if (!piece.empty()) out.push_back(piece);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated bandit reward-teaching simulator"};
  app.require_subcommand(1);

  std::string config_path;
  fedteach::RunOverrides overrides;
  std::uint64_t seed = 0;
  std::size_t seeds = 0;
  unsigned workers = 0;
  std::string out_dir;
  fedteach::Step stride = 0;
  fedteach::Step horizon = 0;
  std::vector<std::string> policies;

  auto* run = app.add_subcommand("run", "Run seeded batches of every configured policy");
  run->add_option("--config", config_path, "Experiment JSON")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Master seed (runs use seed, seed+1, ...)");
  auto* seeds_opt = run->add_option("--seeds", seeds, "Runs per policy")->check(CLI::PositiveNumber);
  auto* workers_opt = run->add_option("--workers", workers, "Worker threads (0 = all processors)");
  auto* out_opt = run->add_option("--out", out_dir, "Output directory");
  auto* stride_opt = run->add_option("--checkpoint-stride", stride, "Steps between metric checkpoints")
                         ->check(CLI::PositiveNumber);
  auto* horizon_opt = run->add_option("--horizon", horizon, "Override the horizon T")->check(CLI::PositiveNumber);
  run->add_option("--policies", policies, "Policy specs, ';'-separated or repeated");

  fedteach::SweepOptions sweep_options;
  std::vector<std::string> sweep_policies, sweep_strategies;
  auto* sweep = app.add_subcommand("sweep", "Run every policy once on n random instances");
  sweep->add_option("-n,--instances", sweep_options.instances, "Number of random instances");
  sweep->add_option("-M,--clients", sweep_options.num_clients, "Clients per instance");
  sweep->add_option("-K,--arms", sweep_options.num_arms, "Arms per instance");
  sweep->add_option("-T,--horizon", sweep_options.horizon, "Horizon");
  sweep->add_option("--policies", sweep_policies, "Policy specs, ';'-separated or repeated");
  sweep->add_option("--strategy", sweep_strategies, "Client strategy (once for all clients, or M times)");
  sweep->add_option("--seed", sweep_options.seed, "Master seed");
  sweep->add_option("--workers", sweep_options.workers, "Worker threads (0 = all processors)");
  sweep->add_option("--out", sweep_options.out_dir, "Output directory");
  sweep->add_flag("!--no-plot", sweep_options.plots, "Skip the SVG");

  fedteach::PlotOptions plot_options;
  auto* plot = app.add_subcommand("plot", "Render aggregate or scatter CSVs to SVG");
  plot->add_option("inputs", plot_options.inputs, "CSV files")->required();
  plot->add_option("--kind", plot_options.kind, "lines | scatter")->check(CLI::IsMember({"lines", "scatter"}));
  plot->add_option("--metric", plot_options.metric, "regret | cost (lines only)");
  plot->add_option("--out", plot_options.out_path, "Output SVG path");
  plot->add_option("--title", plot_options.title, "Chart title");

  auto* validate = app.add_subcommand("validate-config", "Parse and check an experiment config");
  validate->add_option("--config", config_path, "Experiment JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fedteach::kExitConfigError;
  }

  if (*run) {
    if (*seed_opt) overrides.seed = seed;
    if (*seeds_opt) overrides.seeds = seeds;
    if (*workers_opt) overrides.workers = workers;
    if (*out_opt) overrides.out_dir = out_dir;
    if (*stride_opt) overrides.checkpoint_stride = stride;
    if (*horizon_opt) overrides.horizon = horizon;
    overrides.policies = split_policies(policies);
    return fedteach::cmd_run(config_path, overrides, std::cout, std::cerr);
  }
  if (*sweep) {
    if (!sweep_policies.empty()) sweep_options.policies = split_policies(sweep_policies);
    if (!sweep_strategies.empty()) sweep_options.strategies = sweep_strategies;
    return fedteach::cmd_sweep(sweep_options, std::cout, std::cerr);
  }
  if (*plot) return fedteach::cmd_plot(plot_options, std::cout, std::cerr);
  if (*validate) return fedteach::cmd_validate_config(config_path, std::cout, std::cerr);
  return fedteach::kExitConfigError;
}
