#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedteach/sim_harness.hpp"

namespace fedteach {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitInvariantViolation = 3;

/// Command-line values that override the config file.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;
  std::optional<unsigned> workers;
  std::optional<std::string> out_dir;
  std::optional<Step> checkpoint_stride;
  std::optional<Step> horizon;
  std::vector<std::string> policies;  // replaces the config's list when non-empty
};

/// Writes, under the output directory:
///   manifest.json
///   <policy-tag>/run_<seed>.csv, run_<seed>.json, aggregate.csv
///   regret.svg, cost.svg (when plots are on)
int cmd_run(const std::string& config_path, const RunOverrides& overrides, std::ostream& log, std::ostream& err);

struct SweepOptions {
  std::size_t instances = 100;
  Index num_clients = 5;
  Index num_arms = 5;
  Step horizon = 50000;
  std::vector<std::string> strategies{"ucb1"};  // 1 (shared) or M entries
  std::vector<std::string> policies{"tal:g1=1,g2=0", "twl:g1=1,g2=0", "ng", "na"};
  std::uint64_t seed = 1;
  unsigned workers = 0;
  std::string out_dir = "out/sweep";
  bool plots = true;
};

/// Writes scatter_<policy-tag>.csv per policy, sweep.json, and a log-log
/// scatter.svg (cost on x, regret on y).
int cmd_sweep(const SweepOptions& options, std::ostream& log, std::ostream& err);

struct PlotOptions {
  std::string kind = "lines";   // lines | scatter
  std::string metric = "regret";  // lines only: regret | cost
  std::vector<std::string> inputs;
  std::string out_path = "plot.svg";
  std::string title;
};

int cmd_plot(const PlotOptions& options, std::ostream& log, std::ostream& err);

int cmd_validate_config(const std::string& config_path, std::ostream& log, std::ostream& err);

}  // namespace fedteach
