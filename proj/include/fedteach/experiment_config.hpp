#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedteach/sim_harness.hpp"

namespace fedteach {

/// Where the bandit instance of an experiment comes from.
struct InstanceSource {
  enum class Kind { Fixed, Random, File, Inline } kind = Kind::Fixed;
  std::uint64_t random_seed = 0;
  Index random_clients = 5;
  Index random_arms = 5;
  std::string path;

  nlohmann::ordered_json to_json() const;
};

/// A JSON experiment file: one instance, one client line-up, several
/// policies, a seeded batch per policy.
struct ExperimentConfig {
  InstanceSource source;
  BanditInstance instance = fixed_instance();
  std::vector<StrategySpec> strategies;
  std::vector<PolicySpec> policies;
  Step horizon = 50000;
  std::uint64_t seed = 1;
  std::size_t seeds = 50;
  unsigned workers = 0;
  std::string out_dir = "out";
  Step checkpoint_stride = 100;
  bool plots = true;
  TieBreak tie_break = TieBreak::Random;
  bool realized_regret = false;

  RunConfig run_config(const PolicySpec& policy) const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

/// `base_dir` resolves relative instance file paths.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::string& base_dir = ".");
/// Throws ConfigError with line/column for syntax errors and the field path
/// for semantic ones.
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace fedteach
