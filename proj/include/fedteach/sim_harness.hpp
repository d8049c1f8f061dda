#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedteach/client_strategies.hpp"
#include "fedteach/environment.hpp"
#include "fedteach/server_policies.hpp"

namespace fedteach {

struct RunConfig {
  BanditInstance instance = fixed_instance();
  std::vector<StrategySpec> strategies;  // one per client
  PolicySpec policy;
  Step horizon = 50000;
  std::uint64_t seed = 1;
  Step checkpoint_stride = 100;
  TieBreak tie_break = TieBreak::Random;
  /// Accumulate nu_best - Y with sampled global rewards instead of
  /// pseudo-regret. Cross-check mode only.
  bool realized_regret = false;

  /// Throws ConfigError.
  void validate() const;
};

/// Same strategy for every client of `instance`.
std::vector<StrategySpec> uniform_strategies(const BanditInstance& instance, const StrategySpec& spec);

struct Checkpoint {
  Step t = 0;
  double regret = 0.0;
  double cost = 0.0;
};

struct MetricsSeries {
  std::uint64_t seed = 0;
  std::string policy;
  std::vector<std::string> strategies;
  Step horizon = 0;
  bool realized_regret = false;
  std::vector<Checkpoint> checkpoints;  // every stride steps, plus t = T
  Eigen::VectorXd client_regret;        // R_m(T)
  Eigen::VectorXd client_cost;          // C_m(T)
  double final_regret = 0.0;
  double final_cost = 0.0;
  PolicyReport report;

  /// Checkpoint exactly at t; throws std::out_of_range if absent.
  const Checkpoint& at(Step t) const;
};

/// Read-only view of one protocol step, handed to observers after the
/// clients have seen their adjusted rewards.
struct StepRecord {
  Step t = 0;
  std::span<const Observation> observations;
  std::span<const double> sigma;
  const ServerPolicy* server = nullptr;
  std::span<const std::unique_ptr<ClientStrategy>> clients;
};

using StepObserver = std::function<void(const StepRecord&)>;

/// Stream seeds of one episode. Each consumer gets its own labeled stream.
struct EpisodeStreams {
  std::uint64_t environment;
  std::uint64_t server_init;  // policy construction (NG's target draw)
  std::uint64_t server;       // passed to every adjust() call
  std::uint64_t global_sampler;
  std::uint64_t realized_regret;
  std::uint64_t client(Index m) const;

  explicit EpisodeStreams(std::uint64_t master);

 private:
  std::uint64_t master_;
};

/// Run the synchronous choose / sample / adjust / observe loop for t = 1..T.
/// Throws InvariantViolation if an adjusted reward leaves [0,1].
MetricsSeries run_episode(const RunConfig& config, const StepObserver& observer = {});

/// Same as above with a caller-built server (tests inject policies here).
MetricsSeries run_episode(const RunConfig& config, ServerPolicy& server,
                          const StepObserver& observer = {});

struct RunOutcome {
  std::uint64_t seed = 0;
  std::optional<MetricsSeries> series;
  std::string error;  // set iff series is empty
  bool invariant_violation = false;

  bool ok() const { return series.has_value(); }
};

/// Observer for batched runs; `run` is the position in the seed list. May be
/// invoked concurrently for different runs.
using BatchObserver = std::function<void(std::size_t run, const StepRecord&)>;

/// One episode per seed; results in seed-list order whatever the worker count.
/// A failing run is reported with its seed and the batch continues.
std::vector<RunOutcome> run_batch(const RunConfig& config_template, std::span<const std::uint64_t> seeds,
                                  unsigned workers, const BatchObserver& observer = {});

/// master, master + 1, ..., master + n - 1
std::vector<std::uint64_t> consecutive_seeds(std::uint64_t master, std::size_t n);

/// Worker count for 0 = "all available processors".
unsigned resolve_workers(unsigned requested);

struct AggregateRow {
  Step t = 0;
  double regret_mean = 0.0, regret_p10 = 0.0, regret_p90 = 0.0;
  double cost_mean = 0.0, cost_p10 = 0.0, cost_p90 = 0.0;
};

struct AggregateStats {
  std::string policy;
  std::size_t runs = 0;
  std::vector<AggregateRow> rows;
};

/// Linear-interpolated empirical quantile (q in [0,1]) of unsorted values.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

/// Mean and 10th/90th percentiles per checkpoint. Throws
/// std::invalid_argument on an empty list or mismatched checkpoint grids.
AggregateStats aggregate(std::span<const MetricsSeries> series);

struct ScatterPoint {
  std::size_t instance_id = 0;
  double final_regret = 0.0;
  double final_cost = 0.0;
};

struct Scatter {
  std::string policy;
  std::vector<ScatterPoint> points;
  std::vector<std::string> errors;
};

struct SweepConfig {
  std::size_t instances = 100;
  Index num_clients = 5;
  Index num_arms = 5;
  std::vector<StrategySpec> strategies{StrategySpec{}};  // length 1 (shared) or M
  std::vector<PolicySpec> policies;
  Step horizon = 50000;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

/// Instance i is drawn from stream ("instance", i) and run once with seed
/// ("run", i); every policy sees the same instance and run seed.
std::vector<Scatter> sweep_random_instances(const SweepConfig& config);

BanditInstance sweep_instance(const SweepConfig& config, std::size_t instance_id);

}  // namespace fedteach
