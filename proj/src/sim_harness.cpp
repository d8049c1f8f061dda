#include "fedteach/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fedteach/compensated_sum.hpp"
#include "fedteach/errors.hpp"

namespace fedteach {

void RunConfig::validate() const {
  const Index M = instance.num_clients();
  if (static_cast<Index>(strategies.size()) != M)
    throw ConfigError("strategies: expected " + std::to_string(M) + " entries (one per client), got " +
                      std::to_string(strategies.size()));
  if (horizon < instance.num_arms())
    throw ConfigError("horizon: T=" + std::to_string(horizon) + " is smaller than K=" +
                      std::to_string(instance.num_arms()));
  if (checkpoint_stride < 1) throw ConfigError("checkpoint_stride: must be positive");
  if (policy.forced_target && *policy.forced_target >= instance.num_arms())
    throw ConfigError("policy: NG target exceeds K");
}

std::vector<StrategySpec> uniform_strategies(const BanditInstance& instance, const StrategySpec& spec) {
  return std::vector<StrategySpec>(static_cast<std::size_t>(instance.num_clients()), spec);
}

const Checkpoint& MetricsSeries::at(Step t) const {
  auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(), t,
                             [](const Checkpoint& c, Step v) { return c.t < v; });
  if (it == checkpoints.end() || it->t != t)
    throw std::out_of_range("no checkpoint at t=" + std::to_string(t));
  return *it;
}

EpisodeStreams::EpisodeStreams(std::uint64_t master)
    : environment(derive_seed(master, "environment")),
      server_init(derive_seed(master, "server_init")),
      server(derive_seed(master, "server")),
      global_sampler(derive_seed(master, "global_sampler")),
      realized_regret(derive_seed(master, "realized_regret")),
      master_(master) {}

std::uint64_t EpisodeStreams::client(Index m) const {
  return derive_seed(master_, "client", static_cast<std::uint64_t>(m));
}

MetricsSeries run_episode(const RunConfig& config, const StepObserver& observer) {
  config.validate();
  EpisodeStreams streams(config.seed);
  Rng init_rng(streams.server_init);
  auto server = make_policy(config.policy, config.instance, config.horizon, init_rng,
                            Rng(streams.global_sampler));
  return run_episode(config, *server, observer);
}

MetricsSeries run_episode(const RunConfig& config, ServerPolicy& server, const StepObserver& observer) {
  config.validate();
  const BanditInstance& instance = config.instance;
  const Index M = instance.num_clients();
  const Arm K = instance.num_arms();
  const GlobalSummary summary = global_summary(instance);
  const double best = summary.global_means(summary.optimal_arm);
  const Eigen::VectorXd regret_gap = (best - summary.global_means.array()).matrix();

  EpisodeStreams streams(config.seed);
  Rng env_rng(streams.environment);
  Rng server_rng(streams.server);
  Rng realized_rng(streams.realized_regret);

  std::vector<std::unique_ptr<ClientStrategy>> clients;
  std::vector<Rng> client_rngs;
  for (Index m = 0; m < M; ++m) {
    clients.push_back(make_client(config.strategies[m], K, config.tie_break));
    client_rngs.emplace_back(streams.client(m));
  }

  MetricsSeries out;
  out.seed = config.seed;
  out.policy = server.spec();
  for (const auto& c : clients) out.strategies.push_back(c->spec());
  out.horizon = config.horizon;
  out.realized_regret = config.realized_regret;
  out.client_regret = Eigen::VectorXd::Zero(M);
  out.client_cost = Eigen::VectorXd::Zero(M);
  out.checkpoints.reserve(static_cast<std::size_t>(config.horizon / config.checkpoint_stride + 1));

  std::vector<Observation> observations(static_cast<std::size_t>(M));
  CompensatedSum regret, cost;
  std::vector<CompensatedSum> client_regret(static_cast<std::size_t>(M)), client_cost(static_cast<std::size_t>(M));

  for (Step t = 1; t <= config.horizon; ++t) {
    for (Index m = 0; m < M; ++m) {
      const Arm arm = clients[m]->choose(t, client_rngs[m]);
      if (arm < 0 || arm >= K) throw InvariantViolation("client chose an invalid arm");
      observations[m] = {m, arm, 0.0};
    }
    for (Index m = 0; m < M; ++m)
      observations[m].raw_reward = sample_local_reward(instance, m, observations[m].arm, env_rng);

    const std::vector<double> sigma = server.adjust(t, observations, server_rng);

    for (Index m = 0; m < M; ++m) {
      const auto& o = observations[m];
      const double adjusted = o.raw_reward + sigma[m];
      if (!(adjusted >= 0.0 && adjusted <= 1.0)) {
        std::ostringstream os;
        os << "adjusted reward " << adjusted << " outside [0,1] at t=" << t << ", client " << m + 1
           << ", arm " << o.arm + 1 << ", policy " << server.spec() << ", seed " << config.seed;
        throw InvariantViolation(os.str());
      }
      clients[m]->observe(o.arm, adjusted, client_rngs[m]);

      double r = regret_gap(o.arm);
      if (config.realized_regret) r = best - sample_global_reward(instance, o.arm, realized_rng);
      client_regret[m].add(r);
      regret.add(r);
      const double c = std::abs(sigma[m]);
      client_cost[m].add(c);
      cost.add(c);
    }

    if (observer) observer(StepRecord{t, observations, sigma, &server, clients});

    if (t % config.checkpoint_stride == 0 || t == config.horizon) out.checkpoints.push_back({t, regret.value(), cost.value()});
  }

  for (Index m = 0; m < M; ++m) {
    out.client_regret(m) = client_regret[m].value();
    out.client_cost(m) = client_cost[m].value();
  }
  out.final_regret = regret.value();
  out.final_cost = cost.value();
  out.report = server.report();
  return out;
}

std::vector<std::uint64_t> consecutive_seeds(std::uint64_t master, std::size_t n) {
  std::vector<std::uint64_t> seeds(n);
  for (std::size_t i = 0; i < n; ++i) seeds[i] = master + i;
  return seeds;
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

/// Run `job(i)` for i in [0, n) on up to `workers` threads.
template <typename Job>
void parallel_for(std::size_t n, unsigned workers, Job&& job) {
  workers = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  }
}

RunOutcome guarded_run(const RunConfig& config, const StepObserver& observer) {
  RunOutcome outcome;
  outcome.seed = config.seed;
  try {
    outcome.series = run_episode(config, observer);
  } catch (const InvariantViolation& e) {
    outcome.error = e.what();
    outcome.invariant_violation = true;
  } catch (const std::exception& e) {
    outcome.error = e.what();
  }
  return outcome;
}

}  // namespace

std::vector<RunOutcome> run_batch(const RunConfig& config_template, std::span<const std::uint64_t> seeds,
                                  unsigned workers, const BatchObserver& observer) {
  config_template.validate();
  std::vector<RunOutcome> results(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) {
    RunConfig config = config_template;
    config.seed = seeds[i];
    StepObserver step_observer;
    if (observer) step_observer = [&observer, i](const StepRecord& r) { observer(i, r); };
    results[i] = guarded_run(config, step_observer);
  });
  return results;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

AggregateStats aggregate(std::span<const MetricsSeries> series) {
  if (series.empty()) throw std::invalid_argument("aggregate needs at least one series");
  const auto& grid = series.front().checkpoints;
  for (const auto& s : series) {
    if (s.checkpoints.size() != grid.size())
      throw std::invalid_argument("series do not share a checkpoint grid");
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (s.checkpoints[i].t != grid[i].t) throw std::invalid_argument("series do not share a checkpoint grid");
  }

  AggregateStats stats;
  stats.policy = series.front().policy;
  stats.runs = series.size();
  stats.rows.reserve(grid.size());
  std::vector<double> regrets(series.size()), costs(series.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    // Runs are summed in list order, which callers keep in seed order.
    double regret_sum = 0.0, cost_sum = 0.0;
    for (std::size_t r = 0; r < series.size(); ++r) {
      regrets[r] = series[r].checkpoints[i].regret;
      costs[r] = series[r].checkpoints[i].cost;
      regret_sum += regrets[r];
      cost_sum += costs[r];
    }
    const double n = static_cast<double>(series.size());
    stats.rows.push_back({grid[i].t, regret_sum / n, quantile(regrets, 0.1), quantile(regrets, 0.9),
                          cost_sum / n, quantile(costs, 0.1), quantile(costs, 0.9)});
  }
  return stats;
}

BanditInstance sweep_instance(const SweepConfig& config, std::size_t instance_id) {
  Rng rng(derive_seed(config.seed, "instance", instance_id));
  return random_instance(config.num_clients, config.num_arms, rng);
}

std::vector<Scatter> sweep_random_instances(const SweepConfig& config) {
  if (config.strategies.size() != 1 && static_cast<Index>(config.strategies.size()) != config.num_clients)
    throw ConfigError("sweep: strategies must list 1 or M entries");
  if (config.policies.empty()) throw ConfigError("sweep: no policies given");

  const std::size_t P = config.policies.size();
  const std::size_t n = config.instances;
  std::vector<RunOutcome> outcomes(P * n);

  parallel_for(P * n, config.workers, [&](std::size_t job) {
    const std::size_t p = job / n;
    const std::size_t i = job % n;
    RunConfig run;
    run.instance = sweep_instance(config, i);
    run.strategies = config.strategies.size() == 1 ? uniform_strategies(run.instance, config.strategies[0])
                                                   : config.strategies;
    run.policy = config.policies[p];
    run.horizon = config.horizon;
    run.checkpoint_stride = config.horizon;
    run.seed = derive_seed(config.seed, "run", i);
    outcomes[job] = guarded_run(run, {});
  });

  std::vector<Scatter> out(P);
  for (std::size_t p = 0; p < P; ++p) {
    out[p].policy = config.policies[p].to_string();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& o = outcomes[p * n + i];
      if (o.ok())
        out[p].points.push_back({i, o.series->final_regret, o.series->final_cost});
      else
        out[p].errors.push_back("instance " + std::to_string(i) + ": " + o.error);
    }
  }
  return out;
}

}  // namespace fedteach
