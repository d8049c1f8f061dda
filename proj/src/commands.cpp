#include "fedteach/commands.hpp"

#include <filesystem>
#include <ostream>
#include <sstream>

#include "fedteach/errors.hpp"
#include "fedteach/experiment_config.hpp"
#include "fedteach/format.hpp"
#include "fedteach/output.hpp"
#include "fedteach/svg_plot.hpp"

namespace fs = std::filesystem;

namespace fedteach {

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("output directory " + dir.string() + " is not writable");
}

std::string csv_text(const auto& writer, const auto& value) {
  std::ostringstream os;
  writer(os, value);
  return os.str();
}

LineSeries line_series(const std::string& label, const AggregateStats& stats, bool regret) {
  LineSeries s;
  s.label = label;
  for (const auto& r : stats.rows) {
    s.x.push_back(static_cast<double>(r.t));
    s.mean.push_back(regret ? r.regret_mean : r.cost_mean);
    s.lower.push_back(regret ? r.regret_p10 : r.cost_p10);
    s.upper.push_back(regret ? r.regret_p90 : r.cost_p90);
  }
  return s;
}

std::string strategies_label(const std::vector<StrategySpec>& strategies) {
  std::string out;
  for (std::size_t i = 0; i < strategies.size(); ++i) out += (i ? "," : "") + strategies[i].to_string();
  return out;
}

}  // namespace

int cmd_run(const std::string& config_path, const RunOverrides& overrides, std::ostream& log, std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_experiment_config(config_path);
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.seeds) config.seeds = *overrides.seeds;
    if (overrides.workers) config.workers = *overrides.workers;
    if (overrides.out_dir) config.out_dir = *overrides.out_dir;
    if (overrides.checkpoint_stride) config.checkpoint_stride = *overrides.checkpoint_stride;
    if (overrides.horizon) config.horizon = *overrides.horizon;
    if (!overrides.policies.empty()) {
      config.policies.clear();
      for (const auto& p : overrides.policies) config.policies.push_back(parse_policy(p));
    }
    config.validate();
    ensure_dir(config.out_dir);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  const fs::path out_dir = config.out_dir;
  const auto seeds = consecutive_seeds(config.seed, config.seeds);
  const GlobalSummary summary = global_summary(config.instance);

  ordered_json manifest;
  manifest["config"] = config.to_json();
  manifest["seed_list"] = seeds;
  manifest["instance"] = to_json(config.instance);
  manifest["global_means"] = std::vector<double>(summary.global_means.data(),
                                                 summary.global_means.data() + summary.global_means.size());
  manifest["optimal_arm"] = summary.optimal_arm + 1;
  manifest["delta_min"] = summary.delta_min;
  manifest["schedule"] = schedule_json(EpochSchedule(config.horizon, config.instance.num_arms(),
                                                     config.instance.num_clients()));
  manifest["conventions"] = run_conventions(config.instance, config.realized_regret);

  int status = kExitOk;
  ordered_json failures = ordered_json::array();
  std::vector<LineSeries> regret_lines, cost_lines;

  for (const auto& policy : config.policies) {
    const std::string tag = policy.tag();
    const fs::path dir = out_dir / tag;
    try {
      ensure_dir(dir);
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << '\n';
      return kExitConfigError;
    }

    const auto outcomes = run_batch(config.run_config(policy), seeds, config.workers);
    std::vector<MetricsSeries> ok;
    std::vector<double> finals_regret, finals_cost;
    for (const auto& o : outcomes) {
      if (!o.ok()) {
        err << policy.to_string() << " seed " << o.seed << " failed: " << o.error << '\n';
        failures.push_back({{"policy", policy.to_string()}, {"seed", o.seed}, {"error", o.error}});
        status = kExitInvariantViolation;
        continue;
      }
      const auto& s = *o.series;
      const std::string stem = "run_" + std::to_string(s.seed);
      write_text_file((dir / (stem + ".csv")).string(), csv_text(write_run_csv, s));
      write_text_file((dir / (stem + ".json")).string(), run_summary(s, config.instance).dump(2) + "\n");
      finals_regret.push_back(s.final_regret);
      finals_cost.push_back(s.final_cost);
      ok.push_back(s);
    }
    if (ok.empty()) continue;

    const AggregateStats stats = aggregate(ok);
    write_text_file((dir / "aggregate.csv").string(), csv_text(write_aggregate_csv, stats));
    regret_lines.push_back(line_series(policy.to_string(), stats, true));
    cost_lines.push_back(line_series(policy.to_string(), stats, false));
    log << policy.to_string() << ": " << ok.size() << "/" << outcomes.size()
        << " runs, median final regret " << format_sig(median(finals_regret), 6) << ", median final cost "
        << format_sig(median(finals_cost), 6) << '\n';
  }

  if (config.plots && !regret_lines.empty()) {
    const std::string who = strategies_label(config.strategies);
    write_text_file((out_dir / "regret.svg").string(),
                    render_line_chart(regret_lines, {"Regret (" + who + ")", "t", "cumulative regret"}));
    write_text_file((out_dir / "cost.svg").string(),
                    render_line_chart(cost_lines, {"Cost (" + who + ")", "t", "cumulative cost"}));
  }

  manifest["complete"] = failures.empty();
  manifest["failed_runs"] = failures;
  write_text_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
  log << "outputs written to " << out_dir.string() << '\n';
  return status;
}

int cmd_sweep(const SweepOptions& options, std::ostream& log, std::ostream& err) {
  SweepConfig config;
  try {
    config.instances = options.instances;
    config.num_clients = options.num_clients;
    config.num_arms = options.num_arms;
    config.horizon = options.horizon;
    config.seed = options.seed;
    config.workers = options.workers;
    if (options.instances < 1) throw ConfigError("--instances must be positive");
    if (options.num_clients < 1 || options.num_arms < 2) throw ConfigError("need M >= 1 and K >= 2");
    if (options.horizon < options.num_arms) throw ConfigError("--horizon must be at least K");
    config.strategies.clear();
    for (const auto& s : options.strategies) config.strategies.push_back(parse_strategy(s));
    if (config.strategies.size() != 1 && static_cast<Index>(config.strategies.size()) != options.num_clients)
      throw ConfigError("--strategy must be given once or M times");
    for (const auto& p : options.policies) config.policies.push_back(parse_policy(p));
    if (config.policies.empty()) throw ConfigError("no policies given");
    ensure_dir(options.out_dir);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  const auto scatters = sweep_random_instances(config);
  const fs::path out_dir = options.out_dir;
  int status = kExitOk;
  std::vector<ScatterSeries> plot;
  ordered_json manifest;
  ordered_json policies = ordered_json::array();
  for (std::size_t p = 0; p < scatters.size(); ++p) {
    const auto& sc = scatters[p];
    for (const auto& e : sc.errors) {
      err << sc.policy << ": " << e << '\n';
      status = kExitInvariantViolation;
    }
    write_text_file((out_dir / ("scatter_" + config.policies[p].tag() + ".csv")).string(),
                    csv_text(write_scatter_csv, sc));
    ScatterSeries s{sc.policy, {}, {}};
    std::vector<double> regrets, costs;
    for (const auto& pt : sc.points) {
      s.x.push_back(pt.final_cost);
      s.y.push_back(pt.final_regret);
      regrets.push_back(pt.final_regret);
      costs.push_back(pt.final_cost);
    }
    ordered_json entry = {{"policy", sc.policy}, {"points", sc.points.size()}, {"errors", sc.errors}};
    if (!sc.points.empty()) {
      entry["median_final_regret"] = median(regrets);
      entry["median_final_cost"] = median(costs);
      log << sc.policy << ": median final regret " << format_sig(median(regrets), 6) << ", median final cost "
          << format_sig(median(costs), 6) << '\n';
    }
    policies.push_back(entry);
    plot.push_back(std::move(s));
  }

  std::vector<std::string> strategies;
  for (const auto& s : config.strategies) strategies.push_back(s.to_string());
  manifest["instances"] = config.instances;
  manifest["M"] = config.num_clients;
  manifest["K"] = config.num_arms;
  manifest["T"] = config.horizon;
  manifest["seed"] = config.seed;
  manifest["strategies"] = strategies;
  manifest["instance_distribution"] = "uniform[0,1] local means, bernoulli rewards";
  manifest["policies"] = policies;
  write_text_file((out_dir / "sweep.json").string(), manifest.dump(2) + "\n");

  if (options.plots)
    write_text_file((out_dir / "scatter.svg").string(),
                    render_scatter_chart(plot, {"Random instances (" + strategies_label(config.strategies) + ")",
                                                "final cost (log)", "final regret (log)"}));
  log << "outputs written to " << out_dir.string() << '\n';
  return status;
}

int cmd_plot(const PlotOptions& options, std::ostream& log, std::ostream& err) {
  try {
    if (options.inputs.empty()) throw ConfigError("plot: no input CSVs");
    std::string svg;
    if (options.kind == "lines") {
      if (options.metric != "regret" && options.metric != "cost")
        throw ConfigError("plot: --metric must be regret or cost");
      std::vector<LineSeries> lines;
      for (const auto& path : options.inputs) {
        const CsvTable table = read_csv_file(path);
        const fs::path p(path);
        LineSeries s;
        s.label = p.filename() == "aggregate.csv" && p.has_parent_path() ? p.parent_path().filename().string()
                                                                         : p.stem().string();
        s.x = table.values("t");
        s.mean = table.values(options.metric + "_mean");
        s.lower = table.values(options.metric + "_p10");
        s.upper = table.values(options.metric + "_p90");
        if (s.x.empty()) throw ConfigError(path + ": no data rows");
        lines.push_back(std::move(s));
      }
      svg = render_line_chart(lines, {options.title, "t", "cumulative " + options.metric});
    } else if (options.kind == "scatter") {
      std::vector<ScatterSeries> scatter;
      for (const auto& path : options.inputs) {
        const CsvTable table = read_csv_file(path);
        table.column("instance_id");
        scatter.push_back({fs::path(path).stem().string(), table.values("final_cost"), table.values("final_regret")});
      }
      svg = render_scatter_chart(scatter, {options.title, "final cost (log)", "final regret (log)"});
    } else {
      throw ConfigError("plot: --kind must be lines or scatter");
    }
    write_text_file(options.out_path, svg);
  } catch (const ConfigError& e) {
    err << "plot error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "plot error: " << e.what() << '\n';
    return kExitConfigError;
  }
  log << "wrote " << options.out_path << '\n';
  return kExitOk;
}

int cmd_validate_config(const std::string& config_path, std::ostream& log, std::ostream& err) {
  try {
    const auto config = load_experiment_config(config_path);
    log << "ok: M=" << config.instance.num_clients() << " K=" << config.instance.num_arms()
        << " T=" << config.horizon << " policies=" << config.policies.size() << " seeds=" << config.seeds << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

}  // namespace fedteach
