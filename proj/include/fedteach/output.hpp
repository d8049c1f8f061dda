#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedteach/sim_harness.hpp"

namespace fedteach {

using ordered_json = nlohmann::ordered_json;

/// `t,regret_cum,cost_cum`
void write_run_csv(std::ostream& out, const MetricsSeries& series);
/// `t,regret_mean,regret_p10,regret_p90,cost_mean,cost_p10,cost_p90`
void write_aggregate_csv(std::ostream& out, const AggregateStats& stats);
/// `instance_id,final_regret,final_cost`
void write_scatter_csv(std::ostream& out, const Scatter& scatter);

/// Conventions every output carries: reward model, TS prior, regret kind.
ordered_json run_conventions(const BanditInstance& instance, bool realized_regret);

/// Per-run summary: seed, policy, strategies, T, learned target, switch
/// step, final regret/cost, epoch schedule and epoch log. Arms are 1-based.
ordered_json run_summary(const MetricsSeries& series, const BanditInstance& instance);

ordered_json schedule_json(const EpochSchedule& schedule);

/// A numeric CSV with a header row.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column position; throws ConfigError naming the missing column.
  std::size_t column(const std::string& name) const;
  std::vector<double> values(const std::string& name) const;
};

/// Throws ConfigError on ragged rows or non-numeric cells.
CsvTable read_csv(std::istream& in, const std::string& source);
CsvTable read_csv_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace fedteach
