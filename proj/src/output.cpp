#include "fedteach/output.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fedteach/errors.hpp"
#include "fedteach/format.hpp"

namespace fedteach {

void write_run_csv(std::ostream& out, const MetricsSeries& series) {
  out << "t,regret_cum,cost_cum\n";
  for (const auto& c : series.checkpoints)
    out << c.t << ',' << format_number(c.regret) << ',' << format_number(c.cost) << '\n';
}

void write_aggregate_csv(std::ostream& out, const AggregateStats& stats) {
  out << "t,regret_mean,regret_p10,regret_p90,cost_mean,cost_p10,cost_p90\n";
  for (const auto& r : stats.rows) {
    out << r.t << ',' << format_number(r.regret_mean) << ',' << format_number(r.regret_p10) << ','
        << format_number(r.regret_p90) << ',' << format_number(r.cost_mean) << ','
        << format_number(r.cost_p10) << ',' << format_number(r.cost_p90) << '\n';
  }
}

void write_scatter_csv(std::ostream& out, const Scatter& scatter) {
  out << "instance_id,final_regret,final_cost\n";
  for (const auto& p : scatter.points)
    out << p.instance_id << ',' << format_number(p.final_regret) << ',' << format_number(p.final_cost) << '\n';
}

ordered_json run_conventions(const BanditInstance& instance, bool realized_regret) {
  return {{"reward_kind", describe(instance.reward_kind())},
          {"ts_prior", "beta(1,1)"},
          {"ts_update", "bernoulli-binarized adjusted reward"},
          {"eps_greedy_schedule", "min(1, c*K/t)"},
          {"ucb1_log", "natural"},
          {"regret", realized_regret ? "realized (sampled global rewards)" : "pseudo-regret"},
          {"confidence_band", "empirical p10/p90"}};
}

ordered_json schedule_json(const EpochSchedule& schedule) {
  ordered_json f = ordered_json::array(), F = ordered_json::array(), cb = ordered_json::array();
  for (int epoch = 1; epoch <= schedule.num_epochs(); ++epoch) {
    f.push_back(schedule.pulls(epoch));
    F.push_back(schedule.cumulative(epoch));
    cb.push_back(EpochSchedule::radius(epoch));
  }
  return {{"log_term", schedule.log_term()}, {"f", f}, {"F", F}, {"radius", cb}};
}

namespace {

ordered_json arm_or_null(const std::optional<Arm>& arm) {
  return arm ? ordered_json(*arm + 1) : ordered_json(nullptr);
}

}  // namespace

ordered_json run_summary(const MetricsSeries& series, const BanditInstance& instance) {
  const PolicyReport& r = series.report;

  std::optional<Arm> target = r.learned_target;
  if (!target && r.active_set.size() == 1) target = r.active_set.front();

  ordered_json epochs = ordered_json::array();
  for (const auto& e : r.epochs) {
    ordered_json bounds = ordered_json::array();
    for (const auto& b : e.bounds)
      bounds.push_back({{"arm", b.arm + 1}, {"estimate", b.estimate}, {"ucb", b.upper}, {"lcb", b.lower}});
    ordered_json eliminated = ordered_json::array();
    for (Arm k : e.eliminated) eliminated.push_back(k + 1);
    epochs.push_back({{"t", e.t}, {"psi", e.epoch}, {"bounds", bounds}, {"eliminated", eliminated}});
  }
  ordered_json eliminations = ordered_json::array();
  for (const auto& e : r.eliminations) eliminations.push_back({{"arm", e.arm + 1}, {"psi", e.epoch}, {"t", e.t}});
  ordered_json active = ordered_json::array();
  for (Arm k : r.active_set) active.push_back(k + 1);

  ordered_json schedule = nullptr;
  if (!r.schedule.empty())
    schedule = schedule_json(EpochSchedule(series.horizon, instance.num_arms(), instance.num_clients()));

  return {{"seed", series.seed},
          {"policy", series.policy},
          {"strategies", series.strategies},
          {"T", series.horizon},
          {"k_target_learned", arm_or_null(target)},
          {"t_phase_switch", r.switch_step ? ordered_json(*r.switch_step) : ordered_json(nullptr)},
          {"final_regret", series.final_regret},
          {"final_cost", series.final_cost},
          {"ng_target", arm_or_null(r.guessed_target)},
          {"final_active_set", active},
          {"schedule", schedule},
          {"epochs", epochs},
          {"eliminations", eliminations},
          {"conventions", run_conventions(instance, series.realized_regret)}};
}

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError(source + ": missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[c]);
  return out;
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  table.source = source;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(source + ": empty file");
  {
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) table.header.push_back(field);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size())
        throw ConfigError(source + ":" + std::to_string(line_no) + ": non-numeric value '" + field + "'");
      row.push_back(v);
    }
    if (row.size() != table.header.size())
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields");
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return read_csv(in, path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace fedteach
