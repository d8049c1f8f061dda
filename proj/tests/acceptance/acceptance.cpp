// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance              run every criterion
//   acceptance --only AC-7  run one criterion (plus the batches it needs)

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "fedteach/format.hpp"
#include "fedteach/sim_harness.hpp"

using namespace fedteach;
namespace fs = std::filesystem;

namespace {

constexpr Step kHorizon = 50000;
constexpr std::uint64_t kMasterSeed = 1;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string num(double v) { return format_sig(v, 6); }

// Range tally across every batch this process runs.
std::atomic<long> g_range_checks{0};
std::atomic<long> g_range_violations{0};
std::atomic<int> g_failed_runs{0};

struct Batch {
  std::string label;
  std::vector<MetricsSeries> runs;
  int failures = 0;
};

using Observer = std::function<void(std::size_t, const StepRecord&)>;

Batch run_fixed(const std::string& label, const std::string& strategy, const std::string& policy,
                std::size_t seeds, const Observer& extra = {}) {
  RunConfig rc;
  rc.instance = fixed_instance();
  rc.strategies = uniform_strategies(rc.instance, parse_strategy(strategy));
  rc.policy = parse_policy(policy);
  rc.horizon = kHorizon;
  rc.seed = kMasterSeed;
  rc.checkpoint_stride = 100;

  const auto seed_list = consecutive_seeds(kMasterSeed, seeds);
  const auto outcomes = run_batch(rc, seed_list, 0, [&](std::size_t run, const StepRecord& r) {
    long bad = 0;
    for (std::size_t i = 0; i < r.observations.size(); ++i) {
      const double y = r.observations[i].raw_reward + r.sigma[i];
      if (!(y >= 0.0 && y <= 1.0)) ++bad;
    }
    g_range_checks += static_cast<long>(r.observations.size());
    if (bad) g_range_violations += bad;
    if (extra) extra(run, r);
  });

  Batch b{label, {}, 0};
  for (const auto& o : outcomes) {
    if (o.ok()) {
      b.runs.push_back(*o.series);
    } else {
      ++b.failures;
      std::cerr << label << " seed " << o.seed << ": " << o.error << '\n';
    }
  }
  g_failed_runs += b.failures;
  return b;
}

std::vector<double> finals(const std::vector<MetricsSeries>& runs, Step t, bool regret) {
  std::vector<double> out;
  for (const auto& s : runs) out.push_back(regret ? s.at(t).regret : s.at(t).cost);
  return out;
}

double median_at(const std::vector<MetricsSeries>& runs, Step t, bool regret) {
  return median(finals(runs, t, regret));
}

// R(T) - R(T/2) < R(T/2) on medians, for one metric.
bool sublinear(const std::vector<MetricsSeries>& runs, bool regret, std::string& detail) {
  const double half = median_at(runs, kHorizon / 2, regret);
  const double full = median_at(runs, kHorizon, regret);
  detail += std::string(regret ? "regret" : "cost") + " " + num(half) + "->" + num(full);
  return !runs.empty() && full - half < half;
}

// Final value within +-20% of twice the half-horizon value, on medians.
bool doubles(const std::vector<MetricsSeries>& runs, bool regret, std::string& detail) {
  const double half = median_at(runs, kHorizon / 2, regret);
  const double full = median_at(runs, kHorizon, regret);
  const double ratio = full / (2.0 * half);
  detail += std::string(regret ? "regret" : "cost") + " " + num(half) + "->" + num(full) + " ratio " + num(ratio);
  return !runs.empty() && std::abs(ratio - 1.0) <= 0.2;
}

std::vector<MetricsSeries> wrong_target_only(const std::vector<MetricsSeries>& runs, Arm best) {
  std::vector<MetricsSeries> out;
  for (const auto& s : runs)
    if (s.report.guessed_target && *s.report.guessed_target != best) out.push_back(s);
  return out;
}

class Suite {
 public:
  const Batch& tal_ucb() {
    if (!tal_ucb_) {
      // Round-robin audit rides along: while TAL is still learning, each
      // client's pull counts must stay within one of each other.
      learning_.assign(kSeeds, true);
      tal_ucb_ = run_fixed("tal ucb1", "ucb1", "tal:g1=1,g2=0", kSeeds, [this](std::size_t run, const StepRecord& r) {
        if (!learning_[run]) return;
        ++round_robin_checks_;
        for (const auto& c : r.clients) {
          const auto& n = c->state().pulls;
          if (n.maxCoeff() - n.minCoeff() > 1) ++round_robin_violations_;
        }
        const auto* tal = dynamic_cast<const TalPolicy*>(r.server);
        if (tal && tal->phase() == TalPhase::Teaching) learning_[run] = false;
      });
    }
    return *tal_ucb_;
  }
  const Batch& twl_ucb() { return cached(twl_ucb_, "twl ucb1", "ucb1", "twl:g1=1,g2=0", kSeeds); }
  const Batch& ng_ucb() { return cached(ng_ucb_, "ng ucb1", "ucb1", "ng", 40); }
  const Batch& na_ucb() { return cached(na_ucb_, "na ucb1", "ucb1", "na", 30); }
  const Batch& tal_eps() { return cached(tal_eps_, "tal eps", "eps_greedy:c=1", "tal:g1=0,g2=0", 30); }
  const Batch& ng_eps() { return cached(ng_eps_, "ng eps", "eps_greedy:c=1", "ng", 40); }

  long round_robin_checks() const { return round_robin_checks_; }
  long round_robin_violations() const { return round_robin_violations_; }

  static constexpr std::size_t kSeeds = 50;

 private:
  const Batch& cached(std::optional<Batch>& slot, const std::string& label, const std::string& strategy,
                      const std::string& policy, std::size_t seeds) {
    if (!slot) slot = run_fixed(label, strategy, policy, seeds);
    return *slot;
  }

  std::optional<Batch> tal_ucb_, twl_ucb_, ng_ucb_, na_ucb_, tal_eps_, ng_eps_;
  std::vector<bool> learning_;
  long round_robin_checks_ = 0;
  long round_robin_violations_ = 0;
};

Verdict ac1(Suite&) {
  const auto nu = global_summary(fixed_instance()).global_means;
  Eigen::VectorXd expected(5);
  expected << 0.3, 0.4, 0.5, 0.6, 0.7;
  const double err = (nu - expected).cwiseAbs().maxCoeff();
  return {err <= 1e-12, "max |nu - expected| = " + num(err)};
}

Verdict ac2(Suite& s) {
  const auto& b = s.tal_ucb();
  int hits = 0;
  for (const auto& r : b.runs) hits += r.report.learned_target && *r.report.learned_target == 4;
  const double frac = double(hits) / double(Suite::kSeeds);
  return {b.failures == 0 && frac >= 0.95,
          "target = arm 5 in " + std::to_string(hits) + "/" + std::to_string(Suite::kSeeds) + " runs"};
}

Verdict ac3(Suite& s) {
  s.tal_ucb();
  return {s.round_robin_checks() > 0 && s.round_robin_violations() == 0,
          std::to_string(s.round_robin_violations()) + " violations over " + std::to_string(s.round_robin_checks()) +
              " learning steps"};
}

Verdict ac4(Suite&) {
  const EpochSchedule sched(50000, 5, 5);
  const double log_term = std::log(2.0 * 5.0 * 50000.0 * 50000.0);
  double worst = 0.0;
  for (int psi = 1; psi <= 20; ++psi) {
    const double cb = std::sqrt(log_term / (2.0 * 5.0 * sched.pulls_unrounded(psi)));
    worst = std::max(worst, std::abs(cb - std::pow(2.0, -psi - 2)));
  }
  const bool f1 = sched.pulls(1) == 154;
  return {worst <= 1e-12 && f1, "max identity error " + num(worst) + ", f(1) = " + std::to_string(sched.pulls(1))};
}

Verdict ac5(Suite& s) {
  std::string d = "tal ";
  bool ok = sublinear(s.tal_ucb().runs, true, d);
  d += ", ";
  ok = sublinear(s.tal_ucb().runs, false, d) && ok;
  d += "; twl ";
  ok = sublinear(s.twl_ucb().runs, true, d) && ok;
  d += ", ";
  ok = sublinear(s.twl_ucb().runs, false, d) && ok;
  return {ok && s.tal_ucb().runs.size() >= 30 && s.twl_ucb().runs.size() >= 30, d};
}

Verdict ac6(Suite& s) {
  const double tal_r = median_at(s.tal_ucb().runs, kHorizon, true);
  const double tal_c = median_at(s.tal_ucb().runs, kHorizon, false);
  const double twl_r = median_at(s.twl_ucb().runs, kHorizon, true);
  const double twl_c = median_at(s.twl_ucb().runs, kHorizon, false);
  return {twl_r <= tal_r && twl_c <= tal_c,
          "median regret twl " + num(twl_r) + " vs tal " + num(tal_r) + ", cost twl " + num(twl_c) + " vs tal " +
              num(tal_c)};
}

Verdict ac7(Suite& s) {
  const Arm best = global_summary(fixed_instance()).optimal_arm;
  const auto wrong = wrong_target_only(s.ng_ucb().runs, best);
  std::string d = "ng wrong-target (" + std::to_string(wrong.size()) + " runs) ";
  bool ok = wrong.size() >= 20 && doubles(wrong, true, d);
  d += "; na (" + std::to_string(s.na_ucb().runs.size()) + " runs) ";
  ok = doubles(s.na_ucb().runs, false, d) && ok && s.na_ucb().runs.size() >= 20;
  return {ok, d};
}

Verdict ac8(Suite& s) {
  const Arm best = global_summary(fixed_instance()).optimal_arm;
  const auto wrong = wrong_target_only(s.ng_eps().runs, best);
  const double tal = median_at(s.tal_eps().runs, kHorizon, true);
  const double ng = median_at(wrong, kHorizon, true);
  std::string d = "median regret tal(0,0) " + num(tal) + " vs 10% of ng wrong-target " + num(0.1 * ng) + "; ";
  bool ok = !wrong.empty() && tal < 0.1 * ng;
  ok = sublinear(s.tal_eps().runs, true, d) && ok;
  d += ", ";
  ok = sublinear(s.tal_eps().runs, false, d) && ok;
  return {ok, d};
}

Verdict ac9(Suite& s) {
  const auto summary = global_summary(fixed_instance());
  const auto& runs = s.twl_ucb().runs;
  int survivor_ok = 0, timing_ok = 0;
  for (const auto& r : runs) {
    survivor_ok += r.report.active_set.size() == 1 && r.report.active_set[0] == summary.optimal_arm;
    bool on_time = true;
    for (const auto& e : r.report.eliminations)
      if (e.arm != summary.optimal_arm && e.epoch > epochs_to_resolve(summary.gaps(e.arm))) on_time = false;
    timing_ok += on_time;
  }
  const double n = double(runs.size());
  return {runs.size() >= 50 && survivor_ok >= 0.95 * n && timing_ok >= 0.95 * n,
          "survivor = arm 5 in " + std::to_string(survivor_ok) + "/" + std::to_string(runs.size()) +
              ", eliminations on schedule in " + std::to_string(timing_ok) + "/" + std::to_string(runs.size())};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict ac10(Suite&) {
  const fs::path root = fs::temp_directory_path() / ("fedteach_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "config.json") << R"({
  "instance": "fixed",
  "strategies": ["ucb1", "ucb1", "eps_greedy:c=1", "eps_greedy:c=1", "ts"],
  "policies": ["tal:g1=1,g2=0", "twl:g1=1,g2=0", "ng", "na"],
  "horizon": 50000,
  "seed": 1,
  "seeds": 8
})";
  auto run = [&](unsigned workers, const std::string& out) {
    const std::string cmd = std::string("\"") + FEDTEACH_CLI + "\" run --config " + (root / "config.json").string() +
                            " --workers " + std::to_string(workers) + " --out " + (root / out).string() +
                            " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const int a = run(1, "w1");
  const int b = run(8, "w8");
  if (a != 0 || b != 0) return {false, "cli exit codes " + std::to_string(a) + ", " + std::to_string(b)};

  int compared = 0, differing = 0, csv = 0, svg = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "w1")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root / "w1");
    ++compared;
    csv += rel.extension() == ".csv";
    svg += rel.extension() == ".svg";
    if (!fs::exists(root / "w8" / rel) || slurp(e.path()) != slurp(root / "w8" / rel)) ++differing;
  }
  fs::remove_all(root);
  return {differing == 0 && csv > 0 && svg > 0,
          std::to_string(differing) + " of " + std::to_string(compared) + " files differ (" + std::to_string(csv) +
              " csv, " + std::to_string(svg) + " svg), workers 1 vs 8"};
}

Verdict ac11(Suite& s) {
  s.tal_ucb();
  s.twl_ucb();
  s.ng_ucb();
  s.na_ucb();
  s.tal_eps();
  s.ng_eps();
  return {g_range_violations == 0 && g_failed_runs == 0 && g_range_checks > 0,
          std::to_string(g_range_violations.load()) + " out-of-range adjusted rewards in " +
              std::to_string(g_range_checks.load()) + " checks, " + std::to_string(g_failed_runs.load()) +
              " aborted runs"};
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only AC-n]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, Verdict (*)(Suite&)>> criteria = {
      {"AC-1", ac1}, {"AC-2", ac2}, {"AC-3", ac3}, {"AC-4", ac4},   {"AC-5", ac5},   {"AC-6", ac6},
      {"AC-7", ac7}, {"AC-8", ac8}, {"AC-9", ac9}, {"AC-10", ac10}, {"AC-11", ac11},
  };

  Suite suite;
  int failed = 0, ran = 0;
  for (const auto& [id, check] : criteria) {
    if (!only.empty() && only != id) continue;
    ++ran;
    Verdict v;
    try {
      v = check(suite);
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << id << "  " << v.detail << std::endl;
  }
  if (ran == 0) {
    std::cerr << "no criterion named " << only << '\n';
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
