#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fedteach/compensated_sum.hpp"
#include "fedteach/errors.hpp"
#include "fedteach/output.hpp"
#include "fedteach/sim_harness.hpp"

using namespace fedteach;

namespace {

RunConfig small_config(const std::string& policy, Step horizon = 5000, std::uint64_t seed = 1) {
  RunConfig rc;
  rc.instance = fixed_instance();
  rc.strategies = uniform_strategies(rc.instance, parse_strategy("ucb1"));
  rc.policy = parse_policy(policy);
  rc.horizon = horizon;
  rc.seed = seed;
  rc.checkpoint_stride = 50;
  return rc;
}

// Emits sigma = 1 on every step; pushes any positive raw reward out of range.
class OvershootPolicy final : public ServerPolicy {
 public:
  PolicyReport report() const override { return {}; }
  std::string spec() const override { return "overshoot"; }

 protected:
  void compute(Step, std::span<const Observation>, Rng&, std::span<double> sigma) override {
    std::fill(sigma.begin(), sigma.end(), 1.0);
  }
};

}  // namespace

TEST_CASE("config validation") {
  auto rc = small_config("tal");
  rc.strategies.pop_back();
  CHECK_THROWS_AS(rc.validate(), ConfigError);
  rc = small_config("tal", 3);
  CHECK_THROWS_AS(rc.validate(), ConfigError);
  rc = small_config("tal");
  rc.checkpoint_stride = 0;
  CHECK_THROWS_AS(rc.validate(), ConfigError);
}

TEST_CASE("identity policy with zero gaps has zero regret") {
  RunConfig rc;
  Eigen::MatrixXd m(1, 2);
  m << 1.0, 1.0;
  rc.instance = BanditInstance(m);
  rc.strategies = {parse_strategy("ucb1")};
  rc.policy = parse_policy("identity");
  rc.horizon = 2000;
  const auto s = run_episode(rc);
  CHECK(s.final_regret == 0.0);
  CHECK(s.final_cost == 0.0);
}

TEST_CASE("metric series invariants and decomposition") {
  for (const auto* policy : {"tal:g1=1,g2=0", "twl:g1=1,g2=0", "ng", "na"}) {
    const auto rc = small_config(policy, 4000, 9);
    CompensatedSum replayed_cost;
    Eigen::VectorXd independent_regret = Eigen::VectorXd::Zero(5);
    const auto nu = global_summary(rc.instance).global_means;
    int bad_increments = 0;
    const auto s = run_episode(rc, [&](const StepRecord& r) {
      double step_regret = 0.0, step_cost = 0.0;
      for (std::size_t i = 0; i < r.observations.size(); ++i) {
        step_cost += std::abs(r.sigma[i]);
        replayed_cost.add(std::abs(r.sigma[i]));
        const double g = nu.maxCoeff() - nu(r.observations[i].arm);
        independent_regret(r.observations[i].client) += g;
        step_regret += g;
      }
      if (step_regret < 0.0 || step_regret > 5 * 0.4 + 1e-12 || step_cost > 5.0) ++bad_increments;
    });
    CHECK(bad_increments == 0);
    CHECK(replayed_cost.value() == s.final_cost);
    CHECK(std::abs(s.client_regret.sum() - s.final_regret) <= 1e-9);
    CHECK((s.client_regret - independent_regret).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(std::abs(s.client_cost.sum() - s.final_cost) <= 1e-9);
    for (std::size_t i = 1; i < s.checkpoints.size(); ++i) {
      REQUIRE(s.checkpoints[i].regret >= s.checkpoints[i - 1].regret);
      REQUIRE(s.checkpoints[i].cost >= s.checkpoints[i - 1].cost);
    }
    CHECK(s.checkpoints.back().t == 4000);
    CHECK(s.checkpoints.size() == 80);
  }
}

TEST_CASE("checkpoint grid includes T when the stride does not divide it") {
  auto rc = small_config("na", 1234);
  rc.checkpoint_stride = 100;
  const auto s = run_episode(rc);
  CHECK(s.checkpoints.size() == 13);
  CHECK(s.checkpoints.back().t == 1234);
  CHECK(s.at(1200).t == 1200);
}

TEST_CASE("realized regret tracks pseudo-regret on average") {
  auto rc = small_config("ng:target=1", 20000, 3);
  const auto pseudo = run_episode(rc).final_regret;
  rc.realized_regret = true;
  const auto realized = run_episode(rc).final_regret;
  CHECK(std::abs(realized - pseudo) / pseudo < 0.05);
}

TEST_CASE("out-of-range adjusted rewards abort the run") {
  auto rc = small_config("identity", 100);
  OvershootPolicy p;
  CHECK_THROWS_AS(run_episode(rc, p), InvariantViolation);
}

TEST_CASE("clients only see adjusted rewards") {
  // During TAL learning every adjusted reward is gamma1, so two instances
  // with different raw means must produce the same action streams.
  auto a = small_config("tal:g1=0.5,g2=0", 50000, 4);
  auto b = a;
  Eigen::MatrixXd flipped = Eigen::MatrixXd::Ones(5, 5) - fixed_instance().local_means();
  b.instance = BanditInstance(flipped);
  b.horizon = a.horizon = 450;  // ends before the first window check (t = 470)
  std::vector<Arm> arms_a, arms_b;
  run_episode(a, [&](const StepRecord& r) { for (const auto& o : r.observations) arms_a.push_back(o.arm); });
  run_episode(b, [&](const StepRecord& r) { for (const auto& o : r.observations) arms_b.push_back(o.arm); });
  CHECK(arms_a == arms_b);
}

TEST_CASE("repeated seeds give identical series") {
  const auto rc = small_config("ng", 3000);
  const std::vector<std::uint64_t> seeds{7, 7};
  const auto out = run_batch(rc, seeds, 2);
  REQUIRE(out[0].ok());
  REQUIRE(out[1].ok());
  std::ostringstream a, b;
  write_run_csv(a, *out[0].series);
  write_run_csv(b, *out[1].series);
  CHECK(a.str() == b.str());
}

TEST_CASE("batch results follow seed order for any worker count") {
  const auto rc = small_config("twl:g1=1,g2=0", 3000);
  const auto seeds = consecutive_seeds(40, 12);
  CHECK(seeds.front() == 40);
  CHECK(seeds.back() == 51);
  const auto one = run_batch(rc, seeds, 1);
  const auto eight = run_batch(rc, seeds, 8);
  std::vector<MetricsSeries> s1, s8;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    REQUIRE(one[i].seed == seeds[i]);
    REQUIRE(eight[i].seed == seeds[i]);
    s1.push_back(*one[i].series);
    s8.push_back(*eight[i].series);
  }
  std::ostringstream a, b;
  write_aggregate_csv(a, aggregate(s1));
  write_aggregate_csv(b, aggregate(s8));
  CHECK(a.str() == b.str());
}

TEST_CASE("quantiles use linear interpolation") {
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.1) == doctest::Approx(1.3));
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.9) == doctest::Approx(3.7));
  CHECK(median({5.0, 1.0, 3.0}) == 3.0);
  CHECK(median({4.0, 1.0}) == 2.5);
}

TEST_CASE("aggregate examples") {
  MetricsSeries a;
  a.checkpoints = {{10, 1.0, 2.0}, {20, 3.0, 4.0}};
  MetricsSeries b;
  b.checkpoints = {{10, 5.0, 6.0}, {20, 7.0, 8.0}};

  const std::vector<MetricsSeries> single{a};
  const auto s = aggregate(single);
  CHECK(s.rows[1].regret_mean == 3.0);
  CHECK(s.rows[1].regret_p10 == 3.0);
  CHECK(s.rows[1].regret_p90 == 3.0);

  const std::vector<MetricsSeries> pair{a, b};
  const auto p = aggregate(pair);
  CHECK(p.rows[0].regret_mean == 3.0);
  CHECK(p.rows[1].cost_mean == 6.0);
  CHECK(p.rows[0].regret_p10 <= p.rows[0].regret_p90);

  CHECK_THROWS_AS(aggregate(std::span<const MetricsSeries>{}), std::invalid_argument);
  b.checkpoints.pop_back();
  const std::vector<MetricsSeries> mismatch{a, b};
  CHECK_THROWS_AS(aggregate(mismatch), std::invalid_argument);
}

TEST_CASE("p10 never exceeds p90 on real batches") {
  const auto rc = small_config("ng", 2000);
  const auto seeds = consecutive_seeds(1, 9);
  std::vector<MetricsSeries> series;
  for (const auto& o : run_batch(rc, seeds, 3)) series.push_back(*o.series);
  for (const auto& row : aggregate(series).rows) {
    REQUIRE(row.regret_p10 <= row.regret_p90);
    REQUIRE(row.cost_p10 <= row.cost_p90);
  }
}

TEST_CASE("sweep shape and zero-gap instances") {
  SweepConfig cfg;
  cfg.instances = 3;
  cfg.horizon = 2000;
  cfg.policies = {parse_policy("tal"), parse_policy("na")};
  cfg.workers = 2;
  const auto sc = sweep_random_instances(cfg);
  REQUIRE(sc.size() == 2);
  CHECK(sc[0].points.size() == 3);
  CHECK(sc[1].points[2].instance_id == 2);
  CHECK(sweep_instance(cfg, 1) == sweep_instance(cfg, 1));
  CHECK(!(sweep_instance(cfg, 0) == sweep_instance(cfg, 1)));

  RunConfig flat;
  flat.instance = BanditInstance(Eigen::MatrixXd::Constant(3, 4, 0.4));
  flat.strategies = uniform_strategies(flat.instance, parse_strategy("ucb1"));
  flat.horizon = 3000;
  for (const auto* p : {"tal", "twl", "ng", "na"}) {
    flat.policy = parse_policy(p);
    CHECK(run_episode(flat).final_regret == 0.0);
  }
}

TEST_CASE("labeled streams are independent of each other") {
  const EpisodeStreams s(5);
  CHECK(s.environment != s.server);
  CHECK(s.client(0) != s.client(1));
  CHECK(EpisodeStreams(5).client(3) == s.client(3));
  CHECK(EpisodeStreams(6).environment != s.environment);
}
