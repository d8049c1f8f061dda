#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedteach/client_strategies.hpp"
#include "fedteach/environment.hpp"
#include "fedteach/rng.hpp"

namespace fedteach {

/// Per-epoch pull budget shared by TAL and TWL.
///
/// Epoch psi asks every client for f(psi) fresh pulls of each tracked arm,
/// where f(psi) = ceil(2^(2 psi + 3) ln(2 K T^2) / M). With the unrounded
/// budget the Hoeffding radius sqrt(ln(2 K T^2) / (2 M f)) equals
/// 2^(-psi-2) exactly; rounding up only shrinks it, so the closed form is
/// used as the radius.
class EpochSchedule {
 public:
  EpochSchedule(Step horizon, Index num_arms, Index num_clients);

  Step horizon() const { return horizon_; }
  Index num_arms() const { return num_arms_; }
  Index num_clients() const { return num_clients_; }

  /// ln(2 K T^2)
  double log_term() const { return log_term_; }
  double pulls_unrounded(int epoch) const;
  std::int64_t pulls(int epoch) const;       // f(psi)
  std::int64_t cumulative(int epoch) const;  // F(psi), F(0) = 0; saturates past the table
  static double radius(int epoch);           // 2^(-psi-2)

  /// Epoch whose window holds the n-th pull of an arm: F(psi-1) < n <= F(psi).
  int window_of(std::int64_t pull_number) const;

  /// Epochs tabulated; the last one reaches past the horizon, so every pull
  /// of a run falls in some window.
  int num_epochs() const { return static_cast<int>(budget_.size()); }
  const std::vector<std::int64_t>& budget_table() const { return budget_; }

 private:
  Step horizon_;
  Index num_arms_;
  Index num_clients_;
  double log_term_;
  std::vector<std::int64_t> budget_;      // f(1..n)
  std::vector<std::int64_t> cumulative_;  // F(1..n)
};

/// Raw-reward statistics keyed by epoch window. Only raw local rewards go in
/// here; adjusted rewards never do.
class EpochStats {
 public:
  explicit EpochStats(EpochSchedule schedule);

  const EpochSchedule& schedule() const { return schedule_; }

  /// Count the pull and add the raw reward to the window it belongs to.
  void record(Index client, Arm arm, double raw_reward);
  /// Count the pull without tracking its reward.
  void count_only(Index client, Arm arm);
  /// Drop every partial window of `arm` and stop tracking it.
  void discard(Arm arm);

  std::int64_t pulls(Index client, Arm arm) const { return pulls_(client, arm); }
  const Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& pulls() const { return pulls_; }
  bool tracked(Arm arm) const { return tracked_(arm); }

  /// Every client has pulled `arm` at least F(epoch) times and the arm has
  /// been tracked throughout.
  bool window_complete(Arm arm, int epoch) const;

  /// mu_hat_{k,m}(psi): mean of the f(psi) raw rewards in the window.
  double client_estimate(Index client, Arm arm, int epoch) const;
  /// nu_hat_k(psi) = (1/M) sum_m mu_hat_{k,m}(psi).
  double global_estimate(Arm arm, int epoch) const;

 private:
  EpochSchedule schedule_;
  Eigen::Array<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> pulls_;  // M x K
  std::vector<Eigen::ArrayXXd> window_sums_;                          // per epoch, M x K
  Eigen::Array<bool, Eigen::Dynamic, 1> tracked_;
};

struct ArmBounds {
  Arm arm = 0;
  double estimate = 0.0;
  double upper = 0.0;
  double lower = 0.0;
};

/// UCB/LCB of each listed arm at `epoch`: nu_hat +- 2^(-psi-2), unclipped.
/// Throws InvariantViolation if any window is incomplete.
std::vector<ArmBounds> epoch_bounds(const EpochStats& stats, int epoch, std::span<const Arm> arms);

/// One observed pull of step t.
struct Observation {
  Index client = 0;
  Arm arm = 0;
  double raw_reward = 0.0;
};

struct EpochEvent {
  Step t = 0;
  int epoch = 0;
  std::vector<ArmBounds> bounds;
  std::vector<Arm> eliminated;  // TWL only
};

struct Elimination {
  Arm arm = 0;
  int epoch = 0;
  Step t = 0;
};

/// Run metadata a policy exposes after (or during) an episode.
struct PolicyReport {
  std::string policy;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  std::optional<Arm> learned_target;  // TAL
  std::optional<Step> switch_step;    // TAL: phase flip; TWL: active set reached one arm
  std::optional<Arm> guessed_target;  // NG
  std::vector<Arm> active_set;        // TWL
  std::vector<EpochEvent> epochs;
  std::vector<Elimination> eliminations;
  std::vector<std::int64_t> schedule;  // f(psi) per tabulated epoch, TAL/TWL
};

/// A reward-adjusting server. adjust() first ingests the step's
/// observations, then applies any phase or elimination update, then emits
/// one sigma per observation. Every emitted x + sigma is checked to lie in
/// [0,1].
class ServerPolicy {
 public:
  virtual ~ServerPolicy() = default;

  std::vector<double> adjust(Step t, std::span<const Observation> observations, Rng& rng);

  virtual PolicyReport report() const = 0;
  virtual std::string spec() const = 0;

 protected:
  virtual void compute(Step t, std::span<const Observation> observations, Rng& rng,
                       std::span<double> sigma) = 0;
};

enum class TalPhase { Learning, Teaching };

/// Teaching-after-learning. Learning flattens every reward to gamma1 until
/// one arm's confidence interval dominates the rest; teaching then keeps
/// the learned target's raw reward and flattens the others to gamma2.
class TalPolicy final : public ServerPolicy {
 public:
  TalPolicy(Index num_clients, Arm num_arms, Step horizon, double gamma1, double gamma2);

  TalPhase phase() const { return phase_; }
  int epoch() const { return epoch_; }
  std::optional<Arm> learned_target() const { return target_; }
  const EpochStats& stats() const { return stats_; }

  PolicyReport report() const override;
  std::string spec() const override;

 protected:
  void compute(Step t, std::span<const Observation> observations, Rng& rng,
               std::span<double> sigma) override;

 private:
  double gamma1_;
  double gamma2_;
  TalPhase phase_ = TalPhase::Learning;
  int epoch_ = 1;
  std::optional<Arm> target_;
  std::optional<Step> switch_step_;
  EpochStats stats_;
  std::vector<Arm> all_arms_;
  std::vector<EpochEvent> events_;
};

/// Teaching-while-learning. Successive elimination over an active set;
/// active arms are flattened to gamma1 while more than one survives,
/// inactive arms to gamma2, and a sole survivor keeps its raw reward.
class TwlPolicy final : public ServerPolicy {
 public:
  TwlPolicy(Index num_clients, Arm num_arms, Step horizon, double gamma1, double gamma2);

  const std::vector<Arm>& active_set() const { return active_; }
  bool is_active(Arm arm) const { return active_mask_(arm); }
  int epoch() const { return epoch_; }
  const EpochStats& stats() const { return stats_; }

  PolicyReport report() const override;
  std::string spec() const override;

 protected:
  void compute(Step t, std::span<const Observation> observations, Rng& rng,
               std::span<double> sigma) override;

 private:
  double gamma1_;
  double gamma2_;
  int epoch_ = 1;
  std::vector<Arm> active_;
  Eigen::Array<bool, Eigen::Dynamic, 1> active_mask_;
  std::optional<Step> switch_step_;
  EpochStats stats_;
  std::vector<EpochEvent> events_;
  std::vector<Elimination> eliminations_;
};

/// Naively-guess baseline: a fixed target, every other arm zeroed.
class NaivelyGuessPolicy final : public ServerPolicy {
 public:
  /// Target drawn uniformly from the rng.
  NaivelyGuessPolicy(Arm num_arms, Rng& rng);
  /// Forced target.
  NaivelyGuessPolicy(Arm num_arms, Arm target);

  Arm target() const { return target_; }
  PolicyReport report() const override;
  std::string spec() const override;

 protected:
  void compute(Step t, std::span<const Observation> observations, Rng& rng,
               std::span<double> sigma) override;

 private:
  Arm num_arms_;
  Arm target_;
  bool forced_;
};

/// Naively-align baseline: replaces each local reward with a fresh global
/// reward sample drawn from its own stream.
class NaivelyAlignPolicy final : public ServerPolicy {
 public:
  NaivelyAlignPolicy(BanditInstance instance, Rng global_sampler);

  PolicyReport report() const override;
  std::string spec() const override { return "na"; }

 protected:
  void compute(Step t, std::span<const Observation> observations, Rng& rng,
               std::span<double> sigma) override;

 private:
  BanditInstance instance_;
  Rng sampler_;
};

/// sigma == 0. Test stub.
class IdentityPolicy final : public ServerPolicy {
 public:
  PolicyReport report() const override {
    PolicyReport r;
    r.policy = "identity";
    return r;
  }
  std::string spec() const override { return "identity"; }

 protected:
  void compute(Step, std::span<const Observation>, Rng&, std::span<double> sigma) override;
};

enum class PolicyKind { Tal, Twl, NaivelyGuess, NaivelyAlign, Identity };

/// Parsed "tal:g1=<f>,g2=<f>" | "twl:g1=<f>,g2=<f>" | "ng" | "ng:target=<k>" |
/// "na" | "identity". Arms in spec strings are 1-based.
struct PolicySpec {
  PolicyKind kind = PolicyKind::Tal;
  double gamma1 = 1.0;
  double gamma2 = 0.0;
  std::optional<Arm> forced_target;  // 0-based

  std::string to_string() const;
  /// Filesystem-safe label, e.g. "tal_g1-1_g2-0".
  std::string tag() const;
  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

/// Throws ConfigError on malformed input.
PolicySpec parse_policy(const std::string& text);

/// `server_rng` feeds construction-time draws (NG's target);
/// `global_sampler` feeds NA's global-reward draws.
std::unique_ptr<ServerPolicy> make_policy(const PolicySpec& spec, const BanditInstance& instance,
                                          Step horizon, Rng& server_rng, Rng global_sampler);

}  // namespace fedteach
