#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedteach/rng.hpp"

namespace fedteach {

using Arm = Eigen::Index;
using Step = std::int64_t;
using CountArray = Eigen::Array<std::int64_t, Eigen::Dynamic, 1>;

enum class StrategyKind { Ucb1, EpsGreedy, ThompsonSampling };

/// How equal scores are resolved. Random is the default; LowestIndex exists
/// for debugging traces.
enum class TieBreak { Random, LowestIndex };

/// Everything a client ever learns. Built only from adjusted rewards: the
/// raw local reward and the global model are not reachable from here.
struct ClientState {
  StrategyKind kind = StrategyKind::Ucb1;
  double eps_constant = 1.0;  // c in eps(t) = min(1, c K / t)
  CountArray pulls;           // N_k
  Eigen::ArrayXd reward_sums; // sum of adjusted rewards per arm
  Eigen::ArrayXd alpha;       // Beta posterior, TS only
  Eigen::ArrayXd beta;
  Step clock = 0;             // observations so far

  explicit ClientState(Arm num_arms = 2);

  Arm num_arms() const { return pulls.size(); }
  /// Perceived sample mean; zero for unpulled arms.
  double sample_mean(Arm arm) const;
};

/// A client's autonomous bandit algorithm. choose() depends only on the
/// state, the step and the rng; observe() sees only the adjusted reward.
class ClientStrategy {
 public:
  virtual ~ClientStrategy() = default;

  virtual Arm choose(Step t, Rng& rng) = 0;
  /// Rejects rewards outside [0,1].
  virtual void observe(Arm arm, double adjusted_reward, Rng& rng);

  const ClientState& state() const { return state_; }
  StrategyKind kind() const { return state_.kind; }
  virtual std::string spec() const = 0;

 protected:
  ClientStrategy(StrategyKind kind, Arm num_arms, TieBreak tie_break);

  ClientState state_;
  TieBreak tie_break_;
};

class Ucb1Client final : public ClientStrategy {
 public:
  explicit Ucb1Client(Arm num_arms, TieBreak tie_break = TieBreak::Random)
      : ClientStrategy(StrategyKind::Ucb1, num_arms, tie_break) {}

  Arm choose(Step t, Rng& rng) override;
  std::string spec() const override { return "ucb1"; }

  /// mean + sqrt(2 ln t / N); requires N > 0.
  static double index(double mean, std::int64_t pulls, Step t);
};

class EpsGreedyClient final : public ClientStrategy {
 public:
  explicit EpsGreedyClient(Arm num_arms, double c = 1.0, TieBreak tie_break = TieBreak::Random);

  Arm choose(Step t, Rng& rng) override;
  std::string spec() const override;

  /// min(1, c K / t)
  double exploration_probability(Step t) const;
};

/// Beta-Bernoulli Thompson sampling with Beta(1,1) priors. Fractional
/// rewards are binarized by one Bernoulli draw before the posterior update.
/// Exact ties between posterior draws go to the lowest index.
class ThompsonClient final : public ClientStrategy {
 public:
  explicit ThompsonClient(Arm num_arms)
      : ClientStrategy(StrategyKind::ThompsonSampling, num_arms, TieBreak::LowestIndex) {}

  Arm choose(Step t, Rng& rng) override;
  void observe(Arm arm, double adjusted_reward, Rng& rng) override;
  std::string spec() const override { return "ts"; }
};

double sample_beta(double a, double b, Rng& rng);

/// Pick among the arms whose score equals the maximum.
Arm argmax_with_ties(const Eigen::ArrayXd& scores, TieBreak tie_break, Rng& rng);

/// Parsed form of "ucb1" | "eps_greedy:c=<float>" | "ts".
struct StrategySpec {
  StrategyKind kind = StrategyKind::Ucb1;
  double eps_constant = 1.0;

  std::string to_string() const;
  friend bool operator==(const StrategySpec&, const StrategySpec&) = default;
};

/// Throws ConfigError on malformed input.
StrategySpec parse_strategy(const std::string& text);

std::unique_ptr<ClientStrategy> make_client(const StrategySpec& spec, Arm num_arms,
                                            TieBreak tie_break = TieBreak::Random);

}  // namespace fedteach
