#include "fedteach/client_strategies.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <stdexcept>

#include "fedteach/errors.hpp"
#include "fedteach/format.hpp"

namespace fedteach {

ClientState::ClientState(Arm num_arms)
    : pulls(CountArray::Zero(num_arms)),
      reward_sums(Eigen::ArrayXd::Zero(num_arms)),
      alpha(Eigen::ArrayXd::Ones(num_arms)),
      beta(Eigen::ArrayXd::Ones(num_arms)) {}

double ClientState::sample_mean(Arm arm) const {
  const auto n = pulls(arm);
  return n > 0 ? reward_sums(arm) / static_cast<double>(n) : 0.0;
}

ClientStrategy::ClientStrategy(StrategyKind kind, Arm num_arms, TieBreak tie_break)
    : state_(num_arms), tie_break_(tie_break) {
  if (num_arms < 1) throw std::invalid_argument("strategy needs at least one arm");
  state_.kind = kind;
}

void ClientStrategy::observe(Arm arm, double adjusted_reward, Rng& /*rng*/) {
  if (arm < 0 || arm >= state_.num_arms()) throw std::out_of_range("arm index out of range");
  if (!(adjusted_reward >= 0.0 && adjusted_reward <= 1.0))
    throw InvariantViolation("client observed adjusted reward " + std::to_string(adjusted_reward) +
                             " outside [0,1]");
  state_.pulls(arm) += 1;
  state_.reward_sums(arm) += adjusted_reward;
  state_.clock += 1;
}

Arm argmax_with_ties(const Eigen::ArrayXd& scores, TieBreak tie_break, Rng& rng) {
  const double best = scores.maxCoeff();
  std::vector<Arm> tied;
  for (Arm k = 0; k < scores.size(); ++k)
    if (scores(k) == best) tied.push_back(k);
  if (tied.size() == 1 || tie_break == TieBreak::LowestIndex) return tied.front();
  return tied[rng.index(tied.size())];
}

// -- UCB1 -------------------------------------------------------------------

double Ucb1Client::index(double mean, std::int64_t pulls, Step t) {
  return mean + std::sqrt(2.0 * std::log(static_cast<double>(t)) / static_cast<double>(pulls));
}

Arm Ucb1Client::choose(Step t, Rng& rng) {
  const Arm K = state_.num_arms();
  for (Arm k = 0; k < K; ++k)
    if (state_.pulls(k) == 0) return k;

  Eigen::ArrayXd scores(K);
  for (Arm k = 0; k < K; ++k) scores(k) = index(state_.sample_mean(k), state_.pulls(k), t);
  return argmax_with_ties(scores, tie_break_, rng);
}

// -- epsilon-greedy -----------------------------------------------------------

EpsGreedyClient::EpsGreedyClient(Arm num_arms, double c, TieBreak tie_break)
    : ClientStrategy(StrategyKind::EpsGreedy, num_arms, tie_break) {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("eps_greedy constant must be positive");
  state_.eps_constant = c;
}

double EpsGreedyClient::exploration_probability(Step t) const {
  return std::min(1.0, state_.eps_constant * static_cast<double>(state_.num_arms()) /
                           static_cast<double>(t));
}

Arm EpsGreedyClient::choose(Step t, Rng& rng) {
  const Arm K = state_.num_arms();
  if (rng.uniform() < exploration_probability(t)) return static_cast<Arm>(rng.index(K));

  Eigen::ArrayXd means(K);
  for (Arm k = 0; k < K; ++k) means(k) = state_.sample_mean(k);
  return argmax_with_ties(means, tie_break_, rng);
}

std::string EpsGreedyClient::spec() const {
  return StrategySpec{StrategyKind::EpsGreedy, state_.eps_constant}.to_string();
}

// -- Thompson sampling ------------------------------------------------------

double sample_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

Arm ThompsonClient::choose(Step /*t*/, Rng& rng) {
  const Arm K = state_.num_arms();
  Eigen::ArrayXd theta(K);
  for (Arm k = 0; k < K; ++k) theta(k) = sample_beta(state_.alpha(k), state_.beta(k), rng);
  return argmax_with_ties(theta, TieBreak::LowestIndex, rng);
}

void ThompsonClient::observe(Arm arm, double adjusted_reward, Rng& rng) {
  ClientStrategy::observe(arm, adjusted_reward, rng);
  const bool success = rng.bernoulli(adjusted_reward);
  state_.alpha(arm) += success ? 1.0 : 0.0;
  state_.beta(arm) += success ? 0.0 : 1.0;
}

// -- spec strings -----------------------------------------------------------

std::string StrategySpec::to_string() const {
  switch (kind) {
    case StrategyKind::Ucb1:
      return "ucb1";
    case StrategyKind::ThompsonSampling:
      return "ts";
    case StrategyKind::EpsGreedy:
      return "eps_greedy:c=" + format_number(eps_constant);
  }
  return "?";
}

StrategySpec parse_strategy(const std::string& text) {
  if (text == "ucb1") return {StrategyKind::Ucb1, 1.0};
  if (text == "ts") return {StrategyKind::ThompsonSampling, 1.0};
  if (text == "eps_greedy") return {StrategyKind::EpsGreedy, 1.0};

  const std::string prefix = "eps_greedy:c=";
  if (text.rfind(prefix, 0) == 0) {
    const std::string value = text.substr(prefix.size());
    double c = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), c);
    if (ec != std::errc() || ptr != value.data() + value.size() || !(c > 0.0) || !std::isfinite(c))
      throw ConfigError("strategy '" + text + "': c must be a positive number");
    return {StrategyKind::EpsGreedy, c};
  }
  throw ConfigError("unknown strategy '" + text + "' (expected ucb1, eps_greedy:c=<float>, or ts)");
}

std::unique_ptr<ClientStrategy> make_client(const StrategySpec& spec, Arm num_arms,
                                            TieBreak tie_break) {
  switch (spec.kind) {
    case StrategyKind::Ucb1:
      return std::make_unique<Ucb1Client>(num_arms, tie_break);
    case StrategyKind::EpsGreedy:
      return std::make_unique<EpsGreedyClient>(num_arms, spec.eps_constant, tie_break);
    case StrategyKind::ThompsonSampling:
      return std::make_unique<ThompsonClient>(num_arms);
  }
  throw std::logic_error("unhandled strategy kind");
}

}  // namespace fedteach
