#include "fedteach/server_policies.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "fedteach/errors.hpp"
#include "fedteach/format.hpp"

namespace fedteach {

// -- EpochSchedule ------------------------------------------------------------

EpochSchedule::EpochSchedule(Step horizon, Index num_arms, Index num_clients)
    : horizon_(horizon), num_arms_(num_arms), num_clients_(num_clients) {
  if (horizon < 1 || num_arms < 1 || num_clients < 1)
    throw std::invalid_argument("schedule needs T, K, M >= 1");
  const double T = static_cast<double>(horizon);
  log_term_ = std::log(2.0 * static_cast<double>(num_arms) * T * T);

  std::int64_t total = 0;
  for (int epoch = 1; total < horizon; ++epoch) {
    const auto f = static_cast<std::int64_t>(std::ceil(pulls_unrounded(epoch)));
    total += f;
    budget_.push_back(f);
    cumulative_.push_back(total);
  }
}

double EpochSchedule::pulls_unrounded(int epoch) const {
  return std::ldexp(log_term_, 2 * epoch + 3) / static_cast<double>(num_clients_);
}

std::int64_t EpochSchedule::pulls(int epoch) const {
  if (epoch < 1) throw std::out_of_range("epochs start at 1");
  if (epoch <= num_epochs()) return budget_[epoch - 1];
  return static_cast<std::int64_t>(std::ceil(pulls_unrounded(epoch)));
}

std::int64_t EpochSchedule::cumulative(int epoch) const {
  if (epoch <= 0) return 0;
  if (epoch <= num_epochs()) return cumulative_[epoch - 1];
  return std::numeric_limits<std::int64_t>::max();
}

double EpochSchedule::radius(int epoch) { return std::ldexp(1.0, -epoch - 2); }

int EpochSchedule::window_of(std::int64_t pull_number) const {
  if (pull_number < 1) throw std::out_of_range("pull numbers start at 1");
  auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), pull_number);
  if (it == cumulative_.end()) return num_epochs() + 1;
  return static_cast<int>(it - cumulative_.begin()) + 1;
}

// -- EpochStats ---------------------------------------------------------------

EpochStats::EpochStats(EpochSchedule schedule)
    : schedule_(std::move(schedule)),
      pulls_(decltype(pulls_)::Zero(schedule_.num_clients(), schedule_.num_arms())),
      window_sums_(schedule_.num_epochs(),
                   Eigen::ArrayXXd::Zero(schedule_.num_clients(), schedule_.num_arms())),
      tracked_(Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(schedule_.num_arms(), true)) {}

void EpochStats::record(Index client, Arm arm, double raw_reward) {
  const auto n = ++pulls_(client, arm);
  if (!tracked_(arm)) return;
  const int epoch = schedule_.window_of(n);
  if (epoch <= schedule_.num_epochs()) window_sums_[epoch - 1](client, arm) += raw_reward;
}

void EpochStats::count_only(Index client, Arm arm) { ++pulls_(client, arm); }

void EpochStats::discard(Arm arm) {
  tracked_(arm) = false;
  for (auto& sums : window_sums_) sums.col(arm).setZero();
}

bool EpochStats::window_complete(Arm arm, int epoch) const {
  if (!tracked_(arm) || epoch < 1 || epoch > schedule_.num_epochs()) return false;
  return pulls_.col(arm).minCoeff() >= schedule_.cumulative(epoch);
}

double EpochStats::client_estimate(Index client, Arm arm, int epoch) const {
  return window_sums_[epoch - 1](client, arm) / static_cast<double>(schedule_.pulls(epoch));
}

double EpochStats::global_estimate(Arm arm, int epoch) const {
  return window_sums_[epoch - 1].col(arm).mean() / static_cast<double>(schedule_.pulls(epoch));
}

std::vector<ArmBounds> epoch_bounds(const EpochStats& stats, int epoch, std::span<const Arm> arms) {
  const double radius = EpochSchedule::radius(epoch);
  std::vector<ArmBounds> out;
  out.reserve(arms.size());
  for (Arm k : arms) {
    if (!stats.window_complete(k, epoch))
      throw InvariantViolation("epoch " + std::to_string(epoch) + " window of arm " +
                               std::to_string(k + 1) + " is incomplete");
    const double nu = stats.global_estimate(k, epoch);
    out.push_back({k, nu, nu + radius, nu - radius});
  }
  return out;
}

// -- ServerPolicy -------------------------------------------------------------

std::vector<double> ServerPolicy::adjust(Step t, std::span<const Observation> observations, Rng& rng) {
  std::vector<double> sigma(observations.size(), 0.0);
  compute(t, observations, rng, sigma);
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const double adjusted = observations[i].raw_reward + sigma[i];
    if (!(adjusted >= 0.0 && adjusted <= 1.0)) {
      std::ostringstream os;
      os << spec() << " produced adjusted reward " << adjusted << " at t=" << t << " for client "
         << observations[i].client + 1 << " (arm " << observations[i].arm + 1
         << ", raw " << observations[i].raw_reward << ", sigma " << sigma[i] << ")";
      throw InvariantViolation(os.str());
    }
  }
  return sigma;
}

namespace {

void check_gamma(double g, const char* name) {
  if (!(g >= 0.0 && g <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
}

std::string gamma_spec(const char* kind, double g1, double g2) {
  return std::string(kind) + ":g1=" + format_number(g1) + ",g2=" + format_number(g2);
}

}  // namespace

// -- TAL ----------------------------------------------------------------------

TalPolicy::TalPolicy(Index num_clients, Arm num_arms, Step horizon, double gamma1, double gamma2)
    : gamma1_(gamma1), gamma2_(gamma2), stats_(EpochSchedule(horizon, num_arms, num_clients)) {
  check_gamma(gamma1, "gamma1");
  check_gamma(gamma2, "gamma2");
  for (Arm k = 0; k < num_arms; ++k) all_arms_.push_back(k);
}

void TalPolicy::compute(Step t, std::span<const Observation> observations, Rng& /*rng*/,
                        std::span<double> sigma) {
  if (phase_ == TalPhase::Learning) {
    for (const auto& o : observations) stats_.record(o.client, o.arm, o.raw_reward);

    if (stats_.pulls().minCoeff() >= stats_.schedule().cumulative(epoch_)) {
      EpochEvent event{t, epoch_, epoch_bounds(stats_, epoch_, all_arms_), {}};
      // Lowest index wins if two arms dominate with equal bounds.
      for (const auto& candidate : event.bounds) {
        const bool dominates = std::all_of(event.bounds.begin(), event.bounds.end(), [&](const ArmBounds& b) {
          return b.arm == candidate.arm || candidate.lower >= b.upper;
        });
        if (dominates) {
          target_ = candidate.arm;
          phase_ = TalPhase::Teaching;
          switch_step_ = t;
          break;
        }
      }
      events_.push_back(std::move(event));
      if (phase_ == TalPhase::Learning) ++epoch_;
    }
  }

  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    if (phase_ == TalPhase::Learning)
      sigma[i] = gamma1_ - o.raw_reward;
    else
      sigma[i] = (o.arm == *target_) ? 0.0 : gamma2_ - o.raw_reward;
  }
}

PolicyReport TalPolicy::report() const {
  PolicyReport r;
  r.policy = spec();
  r.gamma1 = gamma1_;
  r.gamma2 = gamma2_;
  r.learned_target = target_;
  r.switch_step = switch_step_;
  r.epochs = events_;
  r.schedule = stats_.schedule().budget_table();
  return r;
}

std::string TalPolicy::spec() const { return gamma_spec("tal", gamma1_, gamma2_); }

// -- TWL ----------------------------------------------------------------------

TwlPolicy::TwlPolicy(Index num_clients, Arm num_arms, Step horizon, double gamma1, double gamma2)
    : gamma1_(gamma1),
      gamma2_(gamma2),
      active_mask_(Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(num_arms, true)),
      stats_(EpochSchedule(horizon, num_arms, num_clients)) {
  check_gamma(gamma1, "gamma1");
  check_gamma(gamma2, "gamma2");
  for (Arm k = 0; k < num_arms; ++k) active_.push_back(k);
}

void TwlPolicy::compute(Step t, std::span<const Observation> observations, Rng& /*rng*/,
                        std::span<double> sigma) {
  for (const auto& o : observations) {
    if (active_mask_(o.arm))
      stats_.record(o.client, o.arm, o.raw_reward);
    else
      stats_.count_only(o.client, o.arm);
  }

  if (active_.size() > 1) {
    const auto need = stats_.schedule().cumulative(epoch_);
    const bool ready = std::all_of(active_.begin(), active_.end(),
                                   [&](Arm k) { return stats_.pulls().col(k).minCoeff() >= need; });
    if (ready) {
      EpochEvent event{t, epoch_, epoch_bounds(stats_, epoch_, active_), {}};
      double best_lower = -std::numeric_limits<double>::infinity();
      for (const auto& b : event.bounds) best_lower = std::max(best_lower, b.lower);

      std::vector<Arm> survivors;
      for (const auto& b : event.bounds) {
        if (b.upper >= best_lower) {
          survivors.push_back(b.arm);
        } else {
          event.eliminated.push_back(b.arm);
          eliminations_.push_back({b.arm, epoch_, t});
          active_mask_(b.arm) = false;
          stats_.discard(b.arm);
        }
      }
      active_ = std::move(survivors);
      if (active_.size() == 1) switch_step_ = t;
      events_.push_back(std::move(event));
      ++epoch_;
    }
  }

  const bool resolved = active_.size() == 1;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& o = observations[i];
    if (!active_mask_(o.arm))
      sigma[i] = gamma2_ - o.raw_reward;
    else if (!resolved)
      sigma[i] = gamma1_ - o.raw_reward;
    else
      sigma[i] = 0.0;
  }
}

PolicyReport TwlPolicy::report() const {
  PolicyReport r;
  r.policy = spec();
  r.gamma1 = gamma1_;
  r.gamma2 = gamma2_;
  r.switch_step = switch_step_;
  r.active_set = active_;
  r.epochs = events_;
  r.eliminations = eliminations_;
  r.schedule = stats_.schedule().budget_table();
  return r;
}

std::string TwlPolicy::spec() const { return gamma_spec("twl", gamma1_, gamma2_); }

// -- NG -----------------------------------------------------------------------

NaivelyGuessPolicy::NaivelyGuessPolicy(Arm num_arms, Rng& rng)
    : num_arms_(num_arms), target_(static_cast<Arm>(rng.index(num_arms))), forced_(false) {}

NaivelyGuessPolicy::NaivelyGuessPolicy(Arm num_arms, Arm target)
    : num_arms_(num_arms), target_(target), forced_(true) {
  if (target < 0 || target >= num_arms) throw std::out_of_range("NG target out of range");
}

void NaivelyGuessPolicy::compute(Step, std::span<const Observation> observations, Rng&,
                                 std::span<double> sigma) {
  for (std::size_t i = 0; i < observations.size(); ++i)
    sigma[i] = observations[i].arm == target_ ? 0.0 : -observations[i].raw_reward;
}

PolicyReport NaivelyGuessPolicy::report() const {
  PolicyReport r;
  r.policy = spec();
  r.guessed_target = target_;
  return r;
}

std::string NaivelyGuessPolicy::spec() const {
  return forced_ ? "ng:target=" + std::to_string(target_ + 1) : "ng";
}

// -- NA -----------------------------------------------------------------------

NaivelyAlignPolicy::NaivelyAlignPolicy(BanditInstance instance, Rng global_sampler)
    : instance_(std::move(instance)), sampler_(global_sampler) {}

void NaivelyAlignPolicy::compute(Step, std::span<const Observation> observations, Rng&,
                                 std::span<double> sigma) {
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const double y = sample_global_reward(instance_, observations[i].arm, sampler_);
    sigma[i] = y - observations[i].raw_reward;
  }
}

PolicyReport NaivelyAlignPolicy::report() const {
  PolicyReport r;
  r.policy = "na";
  return r;
}

void IdentityPolicy::compute(Step, std::span<const Observation>, Rng&, std::span<double> sigma) {
  std::fill(sigma.begin(), sigma.end(), 0.0);
}

// -- spec strings -------------------------------------------------------------

std::string PolicySpec::to_string() const {
  switch (kind) {
    case PolicyKind::Tal:
      return gamma_spec("tal", gamma1, gamma2);
    case PolicyKind::Twl:
      return gamma_spec("twl", gamma1, gamma2);
    case PolicyKind::NaivelyGuess:
      return forced_target ? "ng:target=" + std::to_string(*forced_target + 1) : "ng";
    case PolicyKind::NaivelyAlign:
      return "na";
    case PolicyKind::Identity:
      return "identity";
  }
  return "?";
}

std::string PolicySpec::tag() const {
  std::string s = to_string();
  for (char& c : s) {
    if (c == ':' || c == ',') c = '_';
    else if (c == '=') c = '-';
  }
  return s;
}

namespace {

double parse_unit(const std::string& text, const std::string& value, const char* key) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !(v >= 0.0 && v <= 1.0))
    throw ConfigError("policy '" + text + "': " + key + " must be a number in [0,1]");
  return v;
}

}  // namespace

PolicySpec parse_policy(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);

  PolicySpec spec;
  if (head == "tal" || head == "twl") {
    spec.kind = head == "tal" ? PolicyKind::Tal : PolicyKind::Twl;
    std::istringstream fields(tail);
    std::string field;
    while (std::getline(fields, field, ',')) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw ConfigError("policy '" + text + "': expected key=value, got '" + field + "'");
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "g1")
        spec.gamma1 = parse_unit(text, value, "g1");
      else if (key == "g2")
        spec.gamma2 = parse_unit(text, value, "g2");
      else
        throw ConfigError("policy '" + text + "': unknown key '" + key + "'");
    }
    return spec;
  }
  if (head == "ng") {
    spec.kind = PolicyKind::NaivelyGuess;
    if (!tail.empty()) {
      const std::string prefix = "target=";
      if (tail.rfind(prefix, 0) != 0) throw ConfigError("policy '" + text + "': expected ng:target=<arm>");
      const std::string value = tail.substr(prefix.size());
      long arm = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), arm);
      if (ec != std::errc() || ptr != value.data() + value.size() || arm < 1)
        throw ConfigError("policy '" + text + "': target must be a 1-based arm index");
      spec.forced_target = arm - 1;
    }
    return spec;
  }
  if (head == "na" && tail.empty()) return {PolicyKind::NaivelyAlign, 0.0, 0.0, std::nullopt};
  if (head == "identity" && tail.empty()) return {PolicyKind::Identity, 0.0, 0.0, std::nullopt};
  throw ConfigError("unknown policy '" + text + "' (expected tal:..., twl:..., ng, na)");
}

std::unique_ptr<ServerPolicy> make_policy(const PolicySpec& spec, const BanditInstance& instance,
                                          Step horizon, Rng& server_rng, Rng global_sampler) {
  const Index M = instance.num_clients();
  const Arm K = instance.num_arms();
  switch (spec.kind) {
    case PolicyKind::Tal:
      return std::make_unique<TalPolicy>(M, K, horizon, spec.gamma1, spec.gamma2);
    case PolicyKind::Twl:
      return std::make_unique<TwlPolicy>(M, K, horizon, spec.gamma1, spec.gamma2);
    case PolicyKind::NaivelyGuess:
      if (spec.forced_target) {
        if (*spec.forced_target >= K)
          throw ConfigError("policy '" + spec.to_string() + "': target exceeds K=" + std::to_string(K));
        return std::make_unique<NaivelyGuessPolicy>(K, *spec.forced_target);
      }
      return std::make_unique<NaivelyGuessPolicy>(K, server_rng);
    case PolicyKind::NaivelyAlign:
      return std::make_unique<NaivelyAlignPolicy>(instance, global_sampler);
    case PolicyKind::Identity:
      return std::make_unique<IdentityPolicy>();
  }
  throw std::logic_error("unhandled policy kind");
}

}  // namespace fedteach
