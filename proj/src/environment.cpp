#include "fedteach/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fedteach/errors.hpp"

namespace fedteach {

std::string describe(const RewardKind& kind) {
  if (const auto* g = std::get_if<TruncatedGaussian>(&kind)) {
    std::ostringstream os;
    os << "truncated_gaussian(stddev=" << g->stddev << ")";
    return os.str();
  }
  return "bernoulli";
}

BanditInstance::BanditInstance(Eigen::MatrixXd local_means, RewardKind kind)
    : means_(std::move(local_means)), kind_(kind) {
  if (means_.rows() < 1) throw std::invalid_argument("instance needs at least one client");
  if (means_.cols() < 2) throw std::invalid_argument("instance needs at least two arms");
  if (!means_.allFinite() || means_.minCoeff() < 0.0 || means_.maxCoeff() > 1.0)
    throw std::invalid_argument("local means must lie in [0,1]");
  if (const auto* g = std::get_if<TruncatedGaussian>(&kind_)) {
    if (!(g->stddev > 0.0) || !std::isfinite(g->stddev))
      throw std::invalid_argument("truncated gaussian stddev must be positive");
  }
}

int epochs_to_resolve(double gap) {
  if (!(gap > 0.0)) return std::numeric_limits<int>::max();
  return std::max(1, static_cast<int>(std::ceil(std::log2(1.0 / gap))));
}

GlobalSummary global_summary(const BanditInstance& instance) {
  GlobalSummary s;
  s.global_means = instance.local_means().colwise().mean().transpose();
  // maxCoeff reports the first maximal index.
  s.global_means.maxCoeff(&s.optimal_arm);
  const double best = s.global_means(s.optimal_arm);
  s.gaps = (best - s.global_means.array()).matrix();

  double delta_min = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < s.gaps.size(); ++k) {
    if (k != s.optimal_arm) delta_min = std::min(delta_min, s.gaps(k));
  }
  s.delta_min = delta_min;
  s.gaps(s.optimal_arm) = delta_min;
  s.delta_max = s.gaps.maxCoeff();
  s.psi_max = epochs_to_resolve(delta_min);
  return s;
}

double normal_quantile(double p) {
  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double low = 0.02425;

  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();

  double x;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

double sample_reward(const RewardKind& kind, double mean, Rng& rng) {
  if (const auto* g = std::get_if<TruncatedGaussian>(&kind)) {
    // Midpoint offset keeps the quantile argument strictly inside (0,1).
    const double u = rng.uniform() + 0x1.0p-54;
    return std::clamp(mean + g->stddev * normal_quantile(u), 0.0, 1.0);
  }
  return rng.bernoulli(mean) ? 1.0 : 0.0;
}

double sample_local_reward(const BanditInstance& instance, Index client, Index arm, Rng& rng) {
  if (client < 0 || client >= instance.num_clients() || arm < 0 || arm >= instance.num_arms())
    throw std::out_of_range("client or arm index out of range");
  const double x = sample_reward(instance.reward_kind(), instance.local_mean(client, arm), rng);
  if (!(x >= 0.0 && x <= 1.0)) throw InvariantViolation("local reward left [0,1]");
  return x;
}

double sample_global_reward(const BanditInstance& instance, Index arm, Rng& rng) {
  if (arm < 0 || arm >= instance.num_arms()) throw std::out_of_range("arm index out of range");
  const double nu = instance.local_means().col(arm).mean();
  const double y = sample_reward(instance.reward_kind(), nu, rng);
  if (!(y >= 0.0 && y <= 1.0)) throw InvariantViolation("global reward left [0,1]");
  return y;
}

BanditInstance fixed_instance() {
  Eigen::MatrixXd means(5, 5);
  means << 0.2, 0.9, 0.1, 0.8, 0.6,
           0.4, 0.1, 0.9, 0.4, 0.8,
           0.2, 0.2, 0.5, 0.5, 0.9,
           0.4, 0.3, 0.8, 0.9, 0.4,
           0.3, 0.5, 0.2, 0.4, 0.8;
  return BanditInstance(std::move(means), Bernoulli{});
}

BanditInstance random_instance(Index num_clients, Index num_arms, Rng& rng) {
  if (num_clients < 1 || num_arms < 2) throw std::invalid_argument("need M >= 1 and K >= 2");
  Eigen::MatrixXd means(num_clients, num_arms);
  // Client-major fill order, fixed for reproducibility.
  for (Index m = 0; m < num_clients; ++m)
    for (Index k = 0; k < num_arms; ++k) means(m, k) = rng.uniform();
  return BanditInstance(std::move(means), Bernoulli{});
}

nlohmann::json to_json(const BanditInstance& instance) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index m = 0; m < instance.num_clients(); ++m) {
    nlohmann::json row = nlohmann::json::array();
    for (Index k = 0; k < instance.num_arms(); ++k) row.push_back(instance.local_mean(m, k));
    rows.push_back(std::move(row));
  }
  nlohmann::json kind;
  if (const auto* g = std::get_if<TruncatedGaussian>(&instance.reward_kind()))
    kind = {{"truncated_gaussian", g->stddev}};
  else
    kind = "bernoulli";
  return {{"M", instance.num_clients()},
          {"K", instance.num_arms()},
          {"means", std::move(rows)},
          {"reward_kind", std::move(kind)}};
}

BanditInstance instance_from_json(const nlohmann::json& j) {
  try {
    const auto M = j.at("M").get<Index>();
    const auto K = j.at("K").get<Index>();
    const auto& rows = j.at("means");
    if (!rows.is_array() || static_cast<Index>(rows.size()) != M)
      throw ConfigError("instance: 'means' must have M rows");
    Eigen::MatrixXd means(M, K);
    for (Index m = 0; m < M; ++m) {
      const auto& row = rows.at(m);
      if (!row.is_array() || static_cast<Index>(row.size()) != K)
        throw ConfigError("instance: row " + std::to_string(m) + " of 'means' must have K entries");
      for (Index k = 0; k < K; ++k) means(m, k) = row.at(k).get<double>();
    }
    RewardKind kind = Bernoulli{};
    if (j.contains("reward_kind")) {
      const auto& rk = j.at("reward_kind");
      if (rk.is_string() && rk.get<std::string>() == "bernoulli") {
        kind = Bernoulli{};
      } else if (rk.is_object() && rk.contains("truncated_gaussian")) {
        kind = TruncatedGaussian{rk.at("truncated_gaussian").get<double>()};
      } else {
        throw ConfigError("instance: unknown 'reward_kind' " + rk.dump());
      }
    }
    return BanditInstance(std::move(means), kind);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("instance: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("instance: ") + e.what());
  }
}

BanditInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open instance file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return instance_from_json(j);
}

}  // namespace fedteach
