#pragma once

#include <cstddef>
#include <string>
#include <variant>

#include <Eigen/Dense>
#include <json.hpp>

#include "fedteach/rng.hpp"

namespace fedteach {

using Index = Eigen::Index;

struct Bernoulli {
  friend bool operator==(const Bernoulli&, const Bernoulli&) = default;
};

/// Normal(mean, stddev) clamped to [0,1]. The clamp shifts the mean slightly
/// away from the nominal value near the boundaries; that bias is left as is.
struct TruncatedGaussian {
  double stddev = 0.1;
  friend bool operator==(const TruncatedGaussian&, const TruncatedGaussian&) = default;
};

using RewardKind = std::variant<Bernoulli, TruncatedGaussian>;

std::string describe(const RewardKind& kind);

/// Local models of an M-client, K-arm federated bandit. Row m of `means` holds
/// client m's K arm means. Immutable once constructed.
class BanditInstance {
 public:
  BanditInstance(Eigen::MatrixXd local_means, RewardKind kind = Bernoulli{});

  Index num_clients() const { return means_.rows(); }
  Index num_arms() const { return means_.cols(); }
  const Eigen::MatrixXd& local_means() const { return means_; }
  double local_mean(Index client, Index arm) const { return means_(client, arm); }
  const RewardKind& reward_kind() const { return kind_; }

  friend bool operator==(const BanditInstance& a, const BanditInstance& b) {
    return a.kind_ == b.kind_ && a.means_.rows() == b.means_.rows() &&
           a.means_.cols() == b.means_.cols() && a.means_ == b.means_;
  }

 private:
  Eigen::MatrixXd means_;
  RewardKind kind_;
};

/// Quantities of the global model derived from an instance. Analysis only:
/// no server policy reads these.
struct GlobalSummary {
  Eigen::VectorXd global_means;  // nu_k
  Index optimal_arm = 0;         // lowest index among ties
  Eigen::VectorXd gaps;          // gap of the optimal arm is delta_min
  double delta_min = 0.0;
  double delta_max = 0.0;
  int psi_max = 1;               // ceil(log2(1 / delta_min)), at least 1
};

GlobalSummary global_summary(const BanditInstance& instance);

/// ceil(log2(1/gap)), at least 1. Zero gaps map to a large sentinel.
int epochs_to_resolve(double gap);

double sample_local_reward(const BanditInstance& instance, Index client, Index arm, Rng& rng);
double sample_global_reward(const BanditInstance& instance, Index arm, Rng& rng);

/// Draw from `kind` with the given mean. One engine draw for either kind.
double sample_reward(const RewardKind& kind, double mean, Rng& rng);

/// The 5-client, 5-arm Bernoulli instance with global means 0.3..0.7.
BanditInstance fixed_instance();

/// Every local mean i.i.d. Uniform[0,1], Bernoulli rewards.
BanditInstance random_instance(Index num_clients, Index num_arms, Rng& rng);

/// Standard normal quantile, |relative error| < 1e-15 after refinement.
double normal_quantile(double p);

nlohmann::json to_json(const BanditInstance& instance);
BanditInstance instance_from_json(const nlohmann::json& j);
BanditInstance load_instance(const std::string& path);

}  // namespace fedteach
