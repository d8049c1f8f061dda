#include "fedteach/experiment_config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "fedteach/errors.hpp"

namespace fedteach {

namespace {

const std::set<std::string> kKnownKeys = {"instance", "strategies", "policies", "horizon", "seed",
                                          "seeds", "workers", "out", "checkpoint_stride", "plots",
                                          "tie_break", "realized_regret"};

template <typename T>
T field(const nlohmann::json& j, const std::string& name) {
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("field '" + name + "': " + e.what());
  }
}

std::int64_t positive_int(const nlohmann::json& j, const std::string& name) {
  const auto& v = j.at(name);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
    throw ConfigError("field '" + name + "': expected a positive integer, got " + v.dump());
  return v.get<std::int64_t>();
}

InstanceSource parse_source(const nlohmann::json& j, const std::string& base_dir, BanditInstance& instance) {
  InstanceSource src;
  if (j.is_string()) {
    if (j.get<std::string>() != "fixed")
      throw ConfigError("field 'instance': expected \"fixed\", {\"random\": ...}, {\"file\": ...} or an inline instance");
    instance = fixed_instance();
    return src;
  }
  if (!j.is_object()) throw ConfigError("field 'instance': expected a string or an object");

  if (j.contains("random")) {
    const auto& r = j.at("random");
    src.kind = InstanceSource::Kind::Random;
    try {
      src.random_seed = r.value("seed", std::uint64_t{0});
      src.random_clients = r.value("M", Index{5});
      src.random_arms = r.value("K", Index{5});
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("field 'instance.random': ") + e.what());
    }
    if (src.random_clients < 1 || src.random_arms < 2)
      throw ConfigError("field 'instance.random': need M >= 1 and K >= 2");
    Rng rng(derive_seed(src.random_seed, "instance"));
    instance = random_instance(src.random_clients, src.random_arms, rng);
    return src;
  }
  if (j.contains("file")) {
    src.kind = InstanceSource::Kind::File;
    std::filesystem::path p = field<std::string>(j, "file");
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    src.path = p.string();
    instance = load_instance(src.path);
    return src;
  }
  src.kind = InstanceSource::Kind::Inline;
  try {
    instance = instance_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("field 'instance': ") + e.what());
  }
  return src;
}

}  // namespace

nlohmann::ordered_json InstanceSource::to_json() const {
  switch (kind) {
    case Kind::Fixed:
      return "fixed";
    case Kind::Random:
      return {{"random", {{"seed", random_seed}, {"M", random_clients}, {"K", random_arms}}}};
    case Kind::File:
      return {{"file", path}};
    case Kind::Inline:
      return "inline";
  }
  return nullptr;
}

RunConfig ExperimentConfig::run_config(const PolicySpec& policy) const {
  RunConfig rc;
  rc.instance = instance;
  rc.strategies = strategies;
  rc.policy = policy;
  rc.horizon = horizon;
  rc.seed = seed;
  rc.checkpoint_stride = checkpoint_stride;
  rc.tie_break = tie_break;
  rc.realized_regret = realized_regret;
  return rc;
}

void ExperimentConfig::validate() const {
  if (static_cast<Index>(strategies.size()) != instance.num_clients())
    throw ConfigError("field 'strategies': expected " + std::to_string(instance.num_clients()) +
                      " entries (one per client), got " + std::to_string(strategies.size()));
  if (policies.empty()) throw ConfigError("field 'policies': at least one policy is required");
  if (seeds < 1) throw ConfigError("field 'seeds': must be positive");
  for (const auto& p : policies) run_config(p).validate();
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json strategies_json = nlohmann::ordered_json::array();
  for (const auto& s : strategies) strategies_json.push_back(s.to_string());
  nlohmann::ordered_json policies_json = nlohmann::ordered_json::array();
  for (const auto& p : policies) policies_json.push_back(p.to_string());
  return {{"instance", source.to_json()},
          {"strategies", strategies_json},
          {"policies", policies_json},
          {"horizon", horizon},
          {"seed", seed},
          {"seeds", seeds},
          {"checkpoint_stride", checkpoint_stride},
          {"tie_break", tie_break == TieBreak::Random ? "random" : "lowest_index"},
          {"realized_regret", realized_regret}};
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& [key, value] : j.items())
    if (!kKnownKeys.count(key)) throw ConfigError("field '" + key + "': unknown key");

  ExperimentConfig c;
  if (j.contains("instance")) c.source = parse_source(j.at("instance"), base_dir, c.instance);

  if (!j.contains("strategies")) throw ConfigError("field 'strategies': required");
  const auto& strategies = j.at("strategies");
  if (!strategies.is_array()) throw ConfigError("field 'strategies': expected an array of strategy strings");
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    if (!strategies[i].is_string()) throw ConfigError("field 'strategies[" + std::to_string(i) + "]': expected a string");
    try {
      c.strategies.push_back(parse_strategy(strategies[i].get<std::string>()));
    } catch (const ConfigError& e) {
      throw ConfigError("field 'strategies[" + std::to_string(i) + "]': " + e.what());
    }
  }

  if (!j.contains("policies")) throw ConfigError("field 'policies': required");
  const auto& policies = j.at("policies");
  if (!policies.is_array()) throw ConfigError("field 'policies': expected an array of policy strings");
  for (std::size_t i = 0; i < policies.size(); ++i) {
    if (!policies[i].is_string()) throw ConfigError("field 'policies[" + std::to_string(i) + "]': expected a string");
    try {
      c.policies.push_back(parse_policy(policies[i].get<std::string>()));
    } catch (const ConfigError& e) {
      throw ConfigError("field 'policies[" + std::to_string(i) + "]': " + e.what());
    }
  }

  if (j.contains("horizon")) c.horizon = positive_int(j, "horizon");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("field 'seed': expected a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("seeds")) c.seeds = static_cast<std::size_t>(positive_int(j, "seeds"));
  if (j.contains("workers")) {
    if (!j.at("workers").is_number_unsigned()) throw ConfigError("field 'workers': expected a non-negative integer");
    c.workers = j.at("workers").get<unsigned>();
  }
  if (j.contains("out")) c.out_dir = field<std::string>(j, "out");
  if (j.contains("checkpoint_stride")) c.checkpoint_stride = positive_int(j, "checkpoint_stride");
  if (j.contains("plots")) c.plots = field<bool>(j, "plots");
  if (j.contains("realized_regret")) c.realized_regret = field<bool>(j, "realized_regret");
  if (j.contains("tie_break")) {
    const auto tb = field<std::string>(j, "tie_break");
    if (tb == "random")
      c.tie_break = TieBreak::Random;
    else if (tb == "lowest_index")
      c.tie_break = TieBreak::LowestIndex;
    else
      throw ConfigError("field 'tie_break': expected \"random\" or \"lowest_index\"");
  }

  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const auto base = std::filesystem::path(path).parent_path().string();
  try {
    return parse_experiment_config(j, base.empty() ? "." : base);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace fedteach
