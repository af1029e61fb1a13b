#pragma once

// TOML experiment configs. Kept apart from bench.hpp so the solvers do not
// pull in the TOML parser.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <toml.hpp>

#include "rwl1/bench.hpp"

namespace rwl1 {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename T>
std::vector<T> toml_list(const toml::node_view<const toml::node>& node, const std::string& key) {
  std::vector<T> out;
  if (!node) return out;
  const toml::array* arr = node.as_array();
  if (!arr) {
    if (auto v = node.value<T>()) return {*v};
    throw ConfigError("config: '" + key + "' must be a value or a list");
  }
  for (const auto& el : *arr) {
    auto v = el.value<T>();
    if (!v) throw ConfigError("config: '" + key + "' has an entry of the wrong type");
    out.push_back(*v);
  }
  return out;
}

template <typename T>
void toml_get(const toml::node_view<const toml::node>& table, const char* key, T& dst) {
  auto node = table[key];
  if (!node) return;
  auto v = node.value<T>();
  if (!v) throw ConfigError(std::string("config: '") + key + "' has the wrong type");
  dst = *v;
}

}  // namespace detail

/// Schema (every key optional):
///
///   [experiment]  signal, n, m_divisors, m, trials, snr_db, reweight_iters,
///                 solvers, seed, arw_policy, jobs, kkt_fail
///   [homotopy]    kkt_tol, max_steps, factor ("cholesky" | "inverse"), refactor_period
///   [prox]        grad_tol, level_tol, max_inner, continuation_factor, power_iters, lipschitz
inline ExperimentConfig parse_experiment_config(const toml::table& root) {
  ExperimentConfig cfg;
  const toml::node_view<const toml::node> ex = root["experiment"];
  const toml::node_view<const toml::node> ho = root["homotopy"];
  const toml::node_view<const toml::node> px = root["prox"];

  std::string signal = to_string(cfg.signal);
  detail::toml_get(ex, "signal", signal);
  try {
    cfg.signal = parse_signal_kind(signal);
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (ex["n"]) {
    cfg.n_values.clear();
    for (auto n : detail::toml_list<std::int64_t>(ex["n"], "n")) cfg.n_values.push_back(n);
  }
  if (ex["m_divisors"]) cfg.m_divisors = detail::toml_list<double>(ex["m_divisors"], "m_divisors");
  for (auto m : detail::toml_list<std::int64_t>(ex["m"], "m")) cfg.m_values.push_back(m);
  std::int64_t trials = cfg.trials, iters = cfg.reweight_iters, jobs = cfg.jobs, seed = 0;
  detail::toml_get(ex, "trials", trials);
  detail::toml_get(ex, "reweight_iters", iters);
  detail::toml_get(ex, "jobs", jobs);
  detail::toml_get(ex, "seed", seed);
  cfg.trials = static_cast<int>(trials);
  cfg.reweight_iters = static_cast<int>(iters);
  cfg.jobs = static_cast<int>(jobs);
  cfg.seed = static_cast<std::uint64_t>(seed);
  detail::toml_get(ex, "snr_db", cfg.snr_db);
  detail::toml_get(ex, "kkt_fail", cfg.kkt_fail);
  if (ex["solvers"]) cfg.solvers = detail::toml_list<std::string>(ex["solvers"], "solvers");
  std::string policy;
  detail::toml_get(ex, "arw_policy", policy);
  if (!policy.empty()) {
    try {
      cfg.arw_policy = AdaptivePolicy::parse(policy);
    } catch (const ContractViolation& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }

  detail::toml_get(ho, "kkt_tol", cfg.homotopy.kkt_tol);
  std::int64_t max_steps = cfg.homotopy.max_steps, period = cfg.homotopy.refactor_period;
  detail::toml_get(ho, "max_steps", max_steps);
  detail::toml_get(ho, "refactor_period", period);
  cfg.homotopy.max_steps = static_cast<int>(max_steps);
  cfg.homotopy.refactor_period = static_cast<int>(period);
  std::string factor;
  detail::toml_get(ho, "factor", factor);
  if (factor == "inverse")
    cfg.homotopy.factor_mode = FactorMode::inverse;
  else if (!factor.empty() && factor != "cholesky")
    throw ConfigError("config: homotopy.factor must be cholesky or inverse, got '" + factor + "'");

  detail::toml_get(px, "grad_tol", cfg.prox.grad_tol);
  detail::toml_get(px, "level_tol", cfg.prox.level_tol);
  detail::toml_get(px, "continuation_factor", cfg.prox.continuation_factor);
  detail::toml_get(px, "lipschitz", cfg.prox.lipschitz);
  std::int64_t max_inner = cfg.prox.max_inner, power = cfg.prox.power_iters;
  detail::toml_get(px, "max_inner", max_inner);
  detail::toml_get(px, "power_iters", power);
  cfg.prox.max_inner = static_cast<int>(max_inner);
  cfg.prox.power_iters = static_cast<int>(power);

  try {
    cfg.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline ExperimentConfig parse_experiment_config(std::string_view text, std::string_view source = "<config>") {
  try {
    return parse_experiment_config(toml::parse(text, source));
  } catch (const toml::parse_error& e) {
    throw ConfigError(std::string(source) + ": " + std::string(e.description()));
  }
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  try {
    return parse_experiment_config(toml::parse_file(path));
  } catch (const toml::parse_error& e) {
    throw ConfigError(path + ": " + std::string(e.description()));
  }
}

}  // namespace rwl1
