#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "liam/env/registry.hpp"
#include "liam/errors.hpp"
#include "liam/models/variant.hpp"

namespace liam::rl {

/// Everything needed to reproduce a run.
struct RunConfig {
  std::string env = "dsl-lite";
  std::string variant = "liam";
  std::string pool_mode = "paired";
  int pool_size = 0;  // 0: preset default
  std::uint64_t seed = 1;
  long steps = 300000;  // environment steps summed over parallel envs
  double lr_rl = 3e-4;
  double lr_ed = 7e-4;
  std::optional<double> entropy_beta;  // unset: per-environment default
  int envs = 10;
  int update_freq = 10;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double max_grad_norm = 0.5;
  bool normalize_advantages = false;
  bool bootstrap_time_limit = true;  // bootstrap through episodes cut by the horizon
  int hidden = 128;
  int embedding = 128;
  int latent = 64;
  double temperature = 0.1;
  int eval_every_episodes = 100;  // training episodes between evaluations; 0 disables
  int eval_episodes = 30;
  long checkpoint_every = 100000;  // environment steps between checkpoints; 0: final only
  std::string plugins;  // "k:m=dir;..." network sub-policies replacing pool members
  std::string out;
  bool deterministic = true;

  double effective_entropy_beta() const {
    if (entropy_beta) return *entropy_beta;
    return env::find_preset(env).kind == env::EnvKind::Foraging ? 1e-3 : 1e-2;
  }

  /// Throws ConfigError naming the offending key.
  void validate() const {
    if (env.empty()) throw ConfigError("env: must not be empty");
    env::find_preset(env);
    if (variant.empty()) throw ConfigError("variant: must not be empty");
    models::parse_variant(variant);
    if (pool_mode != "paired" && pool_mode != "cartesian") {
      throw ConfigError("pool_mode: expected 'paired' or 'cartesian', got '" + pool_mode + "'");
    }
    auto require = [](bool ok, const std::string& key, const std::string& what) {
      if (!ok) throw ConfigError(key + ": " + what);
    };
    require(pool_size >= 0, "pool_size", "must be non-negative");
    require(steps > 0, "steps", "must be positive");
    require(lr_rl >= 0.0, "lr_rl", "must be non-negative");
    require(lr_ed >= 0.0, "lr_ed", "must be non-negative");
    require(!entropy_beta || *entropy_beta >= 0.0, "entropy_beta",
            "must be non-negative, got " + std::to_string(entropy_beta.value_or(0.0)));
    require(envs >= 1, "envs", "must be at least 1");
    require(update_freq >= 1, "update_freq", "must be at least 1");
    require(gamma > 0.0 && gamma < 1.0, "gamma", "must lie in (0, 1)");
    require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda", "must lie in [0, 1]");
    require(max_grad_norm > 0.0, "max_grad_norm", "must be positive");
    require(hidden >= 1, "hidden", "must be positive");
    require(embedding >= 1, "embedding", "must be positive");
    require(latent >= 1, "latent", "must be positive");
    require(temperature > 0.0, "temperature", "must be positive");
    require(eval_every_episodes >= 0, "eval_every_episodes", "must be non-negative");
    require(eval_episodes >= 1, "eval_episodes", "must be at least 1");
    require(checkpoint_every >= 0, "checkpoint_every", "must be non-negative");
  }
};

}  // namespace liam::rl
