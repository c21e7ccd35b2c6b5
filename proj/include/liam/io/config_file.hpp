#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "liam/rl/config.hpp"

namespace liam::io {

/// Reads a sectioned `key = value` file:
///
///   [run]       env variant pool_mode pool_size seed steps out deterministic
///               checkpoint_every
///   [training]  lr_rl lr_ed entropy_beta envs update_freq gamma gae_lambda
///               max_grad_norm normalize_advantages bootstrap_time_limit
///   [model]     hidden embedding latent temperature
///   [eval]      eval_every_episodes eval_episodes
///
/// Keys may also appear before any section. `env` and `variant` are
/// required; everything else falls back to the defaults. `entropy_beta =
/// auto` selects the per-environment default. Errors name the key.
rl::RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
rl::RunConfig load_config(const std::filesystem::path& path);

/// Sets one key from its textual value; used for files and CLI overrides.
void set_config_value(rl::RunConfig& config, const std::string& key, const std::string& value);

/// Writes every key so that parse_config reproduces `config` exactly.
void write_config(std::ostream& out, const rl::RunConfig& config);
std::string config_text(const rl::RunConfig& config);

}  // namespace liam::io
