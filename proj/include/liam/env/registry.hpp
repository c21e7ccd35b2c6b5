#pragma once

#include <memory>
#include <string>
#include <vector>

#include "liam/env/environment.hpp"
#include "liam/env/foraging.hpp"
#include "liam/env/predator_prey.hpp"
#include "liam/env/speaker_listener.hpp"

namespace liam::env {

/// Named environment configuration. `default_pool_size` is the number of
/// fixed modelled-agent policies used with this preset.
struct EnvPreset {
  std::string name;
  EnvKind kind = EnvKind::SpeakerListener;
  int default_pool_size = 10;
  SpeakerListenerConfig speaker_listener;
  ForagingConfig foraging;
  PredatorPreyConfig predator_prey;
};

/// Known names: dsl, dsl-lite, lbf, lbf-small, pp.
EnvPreset find_preset(const std::string& name);
std::vector<std::string> preset_names();

std::unique_ptr<Environment> make_environment(const EnvPreset& preset);
inline std::unique_ptr<Environment> make_environment(const std::string& name) {
  return make_environment(find_preset(name));
}

}  // namespace liam::env
