#include "liam/env/registry.hpp"

namespace liam::env {

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::SpeakerListener: return "dsl";
    case EnvKind::Foraging: return "lbf";
    case EnvKind::PredatorPrey: return "pp";
  }
  return "unknown";
}

std::vector<std::string> preset_names() { return {"dsl", "dsl-lite", "lbf", "lbf-small", "pp"}; }

EnvPreset find_preset(const std::string& name) {
  EnvPreset p;
  p.name = name;
  if (name == "dsl") {
    p.kind = EnvKind::SpeakerListener;
  } else if (name == "dsl-lite") {
    p.kind = EnvKind::SpeakerListener;
    p.default_pool_size = 3;
  } else if (name == "lbf") {
    p.kind = EnvKind::Foraging;
  } else if (name == "lbf-small") {
    p.kind = EnvKind::Foraging;
    p.foraging.grid_size = 8;
    p.foraging.num_foods = 2;
  } else if (name == "pp") {
    p.kind = EnvKind::PredatorPrey;
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("env: unknown environment '" + name + "' (known: " + known + ")");
  }
  return p;
}

std::unique_ptr<Environment> make_environment(const EnvPreset& preset) {
  switch (preset.kind) {
    case EnvKind::SpeakerListener: return std::make_unique<SpeakerListenerEnv>(preset.speaker_listener);
    case EnvKind::Foraging: return std::make_unique<ForagingEnv>(preset.foraging);
    case EnvKind::PredatorPrey: return std::make_unique<PredatorPreyEnv>(preset.predator_prey);
  }
  throw ConfigError("env: unsupported environment kind");
}

}  // namespace liam::env
