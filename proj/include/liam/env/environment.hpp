#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "liam/env/types.hpp"

namespace liam::env {

/// Common stepping interface for the partially observable worlds.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;

  /// Samples an initial state deterministically from the seed.
  virtual std::vector<Observation> reset(std::uint64_t seed) = 0;

  /// Advances one step. Stepping a finished episode is a usage error.
  virtual StepResult step(const JointAction& actions) = 0;

  virtual int time_step() const = 0;
  virtual bool done() const = 0;

 protected:
  void validate_actions(const JointAction& actions) const {
    const EnvSpec& s = spec();
    if (static_cast<int>(actions.size()) != s.num_agents) {
      throw DimensionError(s.name + ": expected " + std::to_string(s.num_agents) + " actions, got " +
                           std::to_string(actions.size()));
    }
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (!s.action_spaces[i].contains(actions[i])) {
        throw DimensionError(s.name + ": action for agent " + std::to_string(i) + " is outside its action space");
      }
    }
  }
};

enum class EnvKind { SpeakerListener, Foraging, PredatorPrey };

std::string to_string(EnvKind kind);

}  // namespace liam::env
