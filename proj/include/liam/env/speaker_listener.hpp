#pragma once

#include <array>

#include "liam/env/environment.hpp"

namespace liam::env {

// Double speaker-listener: two agents, three coloured landmarks. Each agent
// must reach the landmark matching its own colour, which only the other
// agent can see. Actions are (movement, message) pairs.

inline constexpr int kNumColours = 3;
inline constexpr int kNumMessages = 5;
inline constexpr int kNumLandmarks = 3;

struct SpeakerListenerConfig {
  int horizon = 25;
  double dt = 0.1;
  double damping = 0.25;
  double force = 1.0;
  double spawn_extent = 1.0;
};

struct SpeakerListenerState {
  std::array<Eigen::Vector2d, 2> position;
  std::array<Eigen::Vector2d, 2> velocity;
  std::array<Eigen::Vector2d, kNumLandmarks> landmark;  // landmark k has colour k
  std::array<int, 2> colour{};
  std::array<int, 2> last_message{-1, -1};              // -1 before the first step
};

/// Shared reward: minus the mean distance of each agent to its own landmark.
std::array<double, 2> dsl_reward(const SpeakerListenerState& state);

/// Observation layout of either agent (the two layouts are identical).
ObservationLayout speaker_listener_layout();

class SpeakerListenerEnv final : public Environment {
 public:
  explicit SpeakerListenerEnv(SpeakerListenerConfig config = {});

  const EnvSpec& spec() const override { return spec_; }
  std::vector<Observation> reset(std::uint64_t seed) override;
  StepResult step(const JointAction& actions) override;
  int time_step() const override { return t_; }
  bool done() const override { return done_; }

  const SpeakerListenerState& state() const { return state_; }
  void set_state(const SpeakerListenerState& state) { state_ = state; }
  const SpeakerListenerConfig& config() const { return config_; }

  Observation render_observation(int agent) const;

 private:
  SpeakerListenerConfig config_;
  EnvSpec spec_;
  SpeakerListenerState state_;
  int t_ = 0;
  bool done_ = true;
};

}  // namespace liam::env
