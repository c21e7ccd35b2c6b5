#pragma once

#include <array>

#include "liam/env/environment.hpp"

namespace liam::env {

// Predator-prey on the unit square with circular obstacles. The controlled
// agent is the prey (index 0); the predators (1..3) are modelled.

inline constexpr int kNumPredators = 3;
inline constexpr int kNumObstacles = 2;

struct PredatorPreyConfig {
  int horizon = 50;
  double dt = 0.1;
  double damping = 0.25;
  double predator_force = 1.0;
  double prey_force = 1.3;
  double predator_radius = 0.075;
  double prey_radius = 0.05;
  double obstacle_radius = 0.2;
  double obstacle_extent = 0.8;
  double receptive_field = 1.0;
};

struct PredatorPreyState {
  // Index 0 is the prey.
  std::array<Eigen::Vector2d, kNumPredators + 1> position;
  std::array<Eigen::Vector2d, kNumPredators + 1> velocity;
  std::array<Eigen::Vector2d, kNumObstacles> obstacle;
};

struct PursuitReward {
  double predator = 0.0;
  double prey = 0.0;
};

/// Reward for a step given how many predators are touching the prey.
PursuitReward pp_reward(int capture_set_size);

ObservationLayout prey_layout();
ObservationLayout predator_layout();

class PredatorPreyEnv final : public Environment {
 public:
  explicit PredatorPreyEnv(PredatorPreyConfig config = {});

  const EnvSpec& spec() const override { return spec_; }
  std::vector<Observation> reset(std::uint64_t seed) override;
  StepResult step(const JointAction& actions) override;
  int time_step() const override { return t_; }
  bool done() const override { return done_; }

  const PredatorPreyState& state() const { return state_; }
  void set_state(const PredatorPreyState& state);
  const PredatorPreyConfig& config() const { return config_; }

  /// Number of predators currently in contact with the prey.
  int capture_set_size() const;

  Observation render_observation(int agent) const;

 private:
  double radius(int agent) const { return agent == 0 ? config_.prey_radius : config_.predator_radius; }

  PredatorPreyConfig config_;
  EnvSpec spec_;
  PredatorPreyState state_;
  int t_ = 0;
  bool done_ = true;
};

}  // namespace liam::env
