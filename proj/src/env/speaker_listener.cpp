#include "liam/env/speaker_listener.hpp"

#include <random>

namespace liam::env {

namespace {

Eigen::Vector2d move_direction(int move) {
  switch (move) {
    case kEast: return {1.0, 0.0};
    case kWest: return {-1.0, 0.0};
    case kNorth: return {0.0, 1.0};
    case kSouth: return {0.0, -1.0};
    default: return {0.0, 0.0};
  }
}

}  // namespace

std::array<double, 2> dsl_reward(const SpeakerListenerState& s) {
  double total = 0.0;
  for (int i = 0; i < 2; ++i) {
    total += (s.position[i] - s.landmark[static_cast<std::size_t>(s.colour[i])]).norm();
  }
  const double r = -total / 2.0;
  return {r, r};
}

ObservationLayout speaker_listener_layout() {
  ObservationLayout layout;
  layout.add("self_velocity", 2)
      .add("landmark_rel", 2 * kNumLandmarks)
      .add("other_rel", 2)
      .add("received_message", kNumMessages)
      .add("other_colour", kNumColours);
  return layout;
}

SpeakerListenerEnv::SpeakerListenerEnv(SpeakerListenerConfig config) : config_(config) {
  if (config_.horizon <= 0) throw ConfigError("dsl: horizon must be positive");
  if (config_.dt <= 0.0 || config_.damping < 0.0 || config_.damping >= 1.0) {
    throw ConfigError("dsl: dt must be positive and damping in [0, 1)");
  }
  spec_.name = "dsl";
  spec_.num_agents = 2;
  spec_.horizon = config_.horizon;
  spec_.layouts = {speaker_listener_layout(), speaker_listener_layout()};
  spec_.action_spaces = {ActionSpace{{5, kNumMessages}}, ActionSpace{{5, kNumMessages}}};
}

std::vector<Observation> SpeakerListenerEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-config_.spawn_extent, config_.spawn_extent);
  std::uniform_int_distribution<int> colour(0, kNumColours - 1);
  for (int i = 0; i < 2; ++i) {
    state_.position[i] = {pos(rng), pos(rng)};
    state_.velocity[i].setZero();
    state_.last_message[i] = -1;
  }
  for (auto& l : state_.landmark) l = {pos(rng), pos(rng)};
  for (int i = 0; i < 2; ++i) state_.colour[i] = colour(rng);
  t_ = 0;
  done_ = false;
  return {render_observation(0), render_observation(1)};
}

StepResult SpeakerListenerEnv::step(const JointAction& actions) {
  if (done_) throw UsageError("dsl: step called on a finished episode; call reset first");
  validate_actions(actions);
  for (int i = 0; i < 2; ++i) {
    auto& v = state_.velocity[i];
    v = v * (1.0 - config_.damping) + move_direction(actions[i][0]) * config_.force * config_.dt;
    state_.position[i] += v * config_.dt;
    state_.last_message[i] = actions[i][1];
  }
  ++t_;
  done_ = t_ >= config_.horizon;
  StepResult out;
  const auto r = dsl_reward(state_);
  out.rewards = {r[0], r[1]};
  out.observations = {render_observation(0), render_observation(1)};
  out.done = done_;
  out.truncated = done_;
  return out;
}

Observation SpeakerListenerEnv::render_observation(int agent) const {
  static const ObservationLayout layout = speaker_listener_layout();
  const int other = 1 - agent;
  Observation obs = Observation::Zero(layout.size());
  const auto& self = state_.position[agent];
  obs.segment(layout.slice("self_velocity").offset, 2) = state_.velocity[agent];
  const int lm = layout.slice("landmark_rel").offset;
  for (int k = 0; k < kNumLandmarks; ++k) obs.segment(lm + 2 * k, 2) = state_.landmark[k] - self;
  obs.segment(layout.slice("other_rel").offset, 2) = state_.position[other] - self;
  if (state_.last_message[other] >= 0) {
    obs(layout.slice("received_message").offset + state_.last_message[other]) = 1.0;
  }
  obs(layout.slice("other_colour").offset + state_.colour[other]) = 1.0;
  return obs;
}

}  // namespace liam::env
