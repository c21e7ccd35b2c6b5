#include "liam/env/predator_prey.hpp"

#include <random>

namespace liam::env {

namespace {

constexpr int kAgents = kNumPredators + 1;

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

PursuitReward pp_reward(int capture_set_size) {
  if (capture_set_size <= 0) return {0.0, 0.0};
  if (capture_set_size == 1) return {-1.0, 1.0};
  return {1.0, -1.0};
}

ObservationLayout prey_layout() {
  ObservationLayout layout;
  layout.add("self_velocity", 2)
      .add("self_position", 2)
      .add("obstacle_visible", kNumObstacles)
      .add("obstacle_rel", 2 * kNumObstacles)
      .add("predator_visible", kNumPredators)
      .add("predator_rel", 2 * kNumPredators);
  return layout;
}

ObservationLayout predator_layout() {
  ObservationLayout layout;
  layout.add("self_velocity", 2)
      .add("self_position", 2)
      .add("obstacle_rel", 2 * kNumObstacles)
      .add("prey_rel", 2)
      .add("prey_velocity", 2)
      .add("predator_rel", 2 * (kNumPredators - 1));
  return layout;
}

PredatorPreyEnv::PredatorPreyEnv(PredatorPreyConfig config) : config_(config) {
  if (config_.horizon <= 0) throw ConfigError("pp: horizon must be positive");
  if (config_.dt <= 0.0 || config_.damping < 0.0 || config_.damping >= 1.0) {
    throw ConfigError("pp: dt must be positive and damping in [0, 1)");
  }
  if (config_.receptive_field <= 0.0) throw ConfigError("pp: receptive_field must be positive");
  spec_.name = "pp";
  spec_.num_agents = kAgents;
  spec_.horizon = config_.horizon;
  spec_.layouts.push_back(prey_layout());
  for (int i = 0; i < kNumPredators; ++i) spec_.layouts.push_back(predator_layout());
  spec_.action_spaces.assign(kAgents, ActionSpace{{5}});
}

std::vector<Observation> PredatorPreyEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-1.0, 1.0);
  std::uniform_real_distribution<double> obstacle(-config_.obstacle_extent, config_.obstacle_extent);
  for (auto& o : state_.obstacle) o = {obstacle(rng), obstacle(rng)};
  for (int i = 0; i < kAgents; ++i) {
    // Rejection-sample out of obstacles so nobody starts embedded.
    Eigen::Vector2d p;
    bool clear = false;
    for (int attempt = 0; attempt < 1000 && !clear; ++attempt) {
      p = {pos(rng), pos(rng)};
      clear = true;
      for (const auto& o : state_.obstacle) clear = clear && (p - o).norm() > config_.obstacle_radius + radius(i);
    }
    state_.position[static_cast<std::size_t>(i)] = p;
    state_.velocity[static_cast<std::size_t>(i)].setZero();
  }
  t_ = 0;
  done_ = false;
  std::vector<Observation> obs;
  for (int i = 0; i < kAgents; ++i) obs.push_back(render_observation(i));
  return obs;
}

void PredatorPreyEnv::set_state(const PredatorPreyState& state) {
  state_ = state;
  t_ = 0;
  done_ = false;
}

int PredatorPreyEnv::capture_set_size() const {
  int n = 0;
  for (int p = 1; p < kAgents; ++p) {
    const double d = (state_.position[static_cast<std::size_t>(p)] - state_.position[0]).norm();
    if (d <= config_.prey_radius + config_.predator_radius) ++n;
  }
  return n;
}

StepResult PredatorPreyEnv::step(const JointAction& actions) {
  if (done_) throw UsageError("pp: step called on a finished episode; call reset first");
  validate_actions(actions);
  for (int i = 0; i < kAgents; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double force = i == 0 ? config_.prey_force : config_.predator_force;
    auto& v = state_.velocity[k];
    auto& p = state_.position[k];
    v = v * (1.0 - config_.damping) + move_direction(actions[k][0]) * force * config_.dt;
    p += v * config_.dt;
    for (const auto& o : state_.obstacle) {
      const Eigen::Vector2d gap = p - o;
      const double min_dist = config_.obstacle_radius + radius(i);
      const double d = gap.norm();
      if (d < min_dist) {
        const Eigen::Vector2d normal = d > 1e-12 ? Eigen::Vector2d(gap / d) : Eigen::Vector2d(1.0, 0.0);
        p = o + normal * min_dist;
        const double inward = v.dot(normal);
        if (inward < 0.0) v -= inward * normal;
      }
    }
    for (int axis = 0; axis < 2; ++axis) {
      if (p(axis) > 1.0 || p(axis) < -1.0) {
        p(axis) = std::clamp(p(axis), -1.0, 1.0);
        v(axis) = 0.0;
      }
    }
  }
  const int captures = capture_set_size();
  const PursuitReward r = pp_reward(captures);
  StepResult out;
  out.rewards.assign(kAgents, r.predator);
  out.rewards[0] = r.prey;
  out.info["captures"] = static_cast<double>(captures);
  ++t_;
  done_ = t_ >= config_.horizon;
  out.done = done_;
  out.truncated = done_;
  for (int i = 0; i < kAgents; ++i) out.observations.push_back(render_observation(i));
  return out;
}

Observation PredatorPreyEnv::render_observation(int agent) const {
  const auto k = static_cast<std::size_t>(agent);
  const ObservationLayout& layout = spec_.layouts[k];
  Observation obs = Observation::Zero(layout.size());
  const Eigen::Vector2d& self = state_.position[k];
  obs.segment(layout.slice("self_velocity").offset, 2) = state_.velocity[k];
  obs.segment(layout.slice("self_position").offset, 2) = self;
  if (agent == 0) {
    for (int o = 0; o < kNumObstacles; ++o) {
      const Eigen::Vector2d rel = state_.obstacle[static_cast<std::size_t>(o)] - self;
      if (rel.norm() > config_.receptive_field) continue;
      obs(layout.slice("obstacle_visible").offset + o) = 1.0;
      obs.segment(layout.slice("obstacle_rel").offset + 2 * o, 2) = rel;
    }
    for (int p = 0; p < kNumPredators; ++p) {
      const Eigen::Vector2d rel = state_.position[static_cast<std::size_t>(p + 1)] - self;
      if (rel.norm() > config_.receptive_field) continue;
      obs(layout.slice("predator_visible").offset + p) = 1.0;
      obs.segment(layout.slice("predator_rel").offset + 2 * p, 2) = rel;
    }
    return obs;
  }
  for (int o = 0; o < kNumObstacles; ++o) {
    obs.segment(layout.slice("obstacle_rel").offset + 2 * o, 2) = state_.obstacle[static_cast<std::size_t>(o)] - self;
  }
  obs.segment(layout.slice("prey_rel").offset, 2) = state_.position[0] - self;
  obs.segment(layout.slice("prey_velocity").offset, 2) = state_.velocity[0];
  int slot = 0;
  for (int p = 1; p < kAgents; ++p) {
    if (p == agent) continue;
    obs.segment(layout.slice("predator_rel").offset + 2 * slot, 2) = state_.position[static_cast<std::size_t>(p)] - self;
    ++slot;
  }
  return obs;
}

}  // namespace liam::env
