#pragma once

#include "liam/env/environment.hpp"

namespace liam::env {

// Level-based foraging on a square grid. Agents move in four directions or
// attempt to load an adjacent food; a load succeeds when the loaders' level
// sum reaches the food level.

struct ForagingConfig {
  int grid_size = 20;
  int num_agents = 2;
  int num_foods = 4;
  int max_agent_level = 3;
  int view_radius = 4;  // controlled agent only; modelled agents see the full state
  int horizon = 50;
};

enum GridAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kLoad = 4 };

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline int manhattan(const Cell& a, const Cell& b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }
inline bool adjacent(const Cell& a, const Cell& b) { return manhattan(a, b) == 1; }

struct Food {
  Cell cell;
  int level = 0;
  bool present = false;
};

struct ForagingState {
  std::vector<Cell> agent_cell;
  std::vector<int> agent_level;
  std::vector<Food> foods;
  double total_food_level = 0.0;
};

struct LoadEvent {
  int food = -1;
  std::vector<int> loaders;
};

/// Per-agent rewards for the given successful loads: each loader receives
/// its level share of the food level, normalised by the episode's total
/// food level.
std::vector<double> lbf_reward(const std::vector<LoadEvent>& loads, const ForagingState& state);

ObservationLayout foraging_controlled_layout(const ForagingConfig& config);
ObservationLayout foraging_full_layout(const ForagingConfig& config);

class ForagingEnv final : public Environment {
 public:
  explicit ForagingEnv(ForagingConfig config = {});

  const EnvSpec& spec() const override { return spec_; }
  std::vector<Observation> reset(std::uint64_t seed) override;
  StepResult step(const JointAction& actions) override;
  int time_step() const override { return t_; }
  bool done() const override { return done_; }

  const ForagingState& state() const { return state_; }
  /// Replaces the state (tests and replay). Starts a fresh episode clock.
  void set_state(const ForagingState& state);
  const ForagingConfig& config() const { return config_; }

  Observation render_observation(int agent) const;

  int max_food_level() const { return config_.max_agent_level * config_.num_agents; }

 private:
  ForagingConfig config_;
  EnvSpec spec_;
  ForagingState state_;
  int t_ = 0;
  bool done_ = true;
};

}  // namespace liam::env
