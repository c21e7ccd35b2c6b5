#include "liam/env/foraging.hpp"

#include <algorithm>
#include <map>
#include <random>

namespace liam::env {

namespace {

Cell moved(const Cell& c, int action) {
  switch (action) {
    case kUp: return {c.row - 1, c.col};
    case kDown: return {c.row + 1, c.col};
    case kLeft: return {c.row, c.col - 1};
    case kRight: return {c.row, c.col + 1};
    default: return c;
  }
}

}  // namespace

std::vector<double> lbf_reward(const std::vector<LoadEvent>& loads, const ForagingState& state) {
  std::vector<double> rewards(state.agent_cell.size(), 0.0);
  for (const auto& load : loads) {
    const double food_level = state.foods[static_cast<std::size_t>(load.food)].level;
    double level_sum = 0.0;
    for (int a : load.loaders) level_sum += state.agent_level[static_cast<std::size_t>(a)];
    for (int a : load.loaders) {
      rewards[static_cast<std::size_t>(a)] +=
          state.agent_level[static_cast<std::size_t>(a)] / level_sum * food_level / state.total_food_level;
    }
  }
  return rewards;
}

ObservationLayout foraging_controlled_layout(const ForagingConfig& c) {
  const int others = c.num_agents - 1;
  ObservationLayout layout;
  layout.add("self", 3)
      .add("agent_visible", others)
      .add("agent_rel", 2 * others)
      .add("agent_level", others)
      .add("food_visible", c.num_foods)
      .add("food_rel", 2 * c.num_foods)
      .add("food_level", c.num_foods);
  return layout;
}

ObservationLayout foraging_full_layout(const ForagingConfig& c) {
  const int others = c.num_agents - 1;
  ObservationLayout layout;
  layout.add("self", 3)
      .add("agent_pos", 2 * others)
      .add("agent_level", others)
      .add("food_present", c.num_foods)
      .add("food_pos", 2 * c.num_foods)
      .add("food_level", c.num_foods);
  return layout;
}

ForagingEnv::ForagingEnv(ForagingConfig config) : config_(config) {
  if (config_.num_agents < 2) throw ConfigError("lbf: need at least two agents");
  if (config_.num_foods < 1) throw ConfigError("lbf: need at least one food");
  if (config_.grid_size < 2) throw ConfigError("lbf: grid_size must be at least 2");
  if (config_.max_agent_level < 1) throw ConfigError("lbf: max_agent_level must be at least 1");
  if (config_.horizon <= 0) throw ConfigError("lbf: horizon must be positive");
  if (config_.view_radius < 0) throw ConfigError("lbf: view_radius must be non-negative");
  if (config_.grid_size * config_.grid_size < config_.num_agents + 2 * config_.num_foods) {
    throw ConfigError("lbf: grid " + std::to_string(config_.grid_size) + "x" + std::to_string(config_.grid_size) +
                      " is too small for " + std::to_string(config_.num_agents) + " agents and " +
                      std::to_string(config_.num_foods) + " foods");
  }
  spec_.name = "lbf";
  spec_.num_agents = config_.num_agents;
  spec_.horizon = config_.horizon;
  spec_.layouts.push_back(foraging_controlled_layout(config_));
  for (int i = 1; i < config_.num_agents; ++i) spec_.layouts.push_back(foraging_full_layout(config_));
  spec_.action_spaces.assign(static_cast<std::size_t>(config_.num_agents), ActionSpace{{5}});
}

std::vector<Observation> ForagingEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = config_.grid_size;
  std::uniform_int_distribution<int> coord(0, n - 1);
  std::uniform_int_distribution<int> agent_level(1, config_.max_agent_level);

  ForagingState s;
  auto occupied = [&](const Cell& c) {
    for (const auto& f : s.foods)
      if (f.cell == c) return true;
    for (const auto& a : s.agent_cell)
      if (a == c) return true;
    return false;
  };
  constexpr int kMaxAttempts = 10000;
  for (int f = 0; f < config_.num_foods; ++f) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      Cell c{coord(rng), coord(rng)};
      bool ok = !occupied(c);
      for (const auto& other : s.foods) ok = ok && !adjacent(other.cell, c);
      if (ok) {
        s.foods.push_back({c, 0, true});
        placed = true;
      }
    }
    if (!placed) throw ConfigError("lbf: could not place foods on the grid; grid too small for entity count");
  }
  for (int a = 0; a < config_.num_agents; ++a) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      Cell c{coord(rng), coord(rng)};
      if (!occupied(c)) {
        s.agent_cell.push_back(c);
        placed = true;
      }
    }
    if (!placed) throw ConfigError("lbf: could not place agents on the grid; grid too small for entity count");
  }
  int level_sum = 0;
  for (int a = 0; a < config_.num_agents; ++a) {
    s.agent_level.push_back(agent_level(rng));
    level_sum += s.agent_level.back();
  }
  std::uniform_int_distribution<int> food_level(1, level_sum);
  s.total_food_level = 0.0;
  for (auto& f : s.foods) {
    f.level = food_level(rng);
    s.total_food_level += f.level;
  }
  state_ = std::move(s);
  t_ = 0;
  done_ = false;
  std::vector<Observation> obs;
  for (int a = 0; a < config_.num_agents; ++a) obs.push_back(render_observation(a));
  return obs;
}

void ForagingEnv::set_state(const ForagingState& state) {
  state_ = state;
  t_ = 0;
  done_ = false;
}

StepResult ForagingEnv::step(const JointAction& actions) {
  if (done_) throw UsageError("lbf: step called on a finished episode; call reset first");
  validate_actions(actions);
  const int n_agents = config_.num_agents;
  const int n = config_.grid_size;

  // Movement: moves into walls or food cells fail; agents targeting the same
  // cell all stay put.
  std::vector<Cell> target(static_cast<std::size_t>(n_agents));
  for (int a = 0; a < n_agents; ++a) {
    const Cell from = state_.agent_cell[static_cast<std::size_t>(a)];
    Cell to = moved(from, actions[static_cast<std::size_t>(a)][0]);
    bool valid = to.row >= 0 && to.row < n && to.col >= 0 && to.col < n;
    for (const auto& f : state_.foods) valid = valid && !(f.present && f.cell == to);
    target[static_cast<std::size_t>(a)] = valid ? to : from;
  }
  std::map<Cell, int> claims;
  for (const auto& c : target) ++claims[c];
  for (int a = 0; a < n_agents; ++a) {
    auto& t = target[static_cast<std::size_t>(a)];
    if (claims[t] > 1) t = state_.agent_cell[static_cast<std::size_t>(a)];
  }
  // A reverted agent may now collide with one that moved into its cell;
  // repeat until stable.
  for (bool changed = true; changed;) {
    changed = false;
    claims.clear();
    for (const auto& c : target) ++claims[c];
    for (int a = 0; a < n_agents; ++a) {
      auto& t = target[static_cast<std::size_t>(a)];
      const Cell home = state_.agent_cell[static_cast<std::size_t>(a)];
      if (claims[t] > 1 && !(t == home)) {
        t = home;
        changed = true;
      }
    }
  }
  state_.agent_cell = target;

  // Loading: each loader commits to its lexicographically lowest adjacent
  // food; agents are processed in index order.
  std::map<int, std::vector<int>> groups;
  for (int a = 0; a < n_agents; ++a) {
    if (actions[static_cast<std::size_t>(a)][0] != kLoad) continue;
    int best = -1;
    for (int f = 0; f < config_.num_foods; ++f) {
      const auto& food = state_.foods[static_cast<std::size_t>(f)];
      if (!food.present || !adjacent(food.cell, state_.agent_cell[static_cast<std::size_t>(a)])) continue;
      if (best < 0 || food.cell < state_.foods[static_cast<std::size_t>(best)].cell) best = f;
    }
    if (best >= 0) groups[best].push_back(a);
  }
  std::vector<LoadEvent> loads;
  for (const auto& [food, loaders] : groups) {
    int level_sum = 0;
    for (int a : loaders) level_sum += state_.agent_level[static_cast<std::size_t>(a)];
    if (level_sum >= state_.foods[static_cast<std::size_t>(food)].level) loads.push_back({food, loaders});
  }
  StepResult out;
  out.rewards = lbf_reward(loads, state_);
  for (const auto& load : loads) state_.foods[static_cast<std::size_t>(load.food)].present = false;
  out.info["foods_loaded"] = static_cast<double>(loads.size());

  ++t_;
  bool remaining = false;
  for (const auto& f : state_.foods) remaining = remaining || f.present;
  done_ = !remaining || t_ >= config_.horizon;
  out.done = done_;
  out.truncated = done_ && remaining;
  for (int a = 0; a < n_agents; ++a) out.observations.push_back(render_observation(a));
  return out;
}

Observation ForagingEnv::render_observation(int agent) const {
  const double span = std::max(1, config_.grid_size - 1);
  const double max_food = max_food_level();
  const auto& self = state_.agent_cell[static_cast<std::size_t>(agent)];
  const bool controlled = agent == 0;
  const ObservationLayout& layout = spec_.layouts[controlled ? 0 : 1];
  Observation obs = Observation::Zero(layout.size());
  obs.segment(layout.slice("self").offset, 3) << self.row / span, self.col / span,
      static_cast<double>(state_.agent_level[static_cast<std::size_t>(agent)]) / config_.max_agent_level;

  int slot = 0;
  for (int other = 0; other < config_.num_agents; ++other) {
    if (other == agent) continue;
    const auto& cell = state_.agent_cell[static_cast<std::size_t>(other)];
    const double level = static_cast<double>(state_.agent_level[static_cast<std::size_t>(other)]) / config_.max_agent_level;
    if (controlled) {
      const bool visible = std::max(std::abs(cell.row - self.row), std::abs(cell.col - self.col)) <= config_.view_radius;
      if (visible) {
        const double radius = std::max(1, config_.view_radius);
        obs(layout.slice("agent_visible").offset + slot) = 1.0;
        obs(layout.slice("agent_rel").offset + 2 * slot) = (cell.row - self.row) / radius;
        obs(layout.slice("agent_rel").offset + 2 * slot + 1) = (cell.col - self.col) / radius;
        obs(layout.slice("agent_level").offset + slot) = level;
      }
    } else {
      obs(layout.slice("agent_pos").offset + 2 * slot) = cell.row / span;
      obs(layout.slice("agent_pos").offset + 2 * slot + 1) = cell.col / span;
      obs(layout.slice("agent_level").offset + slot) = level;
    }
    ++slot;
  }
  for (int f = 0; f < config_.num_foods; ++f) {
    const auto& food = state_.foods[static_cast<std::size_t>(f)];
    if (!food.present) continue;
    if (controlled) {
      const bool visible =
          std::max(std::abs(food.cell.row - self.row), std::abs(food.cell.col - self.col)) <= config_.view_radius;
      if (!visible) continue;
      const double radius = std::max(1, config_.view_radius);
      obs(layout.slice("food_visible").offset + f) = 1.0;
      obs(layout.slice("food_rel").offset + 2 * f) = (food.cell.row - self.row) / radius;
      obs(layout.slice("food_rel").offset + 2 * f + 1) = (food.cell.col - self.col) / radius;
    } else {
      obs(layout.slice("food_present").offset + f) = 1.0;
      obs(layout.slice("food_pos").offset + 2 * f) = food.cell.row / span;
      obs(layout.slice("food_pos").offset + 2 * f + 1) = food.cell.col / span;
    }
    obs(layout.slice("food_level").offset + f) = food.level / max_food;
  }
  return obs;
}

}  // namespace liam::env
