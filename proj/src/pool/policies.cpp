#include "liam/pool/policies.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace liam::pool {

int move_toward(const Eigen::Vector2d& rel, double deadzone) {
  const double ax = std::abs(rel.x());
  const double ay = std::abs(rel.y());
  if (std::max(ax, ay) < deadzone || std::max(ax, ay) == 0.0) return env::kStay;
  if (ay >= ax) return rel.y() > 0 ? env::kNorth : env::kSouth;
  return rel.x() > 0 ? env::kEast : env::kWest;
}

// --- speaker-listener ---------------------------------------------------

std::vector<MessageMap> all_message_maps() {
  std::vector<MessageMap> maps;
  for (int a = 0; a < env::kNumMessages; ++a)
    for (int b = 0; b < env::kNumMessages; ++b)
      for (int c = 0; c < env::kNumMessages; ++c)
        if (a != b && b != c && a != c) maps.push_back({a, b, c});
  return maps;
}

namespace {

void require_injective(const MessageMap& m) {
  for (int i = 0; i < env::kNumColours; ++i) {
    if (m[static_cast<std::size_t>(i)] < 0 || m[static_cast<std::size_t>(i)] >= env::kNumMessages) {
      throw ConfigError("message map entry out of range");
    }
    for (int j = 0; j < i; ++j)
      if (m[static_cast<std::size_t>(i)] == m[static_cast<std::size_t>(j)]) {
        throw ConfigError("message map is not injective");
      }
  }
}

std::string map_string(const MessageMap& m) {
  std::ostringstream out;
  out << m[0] << ',' << m[1] << ',' << m[2];
  return out.str();
}

int argmax_or(const Eigen::VectorXd& v, int fallback) {
  if (v.size() == 0 || v.maxCoeff() <= 0.5) return fallback;
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

}  // namespace

MessageMapPolicy::MessageMapPolicy(MessageMap speak, MessageMap listen, double deadzone)
    : speak_(speak), listen_(listen), deadzone_(deadzone), layout_(env::speaker_listener_layout()) {
  require_injective(speak_);
  require_injective(listen_);
}

Action MessageMapPolicy::act(const Observation& obs, Rng&) const {
  layout_.require_matches(obs, "message-map policy");
  const int partner_colour = argmax_or(layout_.segment(obs, "other_colour"), 0);
  const int message = speak_[static_cast<std::size_t>(partner_colour)];
  const int received = argmax_or(layout_.segment(obs, "received_message"), -1);
  int move = env::kStay;
  for (int colour = 0; colour < env::kNumColours && received >= 0; ++colour) {
    if (listen_[static_cast<std::size_t>(colour)] != received) continue;
    const Eigen::Vector2d rel = layout_.segment(obs, "landmark_rel").segment(2 * colour, 2);
    move = move_toward(rel, deadzone_);
  }
  return {move, message};
}

std::string MessageMapPolicy::parameters() const {
  return "speak=" + map_string(speak_) + " listen=" + map_string(listen_);
}

// --- foraging -----------------------------------------------------------

std::string to_string(ForagingRule rule) {
  switch (rule) {
    case ForagingRule::ClosestFood: return "closest-food";
    case ForagingRule::ClosestToCentre: return "closest-to-centre";
    case ForagingRule::ClosestCompatible: return "closest-compatible";
    case ForagingRule::ClosestGroupCompatible: return "closest-group-compatible";
  }
  return "unknown";
}

ForagingView view_from_state(const env::ForagingState& state, int agent) {
  ForagingView v;
  v.self = state.agent_cell[static_cast<std::size_t>(agent)];
  v.self_level = state.agent_level[static_cast<std::size_t>(agent)];
  for (std::size_t i = 0; i < state.agent_cell.size(); ++i) {
    if (static_cast<int>(i) == agent) continue;
    v.others.push_back(state.agent_cell[i]);
    v.other_levels.push_back(state.agent_level[i]);
  }
  for (const auto& f : state.foods)
    if (f.present) v.foods.push_back(f);
  return v;
}

ForagingView view_from_observation(const Observation& obs, const env::ForagingConfig& config) {
  const auto layout = env::foraging_full_layout(config);
  layout.require_matches(obs, "foraging heuristic");
  const double span = std::max(1, config.grid_size - 1);
  const double max_food = config.max_agent_level * config.num_agents;
  auto cell = [&](double r, double c) {
    return env::Cell{static_cast<int>(std::lround(r * span)), static_cast<int>(std::lround(c * span))};
  };
  ForagingView v;
  const Eigen::VectorXd self = layout.segment(obs, "self");
  v.self = cell(self(0), self(1));
  v.self_level = static_cast<int>(std::lround(self(2) * config.max_agent_level));
  const Eigen::VectorXd pos = layout.segment(obs, "agent_pos");
  const Eigen::VectorXd lvl = layout.segment(obs, "agent_level");
  for (int i = 0; i < config.num_agents - 1; ++i) {
    v.others.push_back(cell(pos(2 * i), pos(2 * i + 1)));
    v.other_levels.push_back(static_cast<int>(std::lround(lvl(i) * config.max_agent_level)));
  }
  const Eigen::VectorXd present = layout.segment(obs, "food_present");
  const Eigen::VectorXd fpos = layout.segment(obs, "food_pos");
  const Eigen::VectorXd flvl = layout.segment(obs, "food_level");
  for (int f = 0; f < config.num_foods; ++f) {
    if (present(f) < 0.5) continue;
    v.foods.push_back({cell(fpos(2 * f), fpos(2 * f + 1)), static_cast<int>(std::lround(flvl(f) * max_food)), true});
  }
  return v;
}

namespace {

struct Player {
  double row;
  double col;
  int level;
};

std::vector<Player> visible_players(const ForagingView& view, int radius) {
  std::vector<Player> players{{double(view.self.row), double(view.self.col), view.self_level}};
  for (std::size_t i = 0; i < view.others.size(); ++i) {
    const auto& c = view.others[i];
    const int d = std::max(std::abs(c.row - view.self.row), std::abs(c.col - view.self.col));
    if (radius < 0 || d <= radius) players.push_back({double(c.row), double(c.col), view.other_levels[i]});
  }
  return players;
}

template <typename Distance, typename Accept>
std::optional<env::Cell> closest(const ForagingView& view, Distance distance, Accept accept) {
  std::optional<env::Cell> best;
  double best_d = 0.0;
  for (const auto& f : view.foods) {
    if (!accept(f)) continue;
    const double d = distance(f.cell);
    if (!best || d < best_d || (d == best_d && f.cell < *best)) {
      best = f.cell;
      best_d = d;
    }
  }
  return best;
}

}  // namespace

std::optional<env::Cell> lbf_heuristic_target(ForagingRule rule, const ForagingView& view, int radius) {
  auto from_self = [&](const env::Cell& c) { return double(env::manhattan(c, view.self)); };
  auto any = [](const env::Food&) { return true; };
  const auto players = visible_players(view, radius);
  double centre_row = 0.0, centre_col = 0.0;
  int level_sum = 0;
  for (const auto& p : players) {
    centre_row += p.row / double(players.size());
    centre_col += p.col / double(players.size());
    level_sum += p.level;
  }
  auto from_centre = [&](const env::Cell& c) { return std::abs(c.row - centre_row) + std::abs(c.col - centre_col); };

  std::optional<env::Cell> target;
  switch (rule) {
    case ForagingRule::ClosestFood: break;
    case ForagingRule::ClosestToCentre: target = closest(view, from_centre, any); break;
    case ForagingRule::ClosestCompatible:
      target = closest(view, from_self, [&](const env::Food& f) { return f.level <= view.self_level; });
      break;
    case ForagingRule::ClosestGroupCompatible:
      target = closest(view, from_centre, [&](const env::Food& f) { return f.level <= level_sum; });
      break;
  }
  if (!target) target = closest(view, from_self, any);
  return target;
}

int grid_step_toward(const env::Cell& from, const env::Cell& food) {
  const int dr = food.row - from.row;
  const int dc = food.col - from.col;
  if (std::abs(dr) + std::abs(dc) <= 1) return env::kLoad;
  if (std::abs(dr) >= std::abs(dc)) return dr < 0 ? env::kUp : env::kDown;
  return dc < 0 ? env::kLeft : env::kRight;
}

ForagingHeuristic::ForagingHeuristic(env::ForagingConfig config, ForagingRule rule, double epsilon, int radius)
    : config_(config), rule_(rule), epsilon_(epsilon), radius_(radius) {
  if (epsilon_ < 0.0 || epsilon_ > 1.0) throw ConfigError("foraging heuristic: epsilon must lie in [0, 1]");
}

Action ForagingHeuristic::act(const Observation& obs, Rng& rng) const {
  const ForagingView view = view_from_observation(obs, config_);
  if (epsilon_ > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon_) {
    return {std::uniform_int_distribution<int>(0, 4)(rng)};
  }
  const auto target = lbf_heuristic_target(rule_, view, radius_);
  if (!target) return {env::kLoad};
  return {grid_step_toward(view.self, *target)};
}

std::string ForagingHeuristic::parameters() const {
  std::ostringstream out;
  out << "rule=" << to_string(rule_) << " epsilon=" << epsilon_ << " radius=" << radius_;
  return out.str();
}

// --- predator-prey ------------------------------------------------------

std::string to_string(PursuitRule rule) {
  switch (rule) {
    case PursuitRule::Prey: return "prey";
    case PursuitRule::DesignatedPredator: return "designated-predator";
    case PursuitRule::ClosestAgent: return "closest-agent";
    case PursuitRule::ClosestPredator: return "closest-predator";
  }
  return "unknown";
}

namespace {

/// `rel[k]` is the position of candidate `ids[k]` relative to the chaser;
/// ids[0] is the prey (0), the rest are the other predators in ascending id.
int choose_target(PursuitRule rule, const std::vector<int>& ids, const std::vector<Eigen::Vector2d>& rel) {
  auto nearest = [&](std::size_t first) {
    std::size_t best = first;
    for (std::size_t k = first + 1; k < ids.size(); ++k)
      if (rel[k].norm() < rel[best].norm()) best = k;
    return ids[best];
  };
  switch (rule) {
    case PursuitRule::Prey: return ids[0];
    case PursuitRule::DesignatedPredator: return ids[1];
    case PursuitRule::ClosestAgent: return nearest(0);
    case PursuitRule::ClosestPredator: return nearest(1);
  }
  return ids[0];
}

}  // namespace

int pp_heuristic_target(PursuitRule rule, const env::PredatorPreyState& state, int predator) {
  if (predator < 1 || predator > env::kNumPredators) throw UsageError("pp heuristic: predator id out of range");
  std::vector<int> ids;
  std::vector<Eigen::Vector2d> rel;
  for (int a = 0; a <= env::kNumPredators; ++a) {
    if (a == predator) continue;
    ids.push_back(a);
    rel.push_back(state.position[static_cast<std::size_t>(a)] - state.position[static_cast<std::size_t>(predator)]);
  }
  return choose_target(rule, ids, rel);
}

PursuitHeuristic::PursuitHeuristic(PursuitRule rule) : rule_(rule), layout_(env::predator_layout()) {}

Action PursuitHeuristic::act(const Observation& obs, Rng&) const {
  layout_.require_matches(obs, "pursuit heuristic");
  // Candidate ids here are ordinal: 0 is the prey, 1.. the other predators.
  std::vector<int> ids{0};
  std::vector<Eigen::Vector2d> rel{layout_.segment(obs, "prey_rel")};
  const Eigen::VectorXd others = layout_.segment(obs, "predator_rel");
  for (int k = 0; k < env::kNumPredators - 1; ++k) {
    ids.push_back(k + 1);
    rel.emplace_back(others.segment(2 * k, 2));
  }
  const int target = choose_target(rule_, ids, rel);
  return {move_toward(rel[static_cast<std::size_t>(target)], 0.0)};
}

std::string PursuitHeuristic::parameters() const { return "rule=" + to_string(rule_); }

}  // namespace liam::pool
