#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>

#include "liam/env/foraging.hpp"
#include "liam/env/predator_prey.hpp"
#include "liam/env/speaker_listener.hpp"
#include "liam/nn/tensor.hpp"

namespace liam::pool {

using env::Action;
using env::Observation;
using nn::Rng;

/// One modelled agent's fixed behaviour. Acts on that agent's own
/// observation only; implementations are immutable.
class AgentPolicy {
 public:
  virtual ~AgentPolicy() = default;
  virtual Action act(const Observation& obs, Rng& rng) const = 0;
  virtual std::string kind() const = 0;
  /// Single-line `key=value ...` parameter summary for manifests.
  virtual std::string parameters() const = 0;
};

/// Discretises a relative target into one of the five movement codes:
/// stay inside the deadzone, otherwise step along the larger axis, with
/// ties going vertical.
int move_toward(const Eigen::Vector2d& rel, double deadzone);

// --- speaker-listener ---------------------------------------------------

/// Injective colour -> message assignment.
using MessageMap = std::array<int, env::kNumColours>;

/// All 60 injective maps from 3 colours into 5 messages, in lexicographic order.
std::vector<MessageMap> all_message_maps();

/// Speaks `speak[partner colour]` and steers toward the landmark whose colour
/// `listen` assigns to the received message. An absent or unknown message
/// means stay.
class MessageMapPolicy final : public AgentPolicy {
 public:
  MessageMapPolicy(MessageMap speak, MessageMap listen, double deadzone = 0.1);
  Action act(const Observation& obs, Rng& rng) const override;
  std::string kind() const override { return "message-map"; }
  std::string parameters() const override;
  const MessageMap& speak() const { return speak_; }
  const MessageMap& listen() const { return listen_; }

 private:
  MessageMap speak_;
  MessageMap listen_;
  double deadzone_;
  env::ObservationLayout layout_;
};

// --- foraging -----------------------------------------------------------

enum class ForagingRule { ClosestFood = 0, ClosestToCentre = 1, ClosestCompatible = 2, ClosestGroupCompatible = 3 };
std::string to_string(ForagingRule rule);

/// Decoded world as seen by one agent. Entity lists exclude the agent itself.
struct ForagingView {
  env::Cell self;
  int self_level = 0;
  std::vector<env::Cell> others;
  std::vector<int> other_levels;
  std::vector<env::Food> foods;  // only present foods
};

ForagingView view_from_state(const env::ForagingState& state, int agent);
/// Inverts the full-state observation rendering of a modelled agent.
ForagingView view_from_observation(const Observation& obs, const env::ForagingConfig& config);

/// Target food cell under a rule. Only players within `radius` (Chebyshev)
/// count as visible; a negative radius means everyone. Falls back to the
/// closest food when nothing satisfies the rule; equal distances resolve to
/// the lowest (row, col). Empty when no food remains.
std::optional<env::Cell> lbf_heuristic_target(ForagingRule rule, const ForagingView& view, int radius = -1);

/// Grid step toward a food: load when adjacent, otherwise reduce the larger
/// axis distance first, ties vertical.
int grid_step_toward(const env::Cell& from, const env::Cell& food);

class ForagingHeuristic final : public AgentPolicy {
 public:
  ForagingHeuristic(env::ForagingConfig config, ForagingRule rule, double epsilon = 0.0, int radius = -1);
  Action act(const Observation& obs, Rng& rng) const override;
  std::string kind() const override { return "lbf-heuristic"; }
  std::string parameters() const override;

 private:
  env::ForagingConfig config_;
  ForagingRule rule_;
  double epsilon_;
  int radius_;
};

// --- predator-prey ------------------------------------------------------

enum class PursuitRule { Prey = 0, DesignatedPredator = 1, ClosestAgent = 2, ClosestPredator = 3 };
std::string to_string(PursuitRule rule);

/// Agent id chased by `predator` (1..3). The designated predator is the
/// lowest-index other predator.
int pp_heuristic_target(PursuitRule rule, const env::PredatorPreyState& state, int predator);

class PursuitHeuristic final : public AgentPolicy {
 public:
  explicit PursuitHeuristic(PursuitRule rule);
  Action act(const Observation& obs, Rng& rng) const override;
  std::string kind() const override { return "pp-heuristic"; }
  std::string parameters() const override;
  PursuitRule rule() const { return rule_; }

 private:
  PursuitRule rule_;
  env::ObservationLayout layout_;
};

}  // namespace liam::pool
