#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "liam/errors.hpp"

namespace liam::env {

using Observation = Eigen::VectorXd;

/// Discrete action, one entry per action factor (DSL has two factors:
/// movement and message; the grid and pursuit worlds have one).
using Action = std::vector<int>;
using JointAction = std::vector<Action>;

struct Slice {
  std::string name;
  int offset = 0;
  int size = 0;
};

/// Named, contiguous slices of a flat observation vector. Layouts are part
/// of the public contract because the decoder reconstructs these vectors.
class ObservationLayout {
 public:
  ObservationLayout& add(const std::string& name, int size) {
    for (const auto& s : slices_) {
      if (s.name == name) throw UsageError("layout slice '" + name + "' declared twice");
    }
    slices_.push_back({name, size_, size});
    size_ += size;
    return *this;
  }

  int size() const { return size_; }
  const std::vector<Slice>& slices() const { return slices_; }

  bool has(const std::string& name) const {
    for (const auto& s : slices_) {
      if (s.name == name) return true;
    }
    return false;
  }

  const Slice& slice(const std::string& name) const {
    for (const auto& s : slices_) {
      if (s.name == name) return s;
    }
    throw UsageError("layout has no slice '" + name + "'");
  }

  auto segment(const Observation& obs, const std::string& name) const {
    const Slice& s = slice(name);
    return obs.segment(s.offset, s.size);
  }

  void require_matches(const Observation& obs, const std::string& who) const {
    if (obs.size() != size_) {
      throw DimensionError(who + ": observation has " + std::to_string(obs.size()) + " entries but layout expects " +
                           std::to_string(size_));
    }
  }

 private:
  std::vector<Slice> slices_;
  int size_ = 0;
};

struct ActionSpace {
  std::vector<int> factors;

  int one_hot_width() const {
    int w = 0;
    for (int f : factors) w += f;
    return w;
  }

  bool contains(const Action& a) const {
    if (a.size() != factors.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] < 0 || a[i] >= factors[i]) return false;
    }
    return true;
  }

  /// Concatenated per-factor one-hot encoding.
  Eigen::VectorXd one_hot(const Action& a) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(one_hot_width());
    int offset = 0;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      out(offset + a[i]) = 1.0;
      offset += factors[i];
    }
    return out;
  }
};

struct StepResult {
  std::vector<Observation> observations;
  std::vector<double> rewards;
  bool done = false;
  bool truncated = false;  // ended by the time limit rather than by the task
  std::map<std::string, double> info;
};

/// Static description of an environment. Agent 0 is the controlled agent;
/// agents 1..N-1 together form the modelled agent.
struct EnvSpec {
  std::string name;
  int num_agents = 0;
  int horizon = 0;
  std::vector<ObservationLayout> layouts;
  std::vector<ActionSpace> action_spaces;

  int modelled_count() const { return num_agents - 1; }

  int modelled_observation_size() const {
    int n = 0;
    for (int i = 1; i < num_agents; ++i) n += layouts[static_cast<std::size_t>(i)].size();
    return n;
  }

  /// Categorical widths of every modelled-agent action factor, agent-major.
  std::vector<int> modelled_action_factors() const {
    std::vector<int> out;
    for (int i = 1; i < num_agents; ++i) {
      const auto& f = action_spaces[static_cast<std::size_t>(i)].factors;
      out.insert(out.end(), f.begin(), f.end());
    }
    return out;
  }
};

/// Movement codes shared by the two continuous worlds.
enum Move : int { kStay = 0, kEast = 1, kWest = 2, kNorth = 3, kSouth = 4 };

}  // namespace liam::env
