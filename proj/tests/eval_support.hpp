#pragma once

#include <algorithm>
#include <memory>
#include <random>

#include "liam/eval/probe.hpp"

namespace liam::testing {

using eval::Learner32;
using nn::Rng;

// Two agents, +1 reward per step, fixed horizon. Observations are uniform
// noise drawn from the reset seed so scripted actions derived from them are
// uniformly distributed.
class StubEnv final : public env::Environment {
 public:
  explicit StubEnv(int horizon = 50) {
    spec_.name = "stub";
    spec_.num_agents = 2;
    spec_.horizon = horizon;
    env::ObservationLayout layout;
    layout.add("noise", 2);
    spec_.layouts = {layout, layout};
    spec_.action_spaces = {env::ActionSpace{{5}}, env::ActionSpace{{5}}};
  }
  const env::EnvSpec& spec() const override { return spec_; }
  std::vector<env::Observation> reset(std::uint64_t seed) override {
    rng_.seed(seed);
    t_ = 0;
    return draw();
  }
  env::StepResult step(const env::JointAction& actions) override {
    validate_actions(actions);
    env::StepResult r;
    ++t_;
    r.observations = draw();
    r.rewards = {1.0, 1.0};
    r.done = r.truncated = t_ >= spec_.horizon;
    return r;
  }
  int time_step() const override { return t_; }
  bool done() const override { return t_ >= spec_.horizon; }

 private:
  std::vector<env::Observation> draw() {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    env::Observation a(2), b(2);
    a << u(rng_), u(rng_);
    b << u(rng_), u(rng_);
    return {a, b};
  }
  env::EnvSpec spec_;
  Rng rng_;
  int t_ = 0;
};

// Deterministic scripted policy over 5 actions: bins the first observation entry.
class BinningPolicy final : public pool::AgentPolicy {
 public:
  env::Action act(const env::Observation& obs, Rng&) const override {
    return {std::min(4, static_cast<int>(obs(0) * 5.0))};
  }
  std::string kind() const override { return "binning"; }
  std::string parameters() const override { return ""; }
};

class ConstantPolicy final : public pool::AgentPolicy {
 public:
  explicit ConstantPolicy(int a) : a_(a) {}
  env::Action act(const env::Observation&, Rng&) const override { return {a_}; }
  std::string kind() const override { return "constant"; }
  std::string parameters() const override { return std::to_string(a_); }

 private:
  int a_;
};

inline pool::FixedPolicyPool single_pool(std::shared_ptr<const pool::AgentPolicy> member) {
  pool::FixedPolicy p;
  p.id = 0;
  p.kind = member->kind();
  p.members = {std::move(member)};
  return pool::FixedPolicyPool({p});
}

inline std::unique_ptr<Learner32> make_learner(const env::EnvSpec& spec, int pool_size, const std::string& variant,
                                               std::uint64_t seed, int width = 32) {
  Rng rng(seed);
  auto dims = models::ModelDims::from_spec(spec, pool_size);
  dims.hidden = dims.embedding = width;
  dims.latent = width / 2;
  return std::make_unique<Learner32>(models::parse_variant(variant), dims, rng);
}

}  // namespace liam::testing
