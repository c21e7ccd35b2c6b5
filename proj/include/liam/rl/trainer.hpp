#pragma once

#include <functional>
#include <memory>

#include "liam/pool/pool.hpp"
#include "liam/rl/config.hpp"
#include "liam/rl/learner.hpp"

namespace liam::rl {

using Learner32 = Learner<float>;

/// Concatenated one-hot encoding of a joint action.
Eigen::VectorXf joint_one_hot(const env::EnvSpec& spec, const env::JointAction& actions, int first_agent);

/// Builds one batch row of encoder inputs from per-agent observations.
void fill_inputs(models::StepInputs<float>& in, Eigen::Index row, const std::vector<env::Observation>& obs,
                 const Eigen::VectorXf& prev_action, const Eigen::VectorXf& prev_modelled_action);

struct UpdateStats {
  double ed_loss = 0.0;  // NaN for the no-model variant
  double a2c_loss = 0.0;
  double ed_grad_norm = 0.0;
  double a2c_grad_norm = 0.0;
  long clamped = 0;
};

/// Synchronous A2C over E parallel environments. Every `update_freq` steps
/// the auxiliary model takes one step on its loss, then the actor-critic
/// takes one step on the A2C loss using the embeddings recorded during the
/// rollout. Stepping is sequential, so a seed fixes the whole run.
class Trainer {
 public:
  explicit Trainer(RunConfig config);
  ~Trainer();

  const RunConfig& config() const { return config_; }
  const env::EnvPreset& preset() const { return preset_; }
  const env::EnvSpec& spec() const;
  const pool::FixedPolicyPool& pool() const { return pool_; }
  Learner32& learner() { return *learner_; }
  const Learner32& learner() const { return *learner_; }
  Rng& rng() { return rng_; }

  long step() const { return step_; }
  void set_step(long step) { step_ = step; }
  long episodes() const { return episodes_; }
  void set_episodes(long episodes) { episodes_ = episodes; }

  /// Plug-in slot for externally supplied sub-policies.
  void replace_pool_member(int policy, int member, std::shared_ptr<const pool::AgentPolicy> replacement) {
    pool_.replace_member(policy, member, std::move(replacement));
  }

  /// Collects one segment and applies both updates.
  UpdateStats update();

  /// Trains until the step budget is spent. `on_episodes` fires each time
  /// another `every` training episodes have completed (and once at the end).
  void run(const std::function<void(Trainer&)>& on_episodes, int every);

  /// Mean auxiliary loss since the last call (NaN when none was computed).
  double take_mean_ed_loss();

  /// Controlled-agent returns of training episodes finished since the last call.
  std::vector<double> take_training_returns();

  /// Recorded segment of the last update, kept for inspection.
  const std::vector<models::TrainingStep<float>>& last_segment() const { return segment_; }
  const Learner32::State& last_segment_start() const { return segment_start_; }

 private:
  void reset_env(std::size_t e);
  void dump_batch(const std::string& why) const;

  RunConfig config_;
  env::EnvPreset preset_;
  pool::FixedPolicyPool pool_;
  Rng rng_;
  std::unique_ptr<Learner32> learner_;
  std::vector<std::unique_ptr<env::Environment>> envs_;
  std::vector<std::vector<env::Observation>> obs_;
  Eigen::MatrixXf prev_action_, prev_modelled_action_;
  std::vector<int> policy_id_;
  Learner32::State state_;
  long step_ = 0;
  long episodes_ = 0;
  double ed_loss_sum_ = 0.0;
  long ed_loss_count_ = 0;
  std::vector<double> running_return_;
  std::vector<double> finished_returns_;
  std::vector<models::TrainingStep<float>> segment_;
  Learner32::State segment_start_;
};

}  // namespace liam::rl
