#include "liam/rl/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <utility>

#include "liam/nn/optim.hpp"
#include "liam/rl/gae.hpp"

namespace liam::rl {

Eigen::VectorXf joint_one_hot(const env::EnvSpec& spec, const env::JointAction& actions, int first_agent) {
  int width = 0;
  for (int i = first_agent; i < spec.num_agents; ++i) width += spec.action_spaces[static_cast<std::size_t>(i)].one_hot_width();
  Eigen::VectorXf out = Eigen::VectorXf::Zero(width);
  int off = 0;
  for (int i = first_agent; i < spec.num_agents; ++i) {
    const auto& space = spec.action_spaces[static_cast<std::size_t>(i)];
    out.segment(off, space.one_hot_width()) = space.one_hot(actions[static_cast<std::size_t>(i - first_agent)]).cast<float>();
    off += space.one_hot_width();
  }
  return out;
}

void fill_inputs(models::StepInputs<float>& in, Eigen::Index row, const std::vector<env::Observation>& obs,
                 const Eigen::VectorXf& prev_action, const Eigen::VectorXf& prev_modelled_action) {
  in.obs.row(row) = obs[0].cast<float>().transpose();
  Eigen::Index off = 0;
  for (std::size_t i = 1; i < obs.size(); ++i) {
    in.modelled_obs.row(row).segment(off, obs[i].size()) = obs[i].cast<float>().transpose();
    off += obs[i].size();
  }
  in.prev_action.row(row) = prev_action.transpose();
  in.modelled_prev_action.row(row) = prev_modelled_action.transpose();
}

Trainer::Trainer(RunConfig config)
    : config_(std::move(config)), preset_(env::find_preset(config_.env)), rng_(config_.seed) {
  config_.validate();
  pool_ = pool::build_pool(preset_, pool::parse_pool_mode(config_.pool_mode), config_.seed, config_.pool_size);
  for (int e = 0; e < config_.envs; ++e) envs_.push_back(env::make_environment(preset_));
  auto dims = models::ModelDims::from_spec(spec(), pool_.size());
  dims.hidden = config_.hidden;
  dims.embedding = config_.embedding;
  dims.latent = config_.latent;
  learner_ = std::make_unique<Learner32>(models::parse_variant(config_.variant), dims, rng_,
                                         static_cast<float>(config_.temperature));
  prev_action_ = Eigen::MatrixXf::Zero(config_.envs, dims.controlled_action_width());
  prev_modelled_action_ = Eigen::MatrixXf::Zero(config_.envs, dims.modelled_action_width());
  obs_.resize(envs_.size());
  policy_id_.assign(envs_.size(), 0);
  running_return_.assign(envs_.size(), 0.0);
  for (std::size_t e = 0; e < envs_.size(); ++e) reset_env(e);
  state_ = learner_->initial_state(config_.envs);
}

Trainer::~Trainer() = default;

const env::EnvSpec& Trainer::spec() const { return envs_.front()->spec(); }

void Trainer::reset_env(std::size_t e) {
  obs_[e] = envs_[e]->reset(rng_());
  policy_id_[e] = pool::sample_policy(pool_, rng_);
  prev_action_.row(static_cast<Eigen::Index>(e)).setZero();
  prev_modelled_action_.row(static_cast<Eigen::Index>(e)).setZero();
}

UpdateStats Trainer::update() {
  const int n = config_.envs;
  const int steps = config_.update_freq;
  const auto& dims = learner_->dims();
  UpdateStats stats;

  segment_.clear();
  segment_start_ = state_;
  std::vector<Tensor<float>> embeddings;
  std::vector<std::vector<double>> rewards(static_cast<std::size_t>(n)), values(static_cast<std::size_t>(n)),
      dones(static_cast<std::size_t>(n));

  auto current_inputs = [&] {
    models::StepInputs<float> in;
    in.obs.resize(n, dims.controlled_obs);
    in.modelled_obs.resize(n, dims.modelled_obs);
    in.prev_action.resize(n, dims.controlled_action_width());
    in.modelled_prev_action.resize(n, dims.modelled_action_width());
    for (int e = 0; e < n; ++e) {
      fill_inputs(in, e, obs_[static_cast<std::size_t>(e)], prev_action_.row(e).transpose(),
                  prev_modelled_action_.row(e).transpose());
    }
    return in;
  };

  std::vector<std::vector<double>> cut(static_cast<std::size_t>(n));
  for (int t = 0; t < steps; ++t) {
    bool any_cut = false;
    models::TrainingStep<float> rec;
    rec.inputs = current_inputs();
    Tensor<float> z = learner_->embed(state_, rec.inputs);
    auto out = learner_->policy(Learner32::policy_input(rec.inputs.obs, z));
    rec.action = learner_->sample_actions(out.logits, rng_);
    rec.modelled_action.resize(n, static_cast<Eigen::Index>(dims.modelled_factors.size()));
    rec.next_obs.resize(n, dims.controlled_obs);
    rec.done = Eigen::VectorXf::Zero(n);
    rec.policy_id = policy_id_;
    for (int e = 0; e < n; ++e) {
      const auto k = static_cast<std::size_t>(e);
      std::vector<env::Observation> modelled(obs_[k].begin() + 1, obs_[k].end());
      env::JointAction others = pool_[policy_id_[k]].act(modelled, rng_);
      env::Action mine(rec.action.row(e).data(), rec.action.row(e).data() + rec.action.cols());
      env::JointAction joint{mine};
      joint.insert(joint.end(), others.begin(), others.end());
      env::StepResult result;
      try {
        result = envs_[k]->step(joint);
      } catch (const std::exception& ex) {
        throw std::runtime_error("environment " + std::to_string(e) + ": " + ex.what());
      }
      Eigen::Index col = 0;
      for (const auto& a : others)
        for (int v : a) rec.modelled_action(e, col++) = v;
      rec.next_obs.row(e) = result.observations[0].cast<float>().transpose();
      rewards[k].push_back(result.rewards[0]);
      running_return_[k] += result.rewards[0];
      values[k].push_back(static_cast<double>(out.values(e, 0)));
      dones[k].push_back(result.done ? 1.0 : 0.0);
      obs_[k] = std::move(result.observations);
      prev_action_.row(e) = spec().action_spaces[0].one_hot(mine).cast<float>().transpose();
      prev_modelled_action_.row(e) = joint_one_hot(spec(), others, 1).transpose();
      cut[k].push_back(std::numeric_limits<double>::quiet_NaN());
      if (result.done) {
        rec.done(e) = 1.0f;
        any_cut = any_cut || (result.truncated && config_.bootstrap_time_limit);
        if (result.truncated && config_.bootstrap_time_limit) cut[k].back() = 0.0;
      }
    }
    if (any_cut) {
      // Value of the observation at which the time limit cut the episode.
      auto scratch = state_;
      auto in = current_inputs();
      auto final_value = learner_->policy(Learner32::policy_input(in.obs, learner_->embed(scratch, in))).values;
      for (int e = 0; e < n; ++e) {
        auto& c = cut[static_cast<std::size_t>(e)].back();
        if (!std::isnan(c)) c = static_cast<double>(final_value(e, 0));
      }
    }
    for (int e = 0; e < n; ++e) {
      if (rec.done(e) == 0.0f) continue;
      const auto k = static_cast<std::size_t>(e);
      ++episodes_;
      finished_returns_.push_back(running_return_[k]);
      running_return_[k] = 0.0;
      reset_env(k);
    }
    state_.reset_rows(rec.done);
    embeddings.push_back(std::move(z));
    segment_.push_back(std::move(rec));
    step_ += n;
  }

  // Bootstrap values from the state reached after the segment.
  {
    auto scratch = state_;
    auto in = current_inputs();
    auto z = learner_->embed(scratch, in);
    auto out = learner_->policy(Learner32::policy_input(in.obs, z));
    for (int e = 0; e < n; ++e) values[static_cast<std::size_t>(e)].push_back(static_cast<double>(out.values(e, 0)));
  }

  // Auxiliary model step.
  auto& model = learner_->model();
  stats.ed_loss = std::numeric_limits<double>::quiet_NaN();
  if (model.trainable()) {
    nn::Tape<float> tape;
    models::LossStats loss_stats;
    auto loss = model.training_loss(tape, segment_, segment_start_.encoder, rng_, &loss_stats);
    stats.ed_loss = static_cast<double>(loss.item());
    stats.clamped = loss_stats.clamped_log_probs + loss_stats.clamped_log_vars;
    if (!std::isfinite(stats.ed_loss)) dump_batch("auxiliary loss is not finite");
    tape.backward(loss);
    stats.ed_grad_norm = nn::clip_global_norm(model.store(), static_cast<float>(config_.max_grad_norm));
    nn::adam_update(model.store(), static_cast<float>(config_.lr_ed));
    ed_loss_sum_ += stats.ed_loss;
    ++ed_loss_count_;
  }

  // Actor-critic step.
  Eigen::MatrixXf adv(steps * n, 1), ret(steps * n, 1);
  for (int e = 0; e < n; ++e) {
    const auto k = static_cast<std::size_t>(e);
    auto est = gae_advantages(rewards[k], values[k], dones[k], config_.gamma, config_.gae_lambda, cut[k]);
    for (int t = 0; t < steps; ++t) {
      adv(t * n + e, 0) = static_cast<float>(est.advantages[static_cast<std::size_t>(t)]);
      ret(t * n + e, 0) = static_cast<float>(est.returns[static_cast<std::size_t>(t)]);
    }
  }
  if (config_.normalize_advantages && adv.size() > 1) {
    const float mean = adv.mean();
    const float sd = std::sqrt((adv.array() - mean).square().mean());
    adv = ((adv.array() - mean) / (sd + 1e-8f)).matrix();
  }
  models::ActionMatrix actions(steps * n, static_cast<Eigen::Index>(dims.controlled_factors.size()));
  for (int t = 0; t < steps; ++t) actions.middleRows(t * n, n) = segment_[static_cast<std::size_t>(t)].action;
  {
    nn::Tape<float> tape;
    auto out = learner_->policy_graph(tape, segment_, embeddings, segment_start_);
    auto loss = a2c_loss(out.logits, out.value, dims.controlled_factors, actions, Tensor<float>(adv), Tensor<float>(ret),
                         static_cast<float>(config_.effective_entropy_beta()));
    stats.a2c_loss = static_cast<double>(loss.item());
    if (!std::isfinite(stats.a2c_loss)) dump_batch("actor-critic loss is not finite");
    tape.backward(loss);
    stats.a2c_grad_norm = nn::clip_global_norm(learner_->agent_store(), static_cast<float>(config_.max_grad_norm));
    nn::adam_update(learner_->agent_store(), static_cast<float>(config_.lr_rl));
  }
  return stats;
}

void Trainer::run(const std::function<void(Trainer&)>& on_episodes, int every) {
  long next = every > 0 ? every : -1;
  while (step_ < config_.steps) {
    update();
    if (next > 0 && episodes_ >= next) {
      while (next <= episodes_) next += every;
      if (on_episodes) on_episodes(*this);
    }
  }
  if (on_episodes) on_episodes(*this);
}

double Trainer::take_mean_ed_loss() {
  const double mean = ed_loss_count_ > 0 ? ed_loss_sum_ / double(ed_loss_count_) : std::numeric_limits<double>::quiet_NaN();
  ed_loss_sum_ = 0.0;
  ed_loss_count_ = 0;
  return mean;
}

std::vector<double> Trainer::take_training_returns() { return std::exchange(finished_returns_, {}); }

void Trainer::dump_batch(const std::string& why) const {
  std::string where = "(no output directory configured)";
  if (!config_.out.empty()) {
    where = config_.out + "/nonfinite_batch.txt";
    std::ofstream out(where);
    out << "# " << why << " at step " << step_ << "\n";
    for (std::size_t t = 0; t < segment_.size(); ++t) {
      const auto& s = segment_[t];
      out << "[step " << t << "]\nobs\n" << s.inputs.obs << "\nmodelled_obs\n" << s.inputs.modelled_obs << "\naction\n"
          << s.action << "\nmodelled_action\n" << s.modelled_action << "\ndone\n" << s.done.transpose() << "\n";
    }
  }
  throw NumericError(why + " at step " + std::to_string(step_) + "; batch dump: " + where);
}

}  // namespace liam::rl
