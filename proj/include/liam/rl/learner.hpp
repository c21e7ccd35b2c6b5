#pragma once

#include <random>

#include "liam/rl/actor_critic.hpp"

namespace liam::rl {

/// Agent model plus actor-critic. The two live in separate parameter
/// stores so that each optimiser only ever touches its own parameters.
template <typename Scalar>
class Learner {
 public:
  using Mat = Tensor<Scalar>;

  struct State {
    models::EncoderState<Scalar> encoder;
    Mat core_h, core_c;  // recurrent policy core

    template <typename Mask>
    void reset_rows(const Mask& done) {
      encoder.reset_rows(done);
      for (Eigen::Index i = 0; i < done.size(); ++i) {
        if (done(i) == Scalar(0) || core_h.size() == 0) continue;
        core_h.row(i).setZero();
        core_c.row(i).setZero();
      }
    }
  };

  struct PolicyOutput {
    Mat logits;
    Mat values;
  };

  Learner(models::VariantSpec spec, models::ModelDims dims, Rng& rng, Scalar temperature = Scalar(0.1))
      : model_(spec, dims, rng, temperature) {
    const bool recurrent = spec.objective == models::Objective::None;
    ac_ = ActorCritic<Scalar>::create(agent_store_, dims.controlled_obs, model_.embedding_width(),
                                      dims.controlled_action_width(), dims.controlled_factors, dims.hidden, recurrent,
                                      rng);
  }

  Learner(const Learner&) = delete;
  Learner& operator=(const Learner&) = delete;

  models::AgentModel<Scalar>& model() { return model_; }
  const models::AgentModel<Scalar>& model() const { return model_; }
  ParameterStore<Scalar>& agent_store() { return agent_store_; }
  const ParameterStore<Scalar>& agent_store() const { return agent_store_; }
  const ActorCritic<Scalar>& actor_critic() const { return ac_; }
  const models::ModelDims& dims() const { return model_.dims(); }
  const models::VariantSpec& spec() const { return model_.spec(); }

  State initial_state(int rows) const {
    State s;
    s.encoder = model_.initial_state(rows);
    if (ac_.recurrent) s.core_h = s.core_c = Mat::Zero(rows, dims().hidden);
    return s;
  }

  /// Advances the recurrent state by one step and returns the embedding
  /// the policy conditions on (no gradients).
  Mat embed(State& state, const models::StepInputs<Scalar>& in) const {
    if (!ac_.recurrent) return model_.advance(state.encoder, in);
    Tape<Scalar> tape(false);
    auto [h, c] = nn::lstm_step(tape, tape.constant(core_input(in)), tape.constant(state.core_h),
                                tape.constant(state.core_c), ac_.core);
    state.core_h = h.value();
    state.core_c = c.value();
    return state.core_h;
  }

  static Mat policy_input(const Mat& obs, const Mat& embedding) {
    Mat x(obs.rows(), obs.cols() + embedding.cols());
    x << obs, embedding;
    return x;
  }

  PolicyOutput policy(const Mat& input) const {
    Tape<Scalar> tape(false);
    auto out = ac_(tape, tape.constant(input));
    return {out.logits.value(), out.value.value()};
  }

  /// Actor-critic outputs with gradients for a recorded segment. The
  /// embeddings recorded during the rollout are constants; the recurrent
  /// core, if any, is recomputed from `start` with episode resets.
  typename ActorCritic<Scalar>::Output policy_graph(Tape<Scalar>& tape,
                                                    const std::vector<models::TrainingStep<Scalar>>& segment,
                                                    const std::vector<Mat>& embeddings, const State& start) const {
    std::vector<Var<Scalar>> rows;
    if (!ac_.recurrent) {
      for (std::size_t t = 0; t < segment.size(); ++t) {
        rows.push_back(tape.constant(policy_input(segment[t].inputs.obs, embeddings[t])));
      }
    } else {
      auto h = tape.constant(start.core_h);
      auto c = tape.constant(start.core_c);
      for (const auto& step : segment) {
        std::tie(h, c) = nn::lstm_step(tape, tape.constant(core_input(step.inputs)), h, c, ac_.core);
        rows.push_back(nn::concat_cols<Scalar>({tape.constant(step.inputs.obs), h}));
        if (step.done.any()) {
          const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> keep =
              Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Ones(step.done.size()) - step.done;
          h = nn::scale_rows(h, keep);
          c = nn::scale_rows(c, keep);
        }
      }
    }
    return ac_(tape, nn::concat_rows(rows));
  }

  /// Samples one action per row, factor by factor.
  ActionMatrix sample_actions(const Mat& logits, Rng& rng) const {
    const auto& factors = dims().controlled_factors;
    ActionMatrix out(logits.rows(), static_cast<Eigen::Index>(factors.size()));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      int off = 0;
      for (std::size_t k = 0; k < factors.size(); ++k) {
        const auto row = logits.row(i).segment(off, factors[k]);
        const double m = static_cast<double>(row.maxCoeff());
        double z = 0.0;
        for (int j = 0; j < factors[k]; ++j) z += std::exp(static_cast<double>(row(j)) - m);
        const double draw = u(rng) * z;
        double acc = 0.0;
        int pick = factors[k] - 1;
        for (int j = 0; j < factors[k]; ++j) {
          acc += std::exp(static_cast<double>(row(j)) - m);
          if (draw < acc) {
            pick = j;
            break;
          }
        }
        out(i, Eigen::Index(k)) = pick;
        off += factors[k];
      }
    }
    return out;
  }

 private:
  Mat core_input(const models::StepInputs<Scalar>& in) const {
    Mat x(in.obs.rows(), in.obs.cols() + in.prev_action.cols());
    x << in.obs, in.prev_action;
    return x;
  }

  models::AgentModel<Scalar> model_;
  ParameterStore<Scalar> agent_store_;
  ActorCritic<Scalar> ac_;
};

}  // namespace liam::rl
