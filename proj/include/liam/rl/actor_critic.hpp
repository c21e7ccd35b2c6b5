#pragma once

#include "liam/models/agent_model.hpp"

namespace liam::rl {

using models::ActionMatrix;
using nn::ParameterStore;
using nn::Rng;
using nn::Tape;
using nn::Tensor;
using nn::Var;

/// Shared-trunk actor-critic over [observation | embedding]. With a
/// recurrent core (the no-model baseline) the embedding is the core's
/// hidden state over (observation, previous action).
template <typename Scalar>
struct ActorCritic {
  nn::Mlp<Scalar> trunk;
  nn::Linear<Scalar> policy_head;
  nn::Linear<Scalar> value_head;
  nn::LstmCell<Scalar> core;
  bool recurrent = false;

  static ActorCritic create(ParameterStore<Scalar>& store, int obs_width, int embedding_width, int action_width,
                            const std::vector<int>& factors, int hidden, bool recurrent, Rng& rng) {
    ActorCritic ac;
    ac.recurrent = recurrent;
    int in = obs_width + embedding_width;
    if (recurrent) {
      ac.core = nn::LstmCell<Scalar>::create(store, "core.lstm", obs_width + action_width, hidden, rng);
      in = obs_width + hidden;
    }
    ac.trunk = nn::Mlp<Scalar>::create(store, "actor_critic.trunk", {in, hidden, hidden}, rng);
    ac.policy_head = nn::Linear<Scalar>::create(store, "actor_critic.policy", hidden, models::ModelDims::width(factors), rng);
    ac.value_head = nn::Linear<Scalar>::create(store, "actor_critic.value", hidden, 1, rng);
    return ac;
  }

  struct Output {
    Var<Scalar> logits;
    Var<Scalar> value;
  };

  Output operator()(Tape<Scalar>& tape, const Var<Scalar>& input) const {
    auto h = trunk(tape, input);
    return {policy_head(tape, h), value_head(tape, h)};
  }
};

/// Actor-critic loss: mean over rows of half the squared value error minus
/// advantage-weighted log-probability minus the entropy bonus. Advantages
/// and returns are constants.
template <typename Scalar>
Var<Scalar> a2c_loss(const Var<Scalar>& logits, const Var<Scalar>& values, const std::vector<int>& factors,
                     const ActionMatrix& actions, const Tensor<Scalar>& advantages, const Tensor<Scalar>& returns,
                     Scalar entropy_beta) {
  Tape<Scalar>& tape = *logits.tape();
  if (values.cols() != 1 || values.rows() != logits.rows() || advantages.rows() != logits.rows() ||
      returns.rows() != logits.rows()) {
    throw DimensionError("a2c_loss: logits " + nn::shape_string(logits.value()) + ", values " +
                         nn::shape_string(values.value()) + ", advantages " + nn::shape_string(advantages) +
                         " do not line up");
  }
  auto value_term = nn::scale(nn::mean(nn::square(nn::sub(values, tape.constant(returns)))), Scalar(0.5));
  auto log_prob = models::factored_log_prob(logits, factors, actions);
  auto policy_term = nn::scale(nn::mean(nn::mul(log_prob, tape.constant(advantages))), Scalar(-1));
  auto entropy = nn::mean(models::factored_entropy(logits, factors));
  return nn::sub(nn::add(value_term, policy_term), nn::scale(entropy, entropy_beta));
}

}  // namespace liam::rl
