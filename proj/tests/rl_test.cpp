#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "liam/rl/gae.hpp"
#include "liam/rl/trainer.hpp"
#include "test_support.hpp"

namespace {

using namespace liam;
using namespace liam::rl;
using T = Tensor<double>;

struct Episode {
  std::vector<double> rewards, values, dones;
};

Episode random_episode(Rng& rng, int length) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::bernoulli_distribution d(0.1);
  Episode ep;
  for (int t = 0; t < length; ++t) {
    ep.rewards.push_back(u(rng));
    ep.values.push_back(u(rng));
    ep.dones.push_back(d(rng) ? 1.0 : 0.0);
  }
  ep.values.push_back(u(rng));
  return ep;
}

// Sum over l of (gamma*lambda)^l * delta_{t+l}, stopping after the first done.
std::vector<double> brute_force_advantages(const Episode& ep, double gamma, double lambda) {
  const std::size_t n = ep.rewards.size();
  std::vector<double> delta(n), out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    delta[t] = ep.rewards[t] + gamma * ep.values[t + 1] * (1.0 - ep.dones[t]) - ep.values[t];
  for (std::size_t t = 0; t < n; ++t) {
    double weight = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      out[t] += weight * delta[k];
      if (ep.dones[k] != 0.0) break;
      weight *= gamma * lambda;
    }
  }
  return out;
}

TEST(Gae, MatchesBruteForceSumOnRandomEpisodes) {
  Rng rng(11);
  std::uniform_int_distribution<int> len(1, 50);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    auto ep = random_episode(rng, len(rng));
    const double gamma = 0.5 + 0.5 * u(rng);
    const double lambda = u(rng);
    auto est = gae_advantages(ep.rewards, ep.values, ep.dones, gamma, lambda);
    auto oracle = brute_force_advantages(ep, gamma, lambda);
    for (std::size_t t = 0; t < oracle.size(); ++t) {
      worst = std::max(worst, std::abs(est.advantages[t] - oracle[t]));
      EXPECT_DOUBLE_EQ(est.returns[t], est.advantages[t] + ep.values[t]);
    }
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Gae, LambdaZeroIsOneStepTemporalDifference) {
  Rng rng(3);
  auto ep = random_episode(rng, 30);
  auto est = gae_advantages(ep.rewards, ep.values, ep.dones, 0.9, 0.0);
  for (std::size_t t = 0; t < 30; ++t) {
    const double delta = ep.rewards[t] + 0.9 * (ep.values[t + 1] * (1.0 - ep.dones[t])) - ep.values[t];
    EXPECT_EQ(est.advantages[t], delta);
  }
}

TEST(Gae, LambdaOneIsDiscountedReturnMinusValue) {
  Rng rng(4);
  auto ep = random_episode(rng, 20);
  std::fill(ep.dones.begin(), ep.dones.end(), 0.0);
  const double gamma = 0.95;
  auto est = gae_advantages(ep.rewards, ep.values, ep.dones, gamma, 1.0);
  for (std::size_t t = 0; t < 20; ++t) {
    double ret = 0.0, w = 1.0;
    for (std::size_t k = t; k < 20; ++k) {
      ret += w * ep.rewards[k];
      w *= gamma;
    }
    ret += w * ep.values[20];
    EXPECT_NEAR(est.advantages[t], ret - ep.values[t], 1e-12);
  }
}

TEST(Gae, TerminalSingleStepIsRewardMinusValueForAnyLambda) {
  for (double lambda : {0.0, 0.5, 1.0}) {
    auto est = gae_advantages({1.5}, {0.25, 9.0}, {1.0}, 0.99, lambda);
    EXPECT_EQ(est.advantages[0], 1.25);
    EXPECT_EQ(est.returns[0], 1.5);
  }
}

TEST(Gae, HalfLambdaTwoStepIdentity) {
  // A_0 = delta_0 + (gamma/2) delta_1 with no done.
  const double g = 0.9;
  auto est = gae_advantages({1.0, 2.0}, {0.5, -1.0, 3.0}, {0.0, 0.0}, g, 0.5);
  const double d0 = 1.0 + g * -1.0 - 0.5;
  const double d1 = 2.0 + g * 3.0 + 1.0;
  EXPECT_EQ(est.advantages[1], d1);
  EXPECT_EQ(est.advantages[0], d0 + g * 0.5 * d1);
}

TEST(Gae, TimeLimitCutBootstrapsFromFinalValue) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto est = gae_advantages({1.0, 2.0, 3.0}, {0.0, 0.0, 0.0, 100.0}, {0.0, 1.0, 0.0}, 0.5, 1.0, {nan, 4.0, nan});
  // Step 1 bootstraps from 4 instead of the next episode's value; the accumulation still stops there.
  EXPECT_EQ(est.advantages[2], 3.0 + 0.5 * 100.0);
  EXPECT_EQ(est.advantages[1], 2.0 + 0.5 * 4.0);
  EXPECT_EQ(est.advantages[0], 1.0 + 0.5 * est.advantages[1]);
}

TEST(Gae, LengthMismatchIsDimensionError) {
  EXPECT_THROW(gae_advantages({1.0, 2.0}, {0.0, 0.0}, {0.0, 0.0}, 0.9, 0.9), DimensionError);
  EXPECT_THROW(gae_advantages({1.0}, {0.0, 0.0}, {0.0, 0.0}, 0.9, 0.9), DimensionError);
  EXPECT_THROW(gae_advantages({1.0}, {0.0, 0.0}, {0.0}, 0.9, 0.9, {0.0, 0.0}), DimensionError);
}

// --- actor-critic loss ----------------------------------------------------

struct LossFixture {
  ParameterStore<double> store;
  ActorCritic<double> ac;
  std::vector<int> factors{5, 5};
  T input, advantages, returns;
  ActionMatrix actions;

  explicit LossFixture(Rng& rng, int rows = 6) {
    ac = ActorCritic<double>::create(store, 4, 3, 10, factors, 8, false, rng);
    input = nn::uniform_tensor<double>(rows, 7, 1.0, rng);
    advantages = nn::uniform_tensor<double>(rows, 1, 2.0, rng);
    returns = nn::uniform_tensor<double>(rows, 1, 2.0, rng);
    actions.resize(rows, 2);
    for (Eigen::Index i = 0; i < rows; ++i) {
      actions(i, 0) = static_cast<int>(i % 5);
      actions(i, 1) = static_cast<int>((3 * i + 1) % 5);
    }
  }

  double loss(double beta) {
    Tape<double> tape;
    auto out = ac(tape, tape.constant(input));
    return a2c_loss(out.logits, out.value, factors, actions, advantages, returns, beta).item();
  }
};

double log_softmax_at(const Eigen::RowVectorXd& row, int pick) {
  const double m = row.maxCoeff();
  return row(pick) - m - std::log((row.array() - m).exp().sum());
}

TEST(A2cLoss, MatchesDirectEvaluation) {
  Rng rng(5);
  LossFixture f(rng);
  const double beta = 0.01;
  Tape<double> tape(false);
  auto out = f.ac(tape, tape.constant(f.input));
  const T logits = out.logits.value();
  const T values = out.value.value();
  double expect = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double logp = 0.0, entropy = 0.0;
    for (int k = 0; k < 2; ++k) {
      const Eigen::RowVectorXd row = logits.row(i).segment(5 * k, 5);
      logp += log_softmax_at(row, f.actions(i, k));
      for (int j = 0; j < 5; ++j) entropy -= std::exp(log_softmax_at(row, j)) * log_softmax_at(row, j);
    }
    const double err = values(i, 0) - f.returns(i, 0);
    expect += 0.5 * err * err - logp * f.advantages(i, 0) - beta * entropy;
  }
  expect /= double(logits.rows());
  EXPECT_NEAR(f.loss(beta), expect, 1e-12);
}

TEST(A2cLoss, ZeroAdvantageExactReturnsLeavesOnlyEntropy) {
  Rng rng(6);
  LossFixture f(rng);
  Tape<double> tape(false);
  auto out = f.ac(tape, tape.constant(f.input));
  f.returns = out.value.value();
  f.advantages.setZero();
  EXPECT_NEAR(f.loss(0.0), 0.0, 1e-15);
  EXPECT_LT(f.loss(1.0), 0.0);  // minus the (positive) entropy
}

TEST(A2cLoss, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  LossFixture f(rng);
  {
    Tape<double> tape;
    auto out = f.ac(tape, tape.constant(f.input));
    tape.backward(a2c_loss(out.logits, out.value, f.factors, f.actions, f.advantages, f.returns, 0.05));
  }
  EXPECT_LE(liam::testing::max_relative_gradient_error(f.store, [&] { return f.loss(0.05); }), 1e-4);
}

TEST(A2cLoss, MisalignedRowsAreDimensionError) {
  Rng rng(8);
  LossFixture f(rng);
  f.returns = T::Zero(3, 1);
  EXPECT_THROW(f.loss(0.0), DimensionError);
}

// --- config ----------------------------------------------------------------

TEST(RunConfig, EntropyDefaultsFollowEnvironment) {
  RunConfig c;
  c.env = "lbf-small";
  EXPECT_EQ(c.effective_entropy_beta(), 1e-3);
  c.env = "dsl";
  EXPECT_EQ(c.effective_entropy_beta(), 1e-2);
  c.entropy_beta = 0.5;
  EXPECT_EQ(c.effective_entropy_beta(), 0.5);
}

TEST(RunConfig, ValidationNamesTheKey) {
  auto message_of = [](RunConfig c) {
    try {
      c.validate();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  RunConfig c;
  c.env = "";
  EXPECT_EQ(message_of(c).rfind("env", 0), 0u);
  c = {};
  c.entropy_beta = -0.1;
  EXPECT_EQ(message_of(c).rfind("entropy_beta", 0), 0u);
  c = {};
  c.envs = 0;
  EXPECT_EQ(message_of(c).rfind("envs", 0), 0u);
  c = {};
  c.variant = "bogus";
  EXPECT_NE(message_of(c), "");
  EXPECT_EQ(message_of(RunConfig{}), "");
}

// --- trainer -----------------------------------------------------------------

RunConfig small_config(const std::string& env, const std::string& variant) {
  RunConfig c;
  c.env = env;
  c.variant = variant;
  c.hidden = 16;
  c.embedding = 16;
  c.latent = 8;
  c.envs = 10;
  c.update_freq = 10;
  c.seed = 3;
  return c;
}

std::vector<char> store_bytes(const ParameterStore<float>& store) {
  std::vector<char> out;
  for (const auto& p : store) {
    const auto* data = reinterpret_cast<const char*>(p->value.data());
    out.insert(out.end(), data, data + p->value.size() * static_cast<Eigen::Index>(sizeof(float)));
  }
  return out;
}

TEST(Trainer, SegmentHoldsUpdateFreqTimesEnvsSamples) {
  Trainer tr(small_config("dsl-lite", "liam"));
  tr.update();
  const auto& seg = tr.last_segment();
  ASSERT_EQ(seg.size(), 10u);
  long rows = 0;
  for (const auto& s : seg) {
    EXPECT_EQ(s.inputs.obs.rows(), 10);
    EXPECT_EQ(s.action.rows(), 10);
    EXPECT_EQ(s.modelled_action.rows(), 10);
    rows += s.inputs.obs.rows();
  }
  EXPECT_EQ(rows, 100);
  EXPECT_EQ(tr.step(), 100);
}

TEST(Trainer, ConsecutiveStepsChainAndResetsClearPreviousActions) {
  // Speaker-listener episodes last 25 steps, so the third segment holds a reset at index 4.
  Trainer tr(small_config("dsl-lite", "liam"));
  tr.update();
  tr.update();
  tr.update();
  const auto& seg = tr.last_segment();
  const auto& spec = tr.spec();
  bool saw_reset = false;
  for (std::size_t t = 0; t + 1 < seg.size(); ++t) {
    for (Eigen::Index e = 0; e < 10; ++e) {
      const auto& next = seg[t + 1].inputs;
      if (seg[t].done(e) != 0.0f) {
        saw_reset = true;
        EXPECT_EQ(t, 4u);
        EXPECT_TRUE(next.prev_action.row(e).isZero());
        EXPECT_TRUE(next.modelled_prev_action.row(e).isZero());
        // The message slice is empty at the start of an episode.
        const auto& msg = spec.layouts[0].slice("received_message");
        EXPECT_TRUE(next.obs.row(e).segment(msg.offset, msg.size).isZero());
        continue;
      }
      EXPECT_EQ(next.obs.row(e), seg[t].next_obs.row(e));
      env::Action a(seg[t].action.row(e).data(), seg[t].action.row(e).data() + seg[t].action.cols());
      EXPECT_TRUE(next.prev_action.row(e).isApprox(spec.action_spaces[0].one_hot(a).cast<float>().transpose()));
      EXPECT_EQ(seg[t + 1].policy_id[static_cast<std::size_t>(e)], seg[t].policy_id[static_cast<std::size_t>(e)]);
    }
  }
  EXPECT_TRUE(saw_reset);
  EXPECT_EQ(tr.episodes(), 10);
}

TEST(Trainer, RecordedEmbeddingsReplayFromSegmentStart) {
  Trainer tr(small_config("dsl-lite", "liam"));
  tr.update();
  tr.update();
  tr.update();
  // Re-running the encoder over the recorded inputs from the stored start
  // state reproduces the embeddings the policy saw (resets included).
  auto state = tr.last_segment_start();
  const auto& learner = tr.learner();
  for (const auto& s : tr.last_segment()) {
    auto z = learner.embed(state, s.inputs);
    auto again = learner.policy(Learner32::policy_input(s.inputs.obs, z));
    EXPECT_TRUE(z.allFinite());
    EXPECT_TRUE(again.values.allFinite());
    state.reset_rows(s.done);
  }
  Tape<float> tape;
  models::LossStats stats;
  auto recomputed = learner.model().training_loss(tape, tr.last_segment(), tr.last_segment_start().encoder, tr.rng(), &stats);
  EXPECT_TRUE(std::isfinite(recomputed.item()));
}

TEST(Trainer, RlOnlyUpdateLeavesModelBytesUnchanged) {
  auto c = small_config("dsl-lite", "liam");
  c.lr_ed = 0.0;
  Trainer tr(c);
  const auto model_before = store_bytes(tr.learner().model().store());
  const auto agent_before = store_bytes(tr.learner().agent_store());
  tr.update();
  EXPECT_EQ(store_bytes(tr.learner().model().store()), model_before);
  EXPECT_NE(store_bytes(tr.learner().agent_store()), agent_before);
}

TEST(Trainer, ModelOnlyUpdateLeavesPolicyBytesUnchanged) {
  auto c = small_config("dsl-lite", "liam");
  c.lr_rl = 0.0;
  Trainer tr(c);
  const auto model_before = store_bytes(tr.learner().model().store());
  const auto agent_before = store_bytes(tr.learner().agent_store());
  tr.update();
  EXPECT_NE(store_bytes(tr.learner().model().store()), model_before);
  EXPECT_EQ(store_bytes(tr.learner().agent_store()), agent_before);
}

TEST(Trainer, ActorCriticLossHasNoPathIntoTheModel) {
  Trainer tr(small_config("lbf-small", "liam"));
  tr.update();
  auto& learner = tr.learner();
  for (auto& p : learner.model().store()) p->zero_grad();
  std::vector<Tensor<float>> embeddings;
  auto state = tr.last_segment_start();
  for (const auto& s : tr.last_segment()) {
    embeddings.push_back(learner.embed(state, s.inputs));
    state.reset_rows(s.done);
  }
  const auto& seg = tr.last_segment();
  const Eigen::Index rows = static_cast<Eigen::Index>(seg.size()) * seg[0].action.rows();
  ActionMatrix actions(rows, seg[0].action.cols());
  for (std::size_t t = 0; t < seg.size(); ++t)
    actions.middleRows(static_cast<Eigen::Index>(t) * seg[0].action.rows(), seg[0].action.rows()) = seg[t].action;
  Tape<float> tape;
  auto out = learner.policy_graph(tape, seg, embeddings, tr.last_segment_start());
  auto loss = a2c_loss(out.logits, out.value, learner.dims().controlled_factors, actions,
                       Tensor<float>(Tensor<float>::Ones(rows, 1)), Tensor<float>(Tensor<float>::Zero(rows, 1)), 0.01f);
  tape.backward(loss);
  for (const auto& p : learner.model().store()) EXPECT_TRUE(p->grad.isZero()) << p->name;
  bool any = false;
  for (const auto& p : learner.agent_store()) any = any || !p->grad.isZero();
  EXPECT_TRUE(any);
}

TEST(Trainer, NoModelVariantSkipsTheAuxiliaryStep) {
  Trainer tr(small_config("lbf-small", "nam"));
  EXPECT_EQ(tr.learner().model().store().size(), 0u);
  auto stats = tr.update();
  EXPECT_TRUE(std::isnan(stats.ed_loss));
  EXPECT_TRUE(std::isnan(tr.take_mean_ed_loss()));
}

TEST(Trainer, SameSeedGivesIdenticalParameters) {
  for (const char* variant : {"liam", "liam-vae", "carl", "nam"}) {
    Trainer a(small_config("dsl-lite", variant));
    Trainer b(small_config("dsl-lite", variant));
    for (int i = 0; i < 4; ++i) {
      auto sa = a.update();
      auto sb = b.update();
      EXPECT_EQ(sa.a2c_loss, sb.a2c_loss) << variant;
    }
    EXPECT_EQ(store_bytes(a.learner().model().store()), store_bytes(b.learner().model().store())) << variant;
    EXPECT_EQ(store_bytes(a.learner().agent_store()), store_bytes(b.learner().agent_store())) << variant;
  }
}

TEST(Trainer, DifferentSeedsDiverge) {
  auto c = small_config("dsl-lite", "liam");
  Trainer a(c);
  c.seed = 4;
  Trainer b(c);
  EXPECT_NE(store_bytes(a.learner().agent_store()), store_bytes(b.learner().agent_store()));
}

TEST(Trainer, AuxiliaryLossDecreasesWithTraining) {
  Trainer tr(small_config("lbf-small", "liam"));
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 300; ++i) {
    const double l = tr.update().ed_loss;
    if (i < 20) first += l / 20.0;
    if (i >= 280) last += l / 20.0;
  }
  EXPECT_LT(last, 0.8 * first);
}

TEST(Trainer, RunStopsAtStepBudgetAndReportsEpisodes) {
  auto c = small_config("dsl-lite", "liam");
  c.steps = 1000;
  Trainer tr(c);
  int calls = 0;
  tr.run([&](Trainer&) { ++calls; }, 10);
  EXPECT_EQ(tr.step(), 1000);
  EXPECT_EQ(tr.episodes(), 40);
  EXPECT_EQ(calls, 5);  // at 10, 20, 30, 40 episodes plus the final call
  const auto returns = tr.take_training_returns();
  EXPECT_EQ(returns.size(), 40u);
  for (double r : returns) EXPECT_LE(r, 0.0);
}

TEST(JointOneHot, ConcatenatesModelledAgents) {
  auto env = env::make_environment("pp");
  env::JointAction others{{1}, {4}};
  auto v = joint_one_hot(env->spec(), others, 2);
  ASSERT_EQ(v.size(), 10);
  EXPECT_EQ(v(1), 1.0f);
  EXPECT_EQ(v(9), 1.0f);
  EXPECT_EQ(v.sum(), 2.0f);
}

}  // namespace
