#pragma once

#include <random>
#include <vector>

#include "liam/env/types.hpp"
#include "liam/models/losses.hpp"
#include "liam/models/variant.hpp"
#include "liam/nn/layers.hpp"

namespace liam::models {

using nn::ParameterStore;
using nn::Rng;

struct ModelDims {
  int controlled_obs = 0;
  std::vector<int> controlled_factors;
  int modelled_obs = 0;
  std::vector<int> modelled_factors;
  int pool_size = 1;
  int hidden = 128;
  int embedding = 128;
  int latent = 64;

  static int width(const std::vector<int>& factors) {
    int w = 0;
    for (int f : factors) w += f;
    return w;
  }
  int controlled_action_width() const { return width(controlled_factors); }
  int modelled_action_width() const { return width(modelled_factors); }

  static ModelDims from_spec(const env::EnvSpec& spec, int pool_size) {
    ModelDims d;
    d.controlled_obs = spec.layouts[0].size();
    d.controlled_factors = spec.action_spaces[0].factors;
    d.modelled_obs = spec.modelled_observation_size();
    d.modelled_factors = spec.modelled_action_factors();
    d.pool_size = pool_size;
    return d;
  }
};

/// One environment step for a batch of E parallel episodes (one row each).
template <typename Scalar>
struct StepInputs {
  Tensor<Scalar> obs;                    // controlled observation
  Tensor<Scalar> prev_action;            // controlled previous action, one-hot; zero at episode start
  Tensor<Scalar> modelled_obs;           // all modelled agents, concatenated
  Tensor<Scalar> modelled_prev_action;   // one-hot; zero at episode start
};

/// Everything the auxiliary loss needs about one recorded step.
template <typename Scalar>
struct TrainingStep {
  StepInputs<Scalar> inputs;
  Tensor<Scalar> next_obs;           // controlled observation returned by the step
  ActionMatrix action;               // controlled
  ActionMatrix modelled_action;
  std::vector<int> policy_id;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> done;  // 1 where the episode ended at this step
};

/// Recurrent state carried between steps, one row per episode.
template <typename Scalar>
struct EncoderState {
  Tensor<Scalar> h, c;
  Tensor<Scalar> prior_mu, prior_logvar;  // variational prior for the next step
  Tensor<Scalar> aux_h, aux_c;            // modelled-side encoder (contrastive objective)

  /// Zeroes the rows of episodes that just ended.
  template <typename Mask>
  void reset_rows(const Mask& done) {
    for (Eigen::Index i = 0; i < done.size(); ++i) {
      if (done(i) == Scalar(0)) continue;
      for (Tensor<Scalar>* m : {&h, &c, &prior_mu, &prior_logvar, &aux_h, &aux_c}) {
        if (m->size() > 0) m->row(i).setZero();
      }
    }
  }
};

/// Decoder outputs for a batch of embeddings.
template <typename Scalar>
struct Prediction {
  Tensor<Scalar> obs;
  Tensor<Scalar> action_logits;
};

/// Auxiliary agent model for one variant: recurrent encoder over the
/// controlled agent's trajectory plus whatever head the objective needs.
/// Owns its own parameter store. The no-model variant owns nothing.
template <typename Scalar>
class AgentModel {
 public:
  using Mat = Tensor<Scalar>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  AgentModel(VariantSpec spec, ModelDims dims, Rng& rng, Scalar temperature = Scalar(0.1))
      : spec_(std::move(spec)), dims_(std::move(dims)), temperature_(temperature) {
    if (spec_.objective == Objective::None) return;
    if (!spec_.encoder_obs && !spec_.encoder_act) throw ConfigError("variant: encoder has no inputs");
    const int head_out = spec_.objective == Objective::Variational ? 2 * dims_.latent : dims_.embedding;
    cell_ = nn::LstmCell<Scalar>::create(store_, "encoder.lstm", encoder_input_width(), dims_.hidden, rng);
    head_ = nn::Linear<Scalar>::create(store_, "encoder.head", dims_.hidden, head_out, rng);
    switch (spec_.objective) {
      case Objective::Reconstruction:
      case Objective::Variational: {
        const int z = spec_.objective == Objective::Variational ? dims_.latent : dims_.embedding;
        const int obs_out = spec_.local_targets ? dims_.controlled_obs : dims_.modelled_obs;
        const int act_out = spec_.local_targets ? dims_.controlled_action_width() : dims_.modelled_action_width();
        trunk_ = nn::Mlp<Scalar>::create(store_, "decoder.trunk", {z, dims_.hidden, dims_.hidden}, rng);
        obs_head_ = nn::Linear<Scalar>::create(store_, "decoder.obs", dims_.hidden, obs_out, rng);
        action_head_ = nn::Linear<Scalar>::create(store_, "decoder.action", dims_.hidden, act_out, rng);
        break;
      }
      case Objective::Classification:
        classifier_ = nn::Linear<Scalar>::create(store_, "classifier", dims_.embedding, dims_.pool_size, rng);
        break;
      case Objective::Contrastive:
        aux_cell_ = nn::LstmCell<Scalar>::create(store_, "modelled_encoder.lstm",
                                                 dims_.modelled_obs + dims_.modelled_action_width(), dims_.hidden, rng);
        aux_head_ = nn::Linear<Scalar>::create(store_, "modelled_encoder.head", dims_.hidden, dims_.embedding, rng);
        break;
      case Objective::None: break;
    }
  }

  AgentModel(const AgentModel&) = delete;
  AgentModel& operator=(const AgentModel&) = delete;

  const VariantSpec& spec() const { return spec_; }
  const ModelDims& dims() const { return dims_; }
  ParameterStore<Scalar>& store() { return store_; }
  const ParameterStore<Scalar>& store() const { return store_; }
  bool trainable() const { return spec_.objective != Objective::None; }

  int encoder_input_width() const {
    int w = 0;
    if (spec_.full_information) {
      if (spec_.encoder_obs) w += dims_.modelled_obs;
      if (spec_.encoder_act) w += dims_.modelled_action_width();
    } else {
      if (spec_.encoder_obs) w += dims_.controlled_obs;
      if (spec_.encoder_act) w += dims_.controlled_action_width();
    }
    return w;
  }

  /// Width of the embedding handed to the policy.
  int embedding_width() const {
    switch (spec_.objective) {
      case Objective::None: return 0;
      case Objective::Classification: return dims_.pool_size;
      case Objective::Variational: return dims_.latent;
      default: return dims_.embedding;
    }
  }

  EncoderState<Scalar> initial_state(int rows) const {
    EncoderState<Scalar> s;
    if (!trainable()) return s;
    s.h = s.c = Mat::Zero(rows, dims_.hidden);
    if (spec_.objective == Objective::Variational) s.prior_mu = s.prior_logvar = Mat::Zero(rows, dims_.latent);
    if (spec_.objective == Objective::Contrastive) s.aux_h = s.aux_c = Mat::Zero(rows, dims_.hidden);
    return s;
  }

  /// Encoder input rows for this variant's wiring.
  Mat encoder_input(const StepInputs<Scalar>& in) const {
    const Mat& obs = spec_.full_information ? in.modelled_obs : in.obs;
    const Mat& act = spec_.full_information ? in.modelled_prev_action : in.prev_action;
    const Eigen::Index rows = spec_.encoder_obs ? obs.rows() : act.rows();
    Mat x(rows, encoder_input_width());
    Eigen::Index off = 0;
    if (spec_.encoder_obs) {
      require_width(obs, spec_.full_information ? dims_.modelled_obs : dims_.controlled_obs, "observation");
      x.middleCols(off, obs.cols()) = obs;
      off += obs.cols();
    }
    if (spec_.encoder_act) {
      require_width(act, spec_.full_information ? dims_.modelled_action_width() : dims_.controlled_action_width(),
                    "previous action");
      if (act.rows() != rows) throw DimensionError("encoder input: observation and action row counts differ");
      x.middleCols(off, act.cols()) = act;
    }
    return x;
  }

  /// Advances the state by one step without recording gradients and returns
  /// the policy embedding.
  Mat advance(EncoderState<Scalar>& state, const StepInputs<Scalar>& in) const {
    if (!trainable()) return Mat(in.obs.rows(), 0);
    nn::Tape<Scalar> tape(false);
    auto g = graph_step(tape, in, constants(tape, state));
    state.h = g.next.h.value();
    state.c = g.next.c.value();
    if (g.next.prior_mu.valid()) {
      state.prior_mu = g.next.prior_mu.value();
      state.prior_logvar = g.next.prior_logvar.value();
    }
    if (g.next.aux_h.valid()) {
      state.aux_h = g.next.aux_h.value();
      state.aux_c = g.next.aux_c.value();
    }
    if (spec_.objective == Objective::Classification) return nn::softmax(classifier_(tape, g.z)).value();
    if (spec_.objective == Objective::Variational) return g.mu.value();
    return g.z.value();
  }

  /// Auxiliary loss over a recorded segment, recomputing the encoder from
  /// `start` (treated as a constant) with episode resets applied after each
  /// step that ended an episode.
  Var<Scalar> training_loss(nn::Tape<Scalar>& tape, const std::vector<TrainingStep<Scalar>>& segment,
                            const EncoderState<Scalar>& start, Rng& rng, LossStats* stats = nullptr) const {
    if (!trainable()) throw UsageError("training_loss: variant '" + spec_.name + "' has no auxiliary model");
    if (segment.empty()) throw UsageError("training_loss: empty segment");
    GraphState state = constants(tape, start);
    std::vector<Var<Scalar>> zs, aux_zs, mus, logvars, kls;
    for (const auto& step : segment) {
      auto g = graph_step(tape, step.inputs, state, stats);
      if (spec_.objective == Objective::Variational) {
        kls.push_back(gaussian_kl(g.mu, g.logvar, state.prior_mu, state.prior_logvar));
        Mat noise(g.mu.rows(), g.mu.cols());
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = static_cast<Scalar>(normal(rng));
        zs.push_back(sample_latent(g.mu, g.logvar, noise));
      } else {
        zs.push_back(g.z);
      }
      if (g.aux_z.valid()) aux_zs.push_back(g.aux_z);
      state = g.next;
      if (step.done.any()) {
        const Vec keep = Vec::Ones(step.done.size()) - step.done;
        for (Var<Scalar>* v : {&state.h, &state.c, &state.prior_mu, &state.prior_logvar, &state.aux_h, &state.aux_c}) {
          if (v->valid()) *v = nn::scale_rows(*v, keep);
        }
      }
    }
    auto z = nn::concat_rows(zs);
    switch (spec_.objective) {
      case Objective::Classification: {
        std::vector<int> ids;
        for (const auto& step : segment) ids.insert(ids.end(), step.policy_id.begin(), step.policy_id.end());
        return cbam_loss(classifier_(tape, z), ids);
      }
      case Objective::Contrastive:
        return carl_infonce_loss(z, nn::concat_rows(aux_zs), static_cast<int>(segment.front().inputs.obs.rows()),
                                 static_cast<int>(segment.size()), temperature_);
      default: break;
    }
    auto hidden = trunk_(tape, z);
    auto obs_recon = obs_head_(tape, hidden);
    auto logits = action_head_(tape, hidden);
    Mat obs_target;
    ActionMatrix act_target;
    stack_targets(segment, obs_target, act_target);
    const auto& factors = spec_.local_targets ? dims_.controlled_factors : dims_.modelled_factors;
    auto recon = liam_loss(obs_recon, obs_target, logits, factors, act_target,
                           TargetMask{spec_.recon_obs || spec_.local_targets, spec_.recon_act || spec_.local_targets},
                           stats);
    if (spec_.objective == Objective::Variational) return vae_elbo_loss(recon, nn::concat_rows(kls));
    return recon;
  }

  /// Decoder outputs for policy embeddings (the posterior mean for the
  /// variational model).
  Prediction<Scalar> predict(const Mat& embedding) const {
    if (!trunk_.layers.size()) throw UsageError("predict: variant '" + spec_.name + "' has no decoder");
    nn::Tape<Scalar> tape(false);
    auto hidden = trunk_(tape, tape.constant(embedding));
    return {obs_head_(tape, hidden).value(), action_head_(tape, hidden).value()};
  }

 private:
  struct GraphState {
    Var<Scalar> h, c, prior_mu, prior_logvar, aux_h, aux_c;
  };
  struct GraphStep {
    Var<Scalar> z, mu, logvar, aux_z;
    GraphState next;
  };

  static void require_width(const Mat& m, int width, const char* what) {
    if (m.cols() != width) {
      throw DimensionError(std::string("encoder input: ") + what + " has " + std::to_string(m.cols()) +
                           " columns, expected " + std::to_string(width));
    }
  }

  static GraphState constants(nn::Tape<Scalar>& tape, const EncoderState<Scalar>& s) {
    GraphState g;
    g.h = tape.constant(s.h);
    g.c = tape.constant(s.c);
    if (s.prior_mu.size() > 0) {
      g.prior_mu = tape.constant(s.prior_mu);
      g.prior_logvar = tape.constant(s.prior_logvar);
    }
    if (s.aux_h.size() > 0) {
      g.aux_h = tape.constant(s.aux_h);
      g.aux_c = tape.constant(s.aux_c);
    }
    return g;
  }

  GraphStep graph_step(nn::Tape<Scalar>& tape, const StepInputs<Scalar>& in, const GraphState& state,
                       LossStats* stats = nullptr) const {
    GraphStep out;
    auto x = tape.constant(encoder_input(in));
    std::tie(out.next.h, out.next.c) = nn::lstm_step(tape, x, state.h, state.c, cell_);
    switch (spec_.objective) {
      case Objective::Variational: {
        auto stats_out = head_(tape, out.next.h);
        out.mu = nn::slice_cols(stats_out, 0, dims_.latent);
        out.logvar = clamp_log_variance(nn::slice_cols(stats_out, dims_.latent, dims_.latent), stats);
        out.next.prior_mu = out.mu;
        out.next.prior_logvar = out.logvar;
        break;
      }
      case Objective::Contrastive: {
        // Linear heads keep embeddings away from the zero vector for the cosine similarity.
        out.z = head_(tape, out.next.h);
        Mat aux_in(in.modelled_obs.rows(), in.modelled_obs.cols() + in.modelled_prev_action.cols());
        aux_in << in.modelled_obs, in.modelled_prev_action;
        std::tie(out.next.aux_h, out.next.aux_c) =
            nn::lstm_step(tape, tape.constant(aux_in), state.aux_h, state.aux_c, aux_cell_);
        out.aux_z = aux_head_(tape, out.next.aux_h);
        break;
      }
      default: out.z = head_(tape, out.next.h, nn::Activation::Relu); break;
    }
    return out;
  }

  void stack_targets(const std::vector<TrainingStep<Scalar>>& segment, Mat& obs, ActionMatrix& act) const {
    const Eigen::Index rows_per = segment.front().inputs.obs.rows();
    const Eigen::Index n = rows_per * static_cast<Eigen::Index>(segment.size());
    const bool local = spec_.local_targets;
    obs.resize(n, local ? dims_.controlled_obs : dims_.modelled_obs);
    act.resize(n, static_cast<Eigen::Index>(local ? dims_.controlled_factors.size() : dims_.modelled_factors.size()));
    for (std::size_t t = 0; t < segment.size(); ++t) {
      const auto& s = segment[t];
      const Mat& o = local ? s.next_obs : s.inputs.modelled_obs;
      const ActionMatrix& a = local ? s.action : s.modelled_action;
      if (o.rows() != rows_per || o.cols() != obs.cols() || a.rows() != rows_per || a.cols() != act.cols()) {
        throw DimensionError("training_loss: step " + std::to_string(t) + " targets have the wrong shape");
      }
      obs.middleRows(Eigen::Index(t) * rows_per, rows_per) = o;
      act.middleRows(Eigen::Index(t) * rows_per, rows_per) = a;
    }
  }

  VariantSpec spec_;
  ModelDims dims_;
  Scalar temperature_;
  ParameterStore<Scalar> store_;
  nn::LstmCell<Scalar> cell_;
  nn::Linear<Scalar> head_;
  nn::Mlp<Scalar> trunk_;
  nn::Linear<Scalar> obs_head_, action_head_, classifier_;
  nn::LstmCell<Scalar> aux_cell_;
  nn::Linear<Scalar> aux_head_;
};

}  // namespace liam::models
