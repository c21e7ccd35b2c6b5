#pragma once

#include <cmath>
#include <vector>

#include "liam/nn/ops.hpp"

namespace liam::models {

using nn::Tape;
using nn::Tensor;
using nn::Var;

/// Discrete actions, one row per sample and one column per action factor.
using ActionMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kLogFloor = -30.0;
inline constexpr double kLogVarLimit = 10.0;

/// Counters for values that hit a numerical guard.
struct LossStats {
  long clamped_log_probs = 0;
  long clamped_log_vars = 0;
};

/// Which reconstruction terms contribute.
struct TargetMask {
  bool obs = true;
  bool act = true;
};

/// Row-wise joint log-probability of factored categorical actions. `logits`
/// holds the factors side by side; each factor's log-prob is floored at
/// kLogFloor. Returns rows x 1.
template <typename Scalar>
Var<Scalar> factored_log_prob(const Var<Scalar>& logits, const std::vector<int>& factors, const ActionMatrix& actions,
                              LossStats* stats = nullptr) {
  int width = 0;
  for (int f : factors) width += f;
  if (logits.cols() != width || actions.cols() != static_cast<Eigen::Index>(factors.size()) ||
      actions.rows() != logits.rows()) {
    throw DimensionError("factored_log_prob: logits " + nn::shape_string(logits.value()) + " and actions " +
                         nn::shape_string(actions.rows(), actions.cols()) + " do not fit factors");
  }
  Var<Scalar> total;
  int offset = 0;
  for (std::size_t k = 0; k < factors.size(); ++k) {
    auto ls = nn::log_softmax(nn::slice_cols(logits, offset, factors[k]));
    std::vector<int> idx(static_cast<std::size_t>(actions.rows()));
    for (Eigen::Index i = 0; i < actions.rows(); ++i) idx[static_cast<std::size_t>(i)] = actions(i, Eigen::Index(k));
    auto lp = nn::pick(ls, idx);
    if (stats != nullptr) stats->clamped_log_probs += (lp.value().array() < Scalar(kLogFloor)).count();
    lp = nn::clamp(lp, Scalar(kLogFloor), Scalar(0));
    total = total.valid() ? nn::add(total, lp) : lp;
    offset += factors[k];
  }
  return total;
}

/// Row-wise entropy of factored categorical actions, summed over factors.
template <typename Scalar>
Var<Scalar> factored_entropy(const Var<Scalar>& logits, const std::vector<int>& factors) {
  Var<Scalar> total;
  int offset = 0;
  for (int f : factors) {
    auto slice = nn::slice_cols(logits, offset, f);
    auto h = nn::scale(nn::row_sum(nn::mul(nn::softmax(slice), nn::log_softmax(slice))), Scalar(-1));
    total = total.valid() ? nn::add(total, h) : h;
    offset += f;
  }
  return total;
}

/// Reconstruction loss: mean over rows of the summed squared observation
/// error minus the joint action log-probability.
template <typename Scalar>
Var<Scalar> liam_loss(const Var<Scalar>& obs_recon, const Tensor<Scalar>& obs_target, const Var<Scalar>& action_logits,
                      const std::vector<int>& factors, const ActionMatrix& actions, TargetMask mask = {},
                      LossStats* stats = nullptr) {
  if (!mask.obs && !mask.act) throw UsageError("liam_loss: both reconstruction terms are masked");
  Tape<Scalar>& tape = *(mask.obs ? obs_recon.tape() : action_logits.tape());
  Var<Scalar> loss;
  if (mask.obs) {
    if (obs_recon.rows() != obs_target.rows() || obs_recon.cols() != obs_target.cols()) {
      throw DimensionError("liam_loss: reconstruction " + nn::shape_string(obs_recon.value()) + " vs target " +
                           nn::shape_string(obs_target));
    }
    auto err = nn::sub(obs_recon, tape.constant(obs_target));
    loss = nn::scale(nn::sum(nn::square(err)), Scalar(1) / static_cast<Scalar>(obs_target.rows()));
  }
  if (mask.act) {
    auto lp = factored_log_prob(action_logits, factors, actions, stats);
    auto term = nn::scale(nn::mean(lp), Scalar(-1));
    loss = loss.valid() ? nn::add(loss, term) : term;
  }
  return loss;
}

/// Mean cross-entropy of the true policy identity under a K-way classifier.
template <typename Scalar>
Var<Scalar> cbam_loss(const Var<Scalar>& logits, const std::vector<int>& ids) {
  for (int k : ids) {
    if (k < 0 || k >= logits.cols()) {
      throw UsageError("cbam_loss: policy id " + std::to_string(k) + " outside classifier width " +
                       std::to_string(logits.cols()));
    }
  }
  return nn::scale(nn::mean(nn::pick(nn::log_softmax(logits), ids)), Scalar(-1));
}

/// Contrastive loss between two embedding sets of M episodes over H steps.
/// Rows are ordered step-major (row t*M + m). At each step the matching
/// episode must be picked among M candidates by cosine similarity over
/// `temperature`; the cross-entropy is summed over steps and averaged over
/// episodes.
template <typename Scalar>
Var<Scalar> carl_infonce_loss(const Var<Scalar>& z1, const Var<Scalar>& z2, int episodes, int steps,
                              Scalar temperature) {
  if (episodes < 1 || steps < 1) throw UsageError("carl_infonce_loss: need at least one episode and one step");
  if (z1.rows() != Eigen::Index(episodes) * steps || z2.rows() != z1.rows() || z1.cols() != z2.cols()) {
    throw DimensionError("carl_infonce_loss: embeddings " + nn::shape_string(z1.value()) + " and " +
                         nn::shape_string(z2.value()) + " do not hold " + std::to_string(episodes) + " x " +
                         std::to_string(steps) + " rows");
  }
  auto n1 = nn::row_normalize(z1);
  auto n2 = nn::row_normalize(z2);
  std::vector<int> diagonal(static_cast<std::size_t>(episodes));
  for (int m = 0; m < episodes; ++m) diagonal[static_cast<std::size_t>(m)] = m;
  Var<Scalar> total;
  for (int t = 0; t < steps; ++t) {
    auto a = nn::slice_rows(n1, Eigen::Index(t) * episodes, episodes);
    auto b = nn::slice_rows(n2, Eigen::Index(t) * episodes, episodes);
    auto sim = nn::scale(nn::matmul(a, nn::transpose(b)), Scalar(1) / temperature);
    auto term = nn::sum(nn::pick(nn::log_softmax(sim), diagonal));
    total = total.valid() ? nn::add(total, term) : term;
  }
  return nn::scale(total, Scalar(-1) / static_cast<Scalar>(episodes));
}

/// Row-wise KL(N(mu_q, exp(lv_q)) || N(mu_p, exp(lv_p))) for diagonal
/// Gaussians, summed over dimensions. Returns rows x 1.
template <typename Scalar>
Var<Scalar> gaussian_kl(const Var<Scalar>& mu_q, const Var<Scalar>& logvar_q, const Var<Scalar>& mu_p,
                        const Var<Scalar>& logvar_p) {
  auto var_ratio = nn::exp(nn::sub(logvar_q, logvar_p));
  auto mean_term = nn::div(nn::square(nn::sub(mu_q, mu_p)), nn::exp(logvar_p));
  auto inner = nn::add_scalar(nn::add(nn::sub(nn::add(var_ratio, mean_term), logvar_q), logvar_p), Scalar(-1));
  return nn::scale(nn::row_sum(inner), Scalar(0.5));
}

/// Guards log-variances into [-kLogVarLimit, kLogVarLimit].
template <typename Scalar>
Var<Scalar> clamp_log_variance(const Var<Scalar>& logvar, LossStats* stats = nullptr) {
  if (stats != nullptr) {
    stats->clamped_log_vars += (logvar.value().array().abs() > Scalar(kLogVarLimit)).count();
  }
  return nn::clamp(logvar, Scalar(-kLogVarLimit), Scalar(kLogVarLimit));
}

/// Reparameterised sample mu + exp(logvar / 2) * noise.
template <typename Scalar>
Var<Scalar> sample_latent(const Var<Scalar>& mu, const Var<Scalar>& logvar, const Tensor<Scalar>& noise) {
  auto sigma = nn::exp(nn::scale(logvar, Scalar(0.5)));
  return nn::add(mu, nn::mul(sigma, mu.tape()->constant(noise)));
}

/// Negative evidence lower bound: the reconstruction loss on sampled latents
/// plus the per-step KL to the prior, averaged over steps.
template <typename Scalar>
Var<Scalar> vae_elbo_loss(const Var<Scalar>& reconstruction, const Var<Scalar>& kl_rows) {
  return nn::add(reconstruction, nn::mean(kl_rows));
}

/// Reconstruction of the controlled agent's own next observation and action.
template <typename Scalar>
Var<Scalar> local_recon_loss(const Var<Scalar>& next_obs_recon, const Tensor<Scalar>& next_obs,
                             const Var<Scalar>& own_action_logits, const std::vector<int>& factors,
                             const ActionMatrix& own_actions, LossStats* stats = nullptr) {
  return liam_loss(next_obs_recon, next_obs, own_action_logits, factors, own_actions, TargetMask{}, stats);
}

}  // namespace liam::models
