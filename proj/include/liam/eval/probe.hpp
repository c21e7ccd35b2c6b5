#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "liam/pool/pool.hpp"
#include "liam/rl/learner.hpp"

namespace liam::eval {

using Learner32 = rl::Learner<float>;
using nn::Rng;

struct StepRecord {
  env::Observation obs;                      // controlled agent
  std::vector<env::Observation> modelled_obs;
  Eigen::RowVectorXf embedding;
  env::Action action;
  env::JointAction modelled_action;
  double reward = 0.0;
  std::vector<double> rewards;  // every agent
  bool done = false;
};

struct EpisodeRecord {
  int policy_id = 0;
  std::uint64_t reset_seed = 0;
  std::vector<StepRecord> steps;

  double episode_return() const;
};

/// Plays one episode with stochastic action selection.
EpisodeRecord run_episode(const Learner32& learner, env::Environment& env, const pool::FixedPolicy& policy,
                          std::uint64_t reset_seed, Rng& rng);

/// Plays `episodes` episodes, drawing the policy then the reset seed from `rng` for each.
std::vector<EpisodeRecord> run_episodes(const Learner32& learner, env::Environment& env,
                                        const pool::FixedPolicyPool& pool, int episodes, Rng& rng);

struct ReturnSummary {
  double mean = 0.0;
  double std = 0.0;
  double stderr_mean = 0.0;
  std::vector<double> returns;
};

ReturnSummary summarize_returns(std::vector<double> returns);

/// Mean undiscounted controlled-agent return and its standard error.
ReturnSummary evaluate_returns(const Learner32& learner, env::Environment& env, const pool::FixedPolicyPool& pool,
                               int episodes, Rng& rng, std::vector<EpisodeRecord>* log = nullptr);

/// Per-timestep hit counts.
struct AccuracyCurve {
  std::vector<long> correct;
  std::vector<long> total;

  void add(std::size_t t, bool hit);
  double at(std::size_t t) const;
  /// Pooled accuracy over t >= from.
  double from(std::size_t t) const;
  double overall() const;
  std::vector<double> values() const;
};

/// Greedy per-factor decode of concatenated categorical logits.
env::Action argmax_factors(const Eigen::Ref<const Eigen::RowVectorXf>& logits, const std::vector<int>& factors);

/// A step counts as correct only if every modelled action factor matches.
AccuracyCurve action_reconstruction_accuracy(const Learner32& learner, const std::vector<EpisodeRecord>& episodes);

/// Index of the largest entry of the partner-colour slice.
int identified_colour(const Eigen::Ref<const Eigen::RowVectorXf>& reconstructed_modelled_obs,
                      const env::ObservationLayout& layout);

struct ColourReport {
  AccuracyCurve curve;
  /// Raw reconstructed colour-slice values, [episode][t].
  std::vector<std::vector<Eigen::Vector3f>> traces;
  std::vector<int> true_colour;
};

/// How well the reconstructed modelled observation recovers the controlled
/// agent's own (unseen) colour. Speaker-listener only.
ColourReport colour_identification_accuracy(const Learner32& learner, const env::EnvSpec& spec,
                                            const std::vector<EpisodeRecord>& episodes);

struct EmbeddingTable {
  std::vector<int> episode;
  std::vector<int> t;
  std::vector<int> policy_id;
  Eigen::MatrixXd z;

  Eigen::Index rows() const { return z.rows(); }
};

/// Embeddings at step `at_step` of each episode long enough to reach it.
EmbeddingTable embeddings_at(const std::vector<EpisodeRecord>& episodes, int at_step);

struct Projection {
  Eigen::MatrixXd components;  // k x d, rows are unit principal directions
  Eigen::VectorXd variance;    // per component, descending
  Eigen::MatrixXd scores;      // n x k
};

Projection principal_components(const Eigen::MatrixXd& x, int k = 2);

void write_embeddings_csv(const std::string& path, const EmbeddingTable& table);
EmbeddingTable read_embeddings_csv(const std::string& path);
void write_projection_csv(const std::string& path, const EmbeddingTable& table, const Projection& projection);

/// Writes `<prefix>.csv` and `<prefix>_pca.csv`.
Projection dump_embeddings(const std::string& prefix, const EmbeddingTable& table);

struct SilhouetteResult {
  double score = 0.0;
  std::vector<int> excluded_labels;  // singleton clusters
};

/// Mean silhouette (Euclidean) of rows labelled by policy id.
SilhouetteResult silhouette(const Eigen::MatrixXd& x, const std::vector<int>& labels);
SilhouetteResult silhouette_by_policy(const EmbeddingTable& table);

}  // namespace liam::eval
