#include "liam/eval/probe.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "liam/rl/trainer.hpp"

namespace liam::eval {

double EpisodeRecord::episode_return() const {
  double sum = 0.0;
  for (const auto& s : steps) sum += s.reward;
  return sum;
}

EpisodeRecord run_episode(const Learner32& learner, env::Environment& env, const pool::FixedPolicy& policy,
                          std::uint64_t reset_seed, Rng& rng) {
  const auto& spec = env.spec();
  const auto& dims = learner.dims();
  EpisodeRecord rec;
  rec.policy_id = policy.id;
  rec.reset_seed = reset_seed;
  auto obs = env.reset(reset_seed);
  auto state = learner.initial_state(1);
  Eigen::VectorXf prev_action = Eigen::VectorXf::Zero(dims.controlled_action_width());
  Eigen::VectorXf prev_modelled = Eigen::VectorXf::Zero(dims.modelled_action_width());
  models::StepInputs<float> in;
  in.obs.resize(1, dims.controlled_obs);
  in.modelled_obs.resize(1, dims.modelled_obs);
  in.prev_action.resize(1, dims.controlled_action_width());
  in.modelled_prev_action.resize(1, dims.modelled_action_width());
  while (!env.done()) {
    rl::fill_inputs(in, 0, obs, prev_action, prev_modelled);
    StepRecord step;
    step.embedding = learner.embed(state, in).row(0);
    auto out = learner.policy(Learner32::policy_input(in.obs, step.embedding));
    auto a = learner.sample_actions(out.logits, rng);
    step.action.assign(a.data(), a.data() + a.cols());
    step.modelled_obs.assign(obs.begin() + 1, obs.end());
    step.modelled_action = policy.act(step.modelled_obs, rng);
    env::JointAction joint{step.action};
    joint.insert(joint.end(), step.modelled_action.begin(), step.modelled_action.end());
    auto result = env.step(joint);
    step.obs = std::move(obs[0]);
    step.reward = result.rewards[0];
    step.rewards = result.rewards;
    step.done = result.done;
    prev_action = spec.action_spaces[0].one_hot(step.action).cast<float>();
    prev_modelled = rl::joint_one_hot(spec, step.modelled_action, 1);
    obs = std::move(result.observations);
    rec.steps.push_back(std::move(step));
  }
  return rec;
}

std::vector<EpisodeRecord> run_episodes(const Learner32& learner, env::Environment& env,
                                        const pool::FixedPolicyPool& pool, int episodes, Rng& rng) {
  std::vector<EpisodeRecord> out;
  out.reserve(static_cast<std::size_t>(std::max(episodes, 0)));
  for (int i = 0; i < episodes; ++i) {
    const int k = pool::sample_policy(pool, rng);
    const std::uint64_t seed = rng();
    out.push_back(run_episode(learner, env, pool[k], seed, rng));
  }
  return out;
}

ReturnSummary summarize_returns(std::vector<double> returns) {
  ReturnSummary s;
  s.returns = std::move(returns);
  const auto n = static_cast<double>(s.returns.size());
  if (s.returns.empty()) return s;
  s.mean = std::accumulate(s.returns.begin(), s.returns.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : s.returns) ss += (r - s.mean) * (r - s.mean);
  s.std = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  s.stderr_mean = s.std / std::sqrt(n);
  return s;
}

ReturnSummary evaluate_returns(const Learner32& learner, env::Environment& env, const pool::FixedPolicyPool& pool,
                               int episodes, Rng& rng, std::vector<EpisodeRecord>* log) {
  auto records = run_episodes(learner, env, pool, episodes, rng);
  std::vector<double> returns;
  for (const auto& r : records) returns.push_back(r.episode_return());
  if (log != nullptr) *log = std::move(records);
  return summarize_returns(std::move(returns));
}

void AccuracyCurve::add(std::size_t t, bool hit) {
  if (t >= total.size()) {
    total.resize(t + 1, 0);
    correct.resize(t + 1, 0);
  }
  ++total[t];
  if (hit) ++correct[t];
}

double AccuracyCurve::at(std::size_t t) const {
  if (t >= total.size() || total[t] == 0) return std::nan("");
  return double(correct[t]) / double(total[t]);
}

double AccuracyCurve::from(std::size_t t) const {
  long c = 0, n = 0;
  for (std::size_t i = t; i < total.size(); ++i) {
    c += correct[i];
    n += total[i];
  }
  return n > 0 ? double(c) / double(n) : std::nan("");
}

double AccuracyCurve::overall() const { return from(0); }

std::vector<double> AccuracyCurve::values() const {
  std::vector<double> out;
  for (std::size_t t = 0; t < total.size(); ++t) out.push_back(at(t));
  return out;
}

env::Action argmax_factors(const Eigen::Ref<const Eigen::RowVectorXf>& logits, const std::vector<int>& factors) {
  env::Action out;
  int off = 0;
  for (int f : factors) {
    Eigen::Index best = 0;
    logits.segment(off, f).maxCoeff(&best);
    out.push_back(static_cast<int>(best));
    off += f;
  }
  if (off != logits.size()) throw DimensionError("argmax_factors: logits width does not match the factors");
  return out;
}

AccuracyCurve action_reconstruction_accuracy(const Learner32& learner, const std::vector<EpisodeRecord>& episodes) {
  if (!learner.spec().has_action_head()) {
    throw UsageError("action reconstruction: variant '" + learner.spec().name + "' has no action head");
  }
  const auto& factors = learner.dims().modelled_factors;
  AccuracyCurve curve;
  for (const auto& ep : episodes) {
    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
      const auto& s = ep.steps[t];
      const auto pred = argmax_factors(learner.model().predict(s.embedding).action_logits.row(0), factors);
      env::Action truth;
      for (const auto& a : s.modelled_action) truth.insert(truth.end(), a.begin(), a.end());
      curve.add(t, pred == truth);
    }
  }
  return curve;
}

int identified_colour(const Eigen::Ref<const Eigen::RowVectorXf>& reconstructed_modelled_obs,
                      const env::ObservationLayout& layout) {
  const auto& s = layout.slice("other_colour");
  if (reconstructed_modelled_obs.size() < s.offset + s.size) {
    throw DimensionError("identified_colour: reconstruction is shorter than the layout");
  }
  Eigen::Index best = 0;
  reconstructed_modelled_obs.segment(s.offset, s.size).maxCoeff(&best);
  return static_cast<int>(best);
}

ColourReport colour_identification_accuracy(const Learner32& learner, const env::EnvSpec& spec,
                                            const std::vector<EpisodeRecord>& episodes) {
  if (spec.name != "dsl") throw UsageError("colour identification is only defined for the speaker-listener world");
  if (!learner.spec().has_observation_head()) {
    throw UsageError("colour identification: variant '" + learner.spec().name + "' has no observation head");
  }
  const auto& layout = spec.layouts[1];
  const auto& slice = layout.slice("other_colour");
  ColourReport report;
  for (const auto& ep : episodes) {
    if (ep.steps.empty()) continue;
    Eigen::Index truth = 0;
    ep.steps.front().modelled_obs[0].segment(slice.offset, slice.size).maxCoeff(&truth);
    report.true_colour.push_back(static_cast<int>(truth));
    auto& trace = report.traces.emplace_back();
    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
      const Eigen::RowVectorXf recon = learner.model().predict(ep.steps[t].embedding).obs.row(0);
      trace.push_back(recon.segment(slice.offset, slice.size).transpose());
      report.curve.add(t, identified_colour(recon, layout) == truth);
    }
  }
  return report;
}

EmbeddingTable embeddings_at(const std::vector<EpisodeRecord>& episodes, int at_step) {
  EmbeddingTable table;
  std::vector<const StepRecord*> picked;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto& ep = episodes[e];
    if (at_step < 0 || static_cast<std::size_t>(at_step) >= ep.steps.size()) continue;
    table.episode.push_back(static_cast<int>(e));
    table.t.push_back(at_step);
    table.policy_id.push_back(ep.policy_id);
    picked.push_back(&ep.steps[static_cast<std::size_t>(at_step)]);
  }
  const Eigen::Index width = picked.empty() ? 0 : picked.front()->embedding.size();
  table.z.resize(static_cast<Eigen::Index>(picked.size()), width);
  for (std::size_t i = 0; i < picked.size(); ++i) {
    table.z.row(static_cast<Eigen::Index>(i)) = picked[i]->embedding.cast<double>();
  }
  return table;
}

Projection principal_components(const Eigen::MatrixXd& x, int k) {
  if (x.rows() < 2) throw UsageError("principal_components: need at least two rows");
  k = std::min<int>(k, static_cast<int>(x.cols()));
  const Eigen::MatrixXd centred = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centred.transpose() * centred / double(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  Projection p;
  p.components.resize(k, x.cols());
  p.variance.resize(k);
  for (int i = 0; i < k; ++i) {
    const Eigen::Index col = x.cols() - 1 - i;  // eigenvalues ascend
    p.components.row(i) = solver.eigenvectors().col(col).transpose();
    p.variance(i) = std::max(0.0, solver.eigenvalues()(col));
  }
  p.scores = centred * p.components.transpose();
  return p;
}

namespace {

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << std::setprecision(9);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace

void write_embeddings_csv(const std::string& path, const EmbeddingTable& table) {
  auto out = open_for_write(path);
  out << "episode,t,policy_id";
  for (Eigen::Index j = 0; j < table.z.cols(); ++j) out << ",z_" << j;
  out << "\n";
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out << table.episode[k] << ',' << table.t[k] << ',' << table.policy_id[k];
    for (Eigen::Index j = 0; j < table.z.cols(); ++j) out << ',' << table.z(i, j);
    out << "\n";
  }
  finish(out, path);
}

EmbeddingTable read_embeddings_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw CorruptionError("'" + path + "' is empty");
  const auto width = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',')) - 2;
  if (width < 0) throw CorruptionError("'" + path + "' has a malformed header");
  std::vector<std::vector<double>> rows;
  EmbeddingTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    if (static_cast<Eigen::Index>(values.size()) != width + 3) {
      throw CorruptionError("'" + path + "': row " + std::to_string(rows.size() + 1) + " has the wrong width");
    }
    table.episode.push_back(static_cast<int>(values[0]));
    table.t.push_back(static_cast<int>(values[1]));
    table.policy_id.push_back(static_cast<int>(values[2]));
    rows.emplace_back(values.begin() + 3, values.end());
  }
  table.z.resize(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < width; ++j) table.z(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  return table;
}

void write_projection_csv(const std::string& path, const EmbeddingTable& table, const Projection& projection) {
  auto out = open_for_write(path);
  out << "episode,t,policy_id";
  for (Eigen::Index j = 0; j < projection.scores.cols(); ++j) out << ",pc_" << j;
  out << "\n";
  for (Eigen::Index i = 0; i < projection.scores.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    out << table.episode[k] << ',' << table.t[k] << ',' << table.policy_id[k];
    for (Eigen::Index j = 0; j < projection.scores.cols(); ++j) out << ',' << projection.scores(i, j);
    out << "\n";
  }
  finish(out, path);
}

Projection dump_embeddings(const std::string& prefix, const EmbeddingTable& table) {
  write_embeddings_csv(prefix + ".csv", table);
  auto projection = principal_components(table.z, 2);
  write_projection_csv(prefix + "_pca.csv", table, projection);
  return projection;
}

SilhouetteResult silhouette(const Eigen::MatrixXd& x, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw DimensionError("silhouette: one label per row");
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  SilhouetteResult result;
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (counts[labels[i]] > 1) keep.push_back(static_cast<Eigen::Index>(i));
  }
  for (const auto& [label, n] : counts) {
    if (n == 1) {
      result.excluded_labels.push_back(label);
      std::cerr << "warning: silhouette excludes singleton cluster " << label << "\n";
    }
  }
  std::map<int, int> clusters;
  for (auto i : keep) clusters[labels[static_cast<std::size_t>(i)]]++;
  if (clusters.size() < 2) throw UsageError("silhouette: need at least two clusters with two or more members");

  double total = 0.0;
  for (auto i : keep) {
    std::map<int, double> sum;
    for (auto j : keep) {
      if (i == j) continue;
      sum[labels[static_cast<std::size_t>(j)]] += (x.row(i) - x.row(j)).norm();
    }
    const int own = labels[static_cast<std::size_t>(i)];
    const double a = sum[own] / double(clusters[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, n] : clusters) {
      if (label != own) b = std::min(b, sum[label] / double(n));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  result.score = total / double(keep.size());
  return result;
}

SilhouetteResult silhouette_by_policy(const EmbeddingTable& table) { return silhouette(table.z, table.policy_id); }

}  // namespace liam::eval
