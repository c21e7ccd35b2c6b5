#pragma once

#include <filesystem>
#include <memory>

#include "liam/nn/layers.hpp"
#include "liam/pool/pool.hpp"
#include "liam/rl/trainer.hpp"

namespace liam::io {

/// Feed-forward sub-policy: ReLU MLP over the agent's observation with one
/// softmax per action factor, sampled at every step. Stored as a checkpoint
/// whose "policy" store holds `policy.<i>.weight` / `policy.<i>.bias`.
class NetworkPolicy final : public pool::AgentPolicy {
 public:
  NetworkPolicy(const std::vector<int>& widths, std::vector<int> factors, nn::Rng& rng);

  static std::shared_ptr<NetworkPolicy> load(const std::filesystem::path& dir, std::vector<int> factors);
  void save(const std::filesystem::path& dir, const rl::RunConfig& config) const;

  /// Per-factor log-probabilities, concatenated.
  Eigen::RowVectorXf log_probs(const env::Observation& obs) const;

  env::Action act(const env::Observation& obs, nn::Rng& rng) const override;
  std::string kind() const override { return "network"; }
  std::string parameters() const override;

  nn::ParameterStore<float>& store() { return store_; }
  const std::vector<int>& widths() const { return widths_; }

 private:
  NetworkPolicy() = default;

  std::vector<int> widths_;
  std::vector<int> factors_;
  std::string source_;
  nn::ParameterStore<float> store_;
  nn::Mlp<float> mlp_;
};

/// Parses "k:m=dir;k:m=dir" and swaps each pool member k/m (member m drives
/// agent m+1) for the network stored in dir.
void apply_plugins(rl::Trainer& trainer, const std::string& plugins);
void apply_plugins(pool::FixedPolicyPool& pool, const env::EnvSpec& spec, const std::string& plugins);

}  // namespace liam::io
