#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "liam/env/registry.hpp"
#include "liam/pool/policies.hpp"

namespace liam::pool {

enum class PoolMode { Paired, Cartesian };
std::string to_string(PoolMode mode);
PoolMode parse_pool_mode(const std::string& text);

/// Joint fixed behaviour of all modelled agents; members[i] drives agent i+1.
struct FixedPolicy {
  int id = 0;
  std::string kind;
  std::string description;
  std::vector<std::shared_ptr<const AgentPolicy>> members;

  /// Actions for agents 1..N-1 given their observations in the same order.
  env::JointAction act(const std::vector<Observation>& modelled_obs, Rng& rng) const;
};

class FixedPolicyPool {
 public:
  FixedPolicyPool() = default;
  explicit FixedPolicyPool(std::vector<FixedPolicy> policies);

  int size() const { return static_cast<int>(policies_.size()); }
  bool empty() const { return policies_.empty(); }
  const FixedPolicy& operator[](int k) const { return policies_.at(static_cast<std::size_t>(k)); }
  auto begin() const { return policies_.begin(); }
  auto end() const { return policies_.end(); }

  /// Swaps one sub-policy for an externally supplied one (e.g. a network
  /// restored from a checkpoint).
  void replace_member(int policy, int member, std::shared_ptr<const AgentPolicy> replacement);

 private:
  std::vector<FixedPolicy> policies_;
};

/// Builds the pool for an environment preset. `size` <= 0 means the preset
/// default. Cartesian mode pairs every speaking map with every listening
/// map and is only defined for the speaker-listener world.
FixedPolicyPool build_pool(const env::EnvPreset& preset, PoolMode mode, std::uint64_t seed, int size = 0);

/// Uniform draw of a policy id.
int sample_policy(const FixedPolicyPool& pool, Rng& rng);

/// Structured text manifest: a header, then one `[policy k]` section per
/// policy listing its kind and each member's parameters.
void write_manifest(std::ostream& out, const FixedPolicyPool& pool, const std::string& env_name, PoolMode mode,
                    std::uint64_t seed);

}  // namespace liam::pool
