#include "liam/pool/pool.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

namespace liam::pool {

std::string to_string(PoolMode mode) { return mode == PoolMode::Paired ? "paired" : "cartesian"; }

PoolMode parse_pool_mode(const std::string& text) {
  if (text == "paired") return PoolMode::Paired;
  if (text == "cartesian") return PoolMode::Cartesian;
  throw ConfigError("pool_mode: expected 'paired' or 'cartesian', got '" + text + "'");
}

env::JointAction FixedPolicy::act(const std::vector<Observation>& modelled_obs, Rng& rng) const {
  if (modelled_obs.size() != members.size()) {
    throw DimensionError("policy " + std::to_string(id) + ": expected " + std::to_string(members.size()) +
                         " modelled observations, got " + std::to_string(modelled_obs.size()));
  }
  env::JointAction out;
  out.reserve(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) out.push_back(members[i]->act(modelled_obs[i], rng));
  return out;
}

FixedPolicyPool::FixedPolicyPool(std::vector<FixedPolicy> policies) : policies_(std::move(policies)) {
  for (std::size_t k = 0; k < policies_.size(); ++k) {
    if (policies_[k].id != static_cast<int>(k)) throw UsageError("pool: policy ids must be 0..K-1 in order");
  }
}

void FixedPolicyPool::replace_member(int policy, int member, std::shared_ptr<const AgentPolicy> replacement) {
  if (!replacement) throw UsageError("pool: replacement policy is null");
  auto& p = policies_.at(static_cast<std::size_t>(policy));
  p.members.at(static_cast<std::size_t>(member)) = std::move(replacement);
  p.kind = "mixed";
}

namespace {

FixedPolicyPool speaker_listener_pool(PoolMode mode, std::uint64_t seed, int size) {
  auto maps = all_message_maps();
  Rng rng(seed);
  std::shuffle(maps.begin(), maps.end(), rng);
  std::vector<FixedPolicy> out;
  if (mode == PoolMode::Paired) {
    if (size > static_cast<int>(maps.size())) throw ConfigError("pool_size: at most 60 distinct message maps exist");
    for (int k = 0; k < size; ++k) {
      const auto& m = maps[static_cast<std::size_t>(k)];
      out.push_back({k, "message-map", "paired map " + std::to_string(k),
                     {std::make_shared<MessageMapPolicy>(m, m)}});
    }
  } else {
    constexpr int kSide = 10;
    for (int i = 0; i < kSide; ++i)
      for (int j = 0; j < kSide; ++j) {
        out.push_back({i * kSide + j, "message-map",
                       "speak map " + std::to_string(i) + " x listen map " + std::to_string(j),
                       {std::make_shared<MessageMapPolicy>(maps[static_cast<std::size_t>(i)],
                                                           maps[static_cast<std::size_t>(j)])}});
      }
  }
  return FixedPolicyPool(std::move(out));
}

FixedPolicyPool foraging_pool(const env::ForagingConfig& config, int size) {
  struct Variant {
    ForagingRule rule;
    double epsilon;
    int radius;
  };
  std::vector<Variant> variants;
  for (double eps : {0.0, 0.1})
    for (int r = 0; r < 4; ++r) variants.push_back({static_cast<ForagingRule>(r), eps, -1});
  variants.push_back({ForagingRule::ClosestToCentre, 0.0, config.view_radius});
  variants.push_back({ForagingRule::ClosestGroupCompatible, 0.0, config.view_radius});
  if (size > static_cast<int>(variants.size())) {
    throw ConfigError("pool_size: foraging pool has at most " + std::to_string(variants.size()) + " heuristics");
  }
  std::vector<FixedPolicy> out;
  for (int k = 0; k < size; ++k) {
    const auto& v = variants[static_cast<std::size_t>(k)];
    std::vector<std::shared_ptr<const AgentPolicy>> members;
    for (int a = 1; a < config.num_agents; ++a) {
      members.push_back(std::make_shared<ForagingHeuristic>(config, v.rule, v.epsilon, v.radius));
    }
    out.push_back({k, "lbf-heuristic", to_string(v.rule), std::move(members)});
  }
  return FixedPolicyPool(std::move(out));
}

FixedPolicyPool pursuit_pool(std::uint64_t seed, int size) {
  std::vector<int> combos(64);
  std::iota(combos.begin(), combos.end(), 0);
  Rng rng(seed);
  std::shuffle(combos.begin(), combos.end(), rng);
  if (size > 64) throw ConfigError("pool_size: pursuit pool has at most 64 heuristic triples");
  std::vector<FixedPolicy> out;
  for (int k = 0; k < size; ++k) {
    int code = combos[static_cast<std::size_t>(k)];
    std::vector<std::shared_ptr<const AgentPolicy>> members;
    std::string description;
    for (int p = 0; p < env::kNumPredators; ++p) {
      const auto rule = static_cast<PursuitRule>(code % 4);
      code /= 4;
      members.push_back(std::make_shared<PursuitHeuristic>(rule));
      description += (p ? "/" : "") + to_string(rule);
    }
    out.push_back({k, "pp-heuristic", description, std::move(members)});
  }
  return FixedPolicyPool(std::move(out));
}

}  // namespace

FixedPolicyPool build_pool(const env::EnvPreset& preset, PoolMode mode, std::uint64_t seed, int size) {
  if (size <= 0) size = preset.default_pool_size;
  if (mode == PoolMode::Cartesian && preset.kind != env::EnvKind::SpeakerListener) {
    throw ConfigError("pool_mode: cartesian pools are only defined for the speaker-listener world");
  }
  switch (preset.kind) {
    case env::EnvKind::SpeakerListener: return speaker_listener_pool(mode, seed, size);
    case env::EnvKind::Foraging: return foraging_pool(preset.foraging, size);
    case env::EnvKind::PredatorPrey: return pursuit_pool(seed, size);
  }
  throw ConfigError("pool: unsupported environment kind");
}

int sample_policy(const FixedPolicyPool& pool, Rng& rng) {
  if (pool.empty()) throw UsageError("sample_policy: pool is empty");
  return std::uniform_int_distribution<int>(0, pool.size() - 1)(rng);
}

void write_manifest(std::ostream& out, const FixedPolicyPool& pool, const std::string& env_name, PoolMode mode,
                    std::uint64_t seed) {
  out << "# fixed policy pool\n";
  out << "env = " << env_name << "\n";
  out << "mode = " << to_string(mode) << "\n";
  out << "seed = " << seed << "\n";
  out << "size = " << pool.size() << "\n";
  for (const auto& p : pool) {
    out << "\n[policy " << p.id << "]\n";
    out << "kind = " << p.kind << "\n";
    out << "description = " << p.description << "\n";
    for (std::size_t m = 0; m < p.members.size(); ++m) {
      out << "agent" << (m + 1) << " = " << p.members[m]->kind() << " " << p.members[m]->parameters() << "\n";
    }
  }
}

}  // namespace liam::pool
