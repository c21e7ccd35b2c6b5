#include "liam/io/network_policy.hpp"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "liam/io/checkpoint.hpp"

namespace liam::io {

NetworkPolicy::NetworkPolicy(const std::vector<int>& widths, std::vector<int> factors, nn::Rng& rng)
    : widths_(widths), factors_(std::move(factors)) {
  if (widths_.size() < 2) throw DimensionError("network policy needs at least an input and an output width");
  int total = 0;
  for (int f : factors_) total += f;
  if (total != widths_.back()) {
    throw DimensionError("network policy output width " + std::to_string(widths_.back()) + " does not match " +
                         std::to_string(total) + " action logits");
  }
  mlp_ = nn::Mlp<float>::create(store_, "policy", widths_, rng);
}

std::shared_ptr<NetworkPolicy> NetworkPolicy::load(const std::filesystem::path& dir, std::vector<int> factors) {
  const Checkpoint ck = load_checkpoint(dir);
  std::map<int, std::pair<long, long>> shapes;
  for (const auto& a : ck.arrays) {
    if (a.store != "policy" || a.slot != "value") continue;
    int layer = -1;
    char dot = 0;
    std::string tail;
    std::istringstream in(a.parameter.substr(a.parameter.find('.') + 1));
    in >> layer >> dot >> tail;
    if (layer < 0 || dot != '.') throw CorruptionError("unexpected policy parameter '" + a.parameter + "'");
    if (tail == "weight") shapes[layer] = {a.rows, a.cols};
  }
  if (shapes.empty()) throw CorruptionError("checkpoint '" + dir.string() + "' holds no policy network");
  std::vector<int> widths{static_cast<int>(shapes.begin()->second.first)};
  int expect = 0;
  for (const auto& [layer, shape] : shapes) {
    if (layer != expect++ || shape.first != widths.back()) {
      throw CorruptionError("policy network layers in '" + dir.string() + "' do not chain");
    }
    widths.push_back(static_cast<int>(shape.second));
  }
  nn::Rng scratch(0);
  auto policy = std::shared_ptr<NetworkPolicy>(new NetworkPolicy(widths, std::move(factors), scratch));
  restore_store(ck, "policy", policy->store_);
  policy->source_ = dir.string();
  return policy;
}

void NetworkPolicy::save(const std::filesystem::path& dir, const rl::RunConfig& config) const {
  save_checkpoint(dir, config, {{"policy", &store_}}, nn::Rng(), 0, 0);
}

Eigen::RowVectorXf NetworkPolicy::log_probs(const env::Observation& obs) const {
  if (obs.size() != widths_.front()) {
    throw DimensionError("network policy expects " + std::to_string(widths_.front()) + " inputs, got " +
                         std::to_string(obs.size()));
  }
  nn::Tape<float> tape(false);
  nn::Tensor<float> x = obs.transpose().cast<float>();
  Eigen::RowVectorXf logits = mlp_(tape, tape.constant(x), nn::Activation::None).value().row(0);
  int off = 0;
  for (int f : factors_) {
    auto seg = logits.segment(off, f);
    const float m = seg.maxCoeff();
    const float lse = m + std::log((seg.array() - m).exp().sum());
    seg.array() -= lse;
    off += f;
  }
  return logits;
}

env::Action NetworkPolicy::act(const env::Observation& obs, nn::Rng& rng) const {
  const Eigen::RowVectorXf lp = log_probs(obs);
  env::Action a;
  int off = 0;
  for (int f : factors_) {
    std::vector<double> w(static_cast<std::size_t>(f));
    for (int j = 0; j < f; ++j) w[static_cast<std::size_t>(j)] = std::exp(static_cast<double>(lp(off + j)));
    std::discrete_distribution<int> pick(w.begin(), w.end());
    a.push_back(pick(rng));
    off += f;
  }
  return a;
}

std::string NetworkPolicy::parameters() const {
  std::ostringstream os;
  os << "widths=";
  for (std::size_t i = 0; i < widths_.size(); ++i) os << (i ? "x" : "") << widths_[i];
  if (!source_.empty()) os << " checkpoint=" << source_;
  return os.str();
}

namespace {

struct Plugin {
  int policy = 0;
  int member = 0;
  std::string dir;
};

std::vector<Plugin> parse_plugins(const std::string& text) {
  std::vector<Plugin> out;
  std::istringstream in(text);
  std::string entry;
  while (std::getline(in, entry, ';')) {
    if (entry.empty()) continue;
    Plugin p;
    char colon = 0, eq = 0;
    std::istringstream e(entry);
    if (!(e >> p.policy >> colon >> p.member >> eq) || colon != ':' || eq != '=' || !std::getline(e, p.dir) ||
        p.dir.empty()) {
      throw ConfigError("plugins: expected 'k:m=dir', got '" + entry + "'");
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace

void apply_plugins(pool::FixedPolicyPool& pool, const env::EnvSpec& spec, const std::string& plugins) {
  for (const auto& p : parse_plugins(plugins)) {
    const auto agent = static_cast<std::size_t>(p.member + 1);
    if (p.member < 0 || agent >= spec.action_spaces.size()) {
      throw ConfigError("plugins: member " + std::to_string(p.member) + " does not exist");
    }
    pool.replace_member(p.policy, p.member, NetworkPolicy::load(p.dir, spec.action_spaces[agent].factors));
  }
}

void apply_plugins(rl::Trainer& trainer, const std::string& plugins) {
  const auto& spec = trainer.spec();
  for (const auto& p : parse_plugins(plugins)) {
    const auto agent = static_cast<std::size_t>(p.member + 1);
    if (p.member < 0 || agent >= spec.action_spaces.size()) {
      throw ConfigError("plugins: member " + std::to_string(p.member) + " does not exist");
    }
    trainer.replace_pool_member(p.policy, p.member, NetworkPolicy::load(p.dir, spec.action_spaces[agent].factors));
  }
}

}  // namespace liam::io
