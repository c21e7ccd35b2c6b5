#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>

#include "liam/eval/probe.hpp"
#include "liam/io/checkpoint.hpp"
#include "liam/io/records.hpp"
#include "liam/rl/trainer.hpp"

namespace liam::io {

/// Evaluation stream for a given run seed and training step; independent
/// of the training rng so evaluation never perturbs training.
nn::Rng evaluation_rng(std::uint64_t seed, long step, std::uint64_t stream = 0);

struct Evaluation {
  eval::ReturnSummary returns;
  double action_recon_acc = 0.0;  // NaN when the variant has no action head
  std::vector<eval::EpisodeRecord> episodes;
};

/// Plays `episodes` evaluation episodes. Deterministic mode plays them in
/// order on one stream; otherwise they are spread over worker threads, each
/// with its own stream, and gathered in episode order.
Evaluation evaluate(const rl::Learner32& learner, const env::EnvPreset& preset, const pool::FixedPolicyPool& pool,
                    int episodes, std::uint64_t seed, long step, bool deterministic);
Evaluation evaluate(const rl::Trainer& trainer, int episodes);

/// Trainer built from `config` with its plug-in sub-policies installed.
std::unique_ptr<rl::Trainer> make_trainer(const rl::RunConfig& config);

void save_trainer(const std::filesystem::path& dir, rl::Trainer& trainer);

/// Rebuilds the trainer described by the checkpoint and restores parameters,
/// optimiser state, rng and counters. Environments restart from fresh
/// episodes. `config` overrides the stored configuration when given.
std::unique_ptr<rl::Trainer> restore_trainer(const Checkpoint& checkpoint,
                                             const std::optional<rl::RunConfig>& config = std::nullopt);

/// Full training run. Writes into config.out:
///   config.ini, pool_manifest.txt, metrics.jsonl, checkpoints/step_<N>/
/// plus checkpoints/latest naming the newest checkpoint. Resuming appends
/// to the existing metrics file.
void train(const rl::RunConfig& config, const Checkpoint* resume = nullptr, std::ostream* log = nullptr);

}  // namespace liam::io
