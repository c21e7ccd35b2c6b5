#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "liam/eval/probe.hpp"

namespace liam::io {

/// Append-only JSON Lines file. Each record goes out as one write followed
/// by a flush under a lock, so concurrent writers never interleave and a
/// killed process leaves only whole lines.
class JsonLinesWriter {
 public:
  explicit JsonLinesWriter(const std::filesystem::path& path, bool append = false);
  void write(const nlohmann::json& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

struct MetricsRecord {
  long step = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double ed_loss = 0.0;
  double action_recon_acc = 0.0;
  std::uint64_t seed = 0;
  std::string variant;
  long episodes = 0;
};

/// Non-finite numbers become the string "NaN" and are listed under "nonfinite".
nlohmann::json metrics_json(const MetricsRecord& record);
void append_metrics(JsonLinesWriter& writer, const MetricsRecord& record);

/// One record per step: {episode, t, obs, actions, rewards, done} with
/// per-agent arrays, controlled agent first.
void append_trajectory(JsonLinesWriter& writer, const eval::EpisodeRecord& episode, long episode_index);

std::vector<nlohmann::json> read_json_lines(const std::filesystem::path& path);

}  // namespace liam::io
