#include "liam/io/records.hpp"

#include <cmath>

namespace liam::io {

JsonLinesWriter::JsonLinesWriter(const std::filesystem::path& path, bool append)
    : path_(path), out_(path, append ? std::ios::app : std::ios::trunc) {
  if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
}

void JsonLinesWriter::write(const nlohmann::json& record) {
  const std::string line = record.dump() + '\n';
  std::lock_guard<std::mutex> lock(mutex_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw IoError("write failed for '" + path_.string() + "'");
}

nlohmann::json metrics_json(const MetricsRecord& r) {
  nlohmann::json j;
  auto nonfinite = nlohmann::json::array();
  auto put = [&](const char* key, double v) {
    if (std::isfinite(v)) {
      j[key] = v;
    } else {
      j[key] = "NaN";
      nonfinite.push_back(key);
    }
  };
  j["step"] = r.step;
  put("mean_return", r.mean_return);
  put("std_return", r.std_return);
  put("ed_loss", r.ed_loss);
  put("action_recon_acc", r.action_recon_acc);
  j["seed"] = r.seed;
  j["variant"] = r.variant;
  j["episodes"] = r.episodes;
  if (!nonfinite.empty()) j["nonfinite"] = nonfinite;
  return j;
}

void append_metrics(JsonLinesWriter& writer, const MetricsRecord& record) { writer.write(metrics_json(record)); }

void append_trajectory(JsonLinesWriter& writer, const eval::EpisodeRecord& episode, long episode_index) {
  for (std::size_t t = 0; t < episode.steps.size(); ++t) {
    const auto& s = episode.steps[t];
    nlohmann::json j;
    j["episode"] = episode_index;
    j["t"] = t;
    auto obs = nlohmann::json::array();
    obs.push_back(std::vector<double>(s.obs.data(), s.obs.data() + s.obs.size()));
    for (const auto& o : s.modelled_obs) obs.push_back(std::vector<double>(o.data(), o.data() + o.size()));
    j["obs"] = std::move(obs);
    auto actions = nlohmann::json::array();
    actions.push_back(s.action);
    for (const auto& a : s.modelled_action) actions.push_back(a);
    j["actions"] = std::move(actions);
    j["rewards"] = s.rewards;
    j["done"] = s.done;
    writer.write(j);
  }
}

std::vector<nlohmann::json> read_json_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::vector<nlohmann::json> out;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw CorruptionError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace liam::io
