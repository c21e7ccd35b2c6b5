#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "liam/nn/parameter_store.hpp"
#include "liam/rl/config.hpp"

namespace liam::io {

inline constexpr int kCheckpointVersion = 1;

/// A checkpoint directory holds three files:
///   manifest.txt  version, counters, rng state and one line per array
///   params.bin    every array back to back, little-endian float32
///   config.ini    the run configuration
/// Each array line carries its byte offset and a crc32 of its bytes; the
/// manifest also records the crc32 of the whole payload and of the config.
struct ArrayRecord {
  std::string store;
  std::string parameter;
  std::string slot;  // value, adam_m or adam_v
  long rows = 0;
  long cols = 0;
  std::uint64_t offset = 0;
  std::uint32_t crc = 0;
  std::vector<float> data;
};

struct Checkpoint {
  int format_version = kCheckpointVersion;
  rl::RunConfig config;
  long step = 0;
  long episodes = 0;
  std::string rng_state;
  std::vector<ArrayRecord> arrays;
  std::map<std::string, std::int64_t> optimizer_steps;  // "store parameter" -> Adam step

  nn::Rng rng() const;
};

struct NamedStore {
  std::string name;
  const nn::ParameterStore<float>* store;
};

/// Writes to temporary names, then renames; the manifest is renamed last so
/// a reader never sees a manifest without its payload.
void save_checkpoint(const std::filesystem::path& dir, const rl::RunConfig& config,
                     const std::vector<NamedStore>& stores, const nn::Rng& rng, long step, long episodes);

/// Throws IoError when files are missing, VersionError on a format version
/// other than the current one, CorruptionError on checksum, size or syntax
/// problems.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Copies values and optimiser state into `store`. Every parameter must be
/// present with a matching shape, otherwise CorruptionError.
void restore_store(const Checkpoint& checkpoint, const std::string& name, nn::ParameterStore<float>& store);

std::uint32_t crc32_bytes(const void* data, std::size_t size);

}  // namespace liam::io
