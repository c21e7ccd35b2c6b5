#include "liam/io/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "liam/io/config_file.hpp"

namespace liam::io {
namespace fs = std::filesystem;

namespace {

const char* const kMagic = "liam-checkpoint";

void put_le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

float get_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= std::uint32_t(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::string hex(std::uint32_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << v;
  return os.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
    throw UsageError("checkpoint names must be non-empty without whitespace: '" + name + "'");
  }
}

[[noreturn]] void corrupt(const fs::path& dir, const std::string& what) {
  throw CorruptionError("checkpoint '" + dir.string() + "': " + what);
}

std::uint32_t parse_hex(const fs::path& dir, const std::string& text) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(text, &used, 16);
    if (used != text.size() || v > 0xfffffffful) corrupt(dir, "bad checksum field '" + text + "'");
    return static_cast<std::uint32_t>(v);
  } catch (const std::logic_error&) {
    corrupt(dir, "bad checksum field '" + text + "'");
  }
}

}  // namespace

std::uint32_t crc32_bytes(const void* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* p = static_cast<const Bytef*>(data);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, p, chunk);
    p += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

nn::Rng Checkpoint::rng() const {
  nn::Rng r;
  std::istringstream in(rng_state);
  in >> r;
  if (!in) throw CorruptionError("checkpoint rng state is malformed");
  return r;
}

void save_checkpoint(const fs::path& dir, const rl::RunConfig& config, const std::vector<NamedStore>& stores,
                     const nn::Rng& rng, long step, long episodes) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  std::string payload;
  std::ostringstream arrays;
  for (const auto& named : stores) {
    check_name(named.name);
    for (const auto& p : *named.store) {
      check_name(p->name);
      arrays << "optimizer_step = " << named.name << ' ' << p->name << ' ' << p->step << '\n';
      const std::pair<const char*, const nn::Tensor<float>*> slots[] = {
          {"value", &p->value}, {"adam_m", &p->adam_m}, {"adam_v", &p->adam_v}};
      for (const auto& [slot, t] : slots) {
        const std::size_t offset = payload.size();
        for (Eigen::Index i = 0; i < t->size(); ++i) put_le(payload, t->data()[i]);
        const std::uint32_t crc = crc32_bytes(payload.data() + offset, payload.size() - offset);
        arrays << "array = " << named.name << ' ' << p->name << ' ' << slot << ' ' << t->rows() << ' ' << t->cols()
               << ' ' << offset << ' ' << hex(crc) << '\n';
      }
    }
  }
  const std::string config_echo = config_text(config);

  std::ostringstream manifest;
  manifest << kMagic << '\n';
  manifest << "format_version = " << kCheckpointVersion << '\n';
  manifest << "step = " << step << '\n';
  manifest << "episodes = " << episodes << '\n';
  manifest << "config = config.ini " << hex(crc32_bytes(config_echo.data(), config_echo.size())) << '\n';
  manifest << "payload = params.bin " << payload.size() << ' ' << hex(crc32_bytes(payload.data(), payload.size()))
           << '\n';
  manifest << "rng = " << rng << '\n';
  manifest << arrays.str();

  const std::string suffix = ".tmp";
  write_file(dir / ("params.bin" + suffix), payload);
  write_file(dir / ("config.ini" + suffix), config_echo);
  write_file(dir / ("manifest.txt" + suffix), manifest.str());
  for (const char* name : {"params.bin", "config.ini", "manifest.txt"}) {
    fs::rename(dir / (std::string(name) + suffix), dir / name, ec);
    if (ec) throw IoError("cannot rename into '" + (dir / name).string() + "': " + ec.message());
  }
}

Checkpoint load_checkpoint(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.txt")) throw IoError("no checkpoint manifest in '" + dir.string() + "'");
  std::istringstream manifest(read_file(dir / "manifest.txt"));
  std::string line;
  if (!std::getline(manifest, line) || line != kMagic) corrupt(dir, "manifest header missing");

  Checkpoint ck;
  bool have_version = false, have_payload = false, have_config = false, have_rng = false;
  std::uint64_t payload_bytes = 0;
  std::uint32_t payload_crc = 0, config_crc = 0;
  std::string payload_name, config_name;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) corrupt(dir, "malformed manifest line '" + line + "'");
    const std::string key = line.substr(0, eq);
    std::istringstream fields(line.substr(eq + 3));
    if (key == "format_version") {
      fields >> ck.format_version;
      have_version = true;
      if (fields && ck.format_version != kCheckpointVersion) {
        throw VersionError("checkpoint '" + dir.string() + "' has format version " +
                           std::to_string(ck.format_version) + ", this build reads version " +
                           std::to_string(kCheckpointVersion));
      }
    } else if (key == "step") {
      fields >> ck.step;
    } else if (key == "episodes") {
      fields >> ck.episodes;
    } else if (key == "config") {
      std::string crc;
      fields >> config_name >> crc;
      config_crc = parse_hex(dir, crc);
      have_config = true;
    } else if (key == "payload") {
      std::string crc;
      fields >> payload_name >> payload_bytes >> crc;
      payload_crc = parse_hex(dir, crc);
      have_payload = true;
    } else if (key == "rng") {
      ck.rng_state = line.substr(eq + 3);
      have_rng = true;
      continue;
    } else if (key == "optimizer_step") {
      std::string store, name;
      std::int64_t n = 0;
      fields >> store >> name >> n;
      ck.optimizer_steps[store + ' ' + name] = n;
    } else if (key == "array") {
      ArrayRecord a;
      std::string crc;
      fields >> a.store >> a.parameter >> a.slot >> a.rows >> a.cols >> a.offset >> crc;
      if (fields) a.crc = parse_hex(dir, crc);
      if (a.rows < 0 || a.cols < 0) corrupt(dir, "negative shape for " + a.parameter);
      ck.arrays.push_back(std::move(a));
    } else {
      corrupt(dir, "unknown manifest key '" + key + "'");
    }
    if (!fields) corrupt(dir, "malformed manifest line '" + line + "'");
  }
  if (!have_version) throw VersionError("checkpoint '" + dir.string() + "' has no format version");
  if (!have_payload || !have_config || !have_rng) corrupt(dir, "manifest is incomplete");

  const std::string payload = read_file(dir / payload_name);
  if (payload.size() != payload_bytes) {
    corrupt(dir, "payload has " + std::to_string(payload.size()) + " bytes, manifest expects " +
                     std::to_string(payload_bytes));
  }
  if (crc32_bytes(payload.data(), payload.size()) != payload_crc) corrupt(dir, "payload checksum mismatch");

  const std::string config_echo = read_file(dir / config_name);
  if (crc32_bytes(config_echo.data(), config_echo.size()) != config_crc) corrupt(dir, "config checksum mismatch");
  std::istringstream config_in(config_echo);
  ck.config = parse_config(config_in, (dir / config_name).string());

  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  for (auto& a : ck.arrays) {
    const std::uint64_t n = std::uint64_t(a.rows) * std::uint64_t(a.cols);
    if (a.offset > payload.size() || n * 4 > payload.size() - a.offset) {
      corrupt(dir, a.parameter + " " + a.slot + " extends past the payload");
    }
    if (crc32_bytes(bytes + a.offset, n * 4) != a.crc) corrupt(dir, a.parameter + " " + a.slot + " checksum mismatch");
    a.data.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) a.data[i] = get_le(bytes + a.offset + 4 * i);
  }
  ck.rng();  // validates the rng text
  return ck;
}

void restore_store(const Checkpoint& ck, const std::string& name, nn::ParameterStore<float>& store) {
  std::map<std::pair<std::string, std::string>, const ArrayRecord*> index;
  for (const auto& a : ck.arrays) {
    if (a.store == name) index[{a.parameter, a.slot}] = &a;
  }
  std::size_t used = 0;
  for (auto& p : store) {
    for (auto [slot, target] : {std::pair{"value", &p->value}, {"adam_m", &p->adam_m}, {"adam_v", &p->adam_v}}) {
      auto it = index.find({p->name, slot});
      if (it == index.end()) throw CorruptionError("checkpoint lacks " + name + " " + p->name + " " + slot);
      const ArrayRecord& a = *it->second;
      if (a.rows != target->rows() || a.cols != target->cols()) {
        throw CorruptionError("checkpoint shape " + std::to_string(a.rows) + "x" + std::to_string(a.cols) + " for " +
                              p->name + " does not match " + std::to_string(target->rows()) + "x" +
                              std::to_string(target->cols()));
      }
      std::memcpy(target->data(), a.data.data(), a.data.size() * sizeof(float));
      ++used;
    }
    auto st = ck.optimizer_steps.find(name + ' ' + p->name);
    if (st == ck.optimizer_steps.end()) throw CorruptionError("checkpoint lacks optimiser step for " + p->name);
    p->step = st->second;
    p->zero_grad();
  }
  if (used != index.size()) throw CorruptionError("checkpoint store '" + name + "' has arrays this model lacks");
}

}  // namespace liam::io
