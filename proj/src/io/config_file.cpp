#include "liam/io/config_file.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace liam::io {
namespace {

using rl::RunConfig;

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ConfigError(key + ": cannot parse '" + text + "' as a number");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string t = CLI::detail::to_lower(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Key {
  std::string section;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Key number_key(std::string section, T RunConfig::*member) {
  return {std::move(section),
          [member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<T>(k, v); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

Key string_key(std::string section, std::string RunConfig::*member) {
  return {std::move(section), [member](RunConfig& c, const std::string&, const std::string& v) { c.*member = v; },
          [member](const RunConfig& c) { return c.*member; }};
}

Key bool_key(std::string section, bool RunConfig::*member) {
  return {std::move(section),
          [member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_bool(k, v); },
          [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

// Ordered as written by write_config.
const std::vector<std::pair<std::string, Key>>& keys() {
  static const std::vector<std::pair<std::string, Key>> table = {
      {"env", string_key("run", &RunConfig::env)},
      {"variant", string_key("run", &RunConfig::variant)},
      {"pool_mode", string_key("run", &RunConfig::pool_mode)},
      {"pool_size", number_key("run", &RunConfig::pool_size)},
      {"seed", number_key("run", &RunConfig::seed)},
      {"steps", number_key("run", &RunConfig::steps)},
      {"out", string_key("run", &RunConfig::out)},
      {"plugins", string_key("run", &RunConfig::plugins)},
      {"deterministic", bool_key("run", &RunConfig::deterministic)},
      {"checkpoint_every", number_key("run", &RunConfig::checkpoint_every)},
      {"lr_rl", number_key("training", &RunConfig::lr_rl)},
      {"lr_ed", number_key("training", &RunConfig::lr_ed)},
      {"entropy_beta",
       {"training",
        [](RunConfig& c, const std::string& k, const std::string& v) {
          if (CLI::detail::to_lower(v) == "auto") {
            c.entropy_beta.reset();
          } else {
            c.entropy_beta = parse_number<double>(k, v);
          }
        },
        [](const RunConfig& c) { return c.entropy_beta ? format_double(*c.entropy_beta) : std::string("auto"); }}},
      {"envs", number_key("training", &RunConfig::envs)},
      {"update_freq", number_key("training", &RunConfig::update_freq)},
      {"gamma", number_key("training", &RunConfig::gamma)},
      {"gae_lambda", number_key("training", &RunConfig::gae_lambda)},
      {"max_grad_norm", number_key("training", &RunConfig::max_grad_norm)},
      {"normalize_advantages", bool_key("training", &RunConfig::normalize_advantages)},
      {"bootstrap_time_limit", bool_key("training", &RunConfig::bootstrap_time_limit)},
      {"hidden", number_key("model", &RunConfig::hidden)},
      {"embedding", number_key("model", &RunConfig::embedding)},
      {"latent", number_key("model", &RunConfig::latent)},
      {"temperature", number_key("model", &RunConfig::temperature)},
      {"eval_every_episodes", number_key("eval", &RunConfig::eval_every_episodes)},
      {"eval_episodes", number_key("eval", &RunConfig::eval_episodes)},
  };
  return table;
}

const Key* find_key(const std::string& name) {
  for (const auto& [n, k] : keys()) {
    if (n == name) return &k;
  }
  return nullptr;
}

}  // namespace

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const Key* k = find_key(key);
  if (k == nullptr) throw ConfigError(key + ": unknown key");
  k->set(config, key, value);
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  RunConfig config;
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string full = item.fullname();
    if (item.parents.size() > 1) throw ConfigError(full + ": unknown key in " + source);
    const Key* k = find_key(item.name);
    if (k == nullptr) throw ConfigError(full + ": unknown key in " + source);
    if (!item.parents.empty() && item.parents[0] != k->section) {
      throw ConfigError(full + ": unknown key in " + source + " (belongs in [" + k->section + "])");
    }
    if (!seen.insert(item.name).second) throw ConfigError(item.name + ": given twice in " + source);
    if (item.inputs.size() > 1) throw ConfigError(item.name + ": expected a single value");
    k->set(config, item.name, item.inputs.empty() ? std::string() : item.inputs[0]);
  }
  for (const char* required : {"env", "variant"}) {
    if (seen.count(required) == 0) throw ConfigError(std::string(required) + ": missing from " + source);
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_config(in, path.string());
}

void write_config(std::ostream& out, const RunConfig& config) {
  std::string section;
  for (const auto& [name, key] : keys()) {
    if (key.section != section) {
      if (!section.empty()) out << '\n';
      section = key.section;
      out << '[' << section << "]\n";
    }
    std::string value = key.get(config);
    if (value.empty() || value.find_first_of(" \t#;=") != std::string::npos) value = '"' + value + '"';
    out << name << " = " << value << '\n';
  }
}

std::string config_text(const RunConfig& config) {
  std::ostringstream os;
  write_config(os, config);
  return os.str();
}

}  // namespace liam::io
