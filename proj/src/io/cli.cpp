#include "liam/io/cli.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <map>
#include <optional>
#include <ostream>

#include "liam/io/config_file.hpp"
#include "liam/io/network_policy.hpp"
#include "liam/io/run.hpp"

namespace liam::io {
namespace {

struct RunFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  bool deterministic = true;
  CLI::Option* deterministic_opt = nullptr;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& type,
           const std::string& help) {
    options.emplace_back(key, app->add_option(flag, values[key], help)->type_name(type));
  }

  void add_deterministic(CLI::App* app, const std::string& help) {
    deterministic_opt = app->add_flag("--deterministic,!--parallel", deterministic, help);
  }

  // Flags that map onto RunConfig keys; the pool builder only needs the first few.
  void attach(CLI::App* app, bool training) {
    app->add_option("--config", config_path, "Config file (sections [run] [training] [model] [eval])")
        ->check(CLI::ExistingFile);
    add(app, "--env", "env", "NAME", "Environment preset: dsl, dsl-lite, lbf, lbf-small, pp");
    add(app, "--seed", "seed", "UINT", "Run seed");
    add(app, "--pool-mode", "pool_mode", "MODE", "paired or cartesian");
    if (!training) return;
    add(app, "--variant", "variant", "NAME", "Agent model: liam, fiam, nam, cbam, carl, liam-vae, liam-local, ...");
    add(app, "--steps", "steps", "INT", "Environment step budget summed over parallel envs");
    add(app, "--lr-rl", "lr_rl", "FLOAT", "Actor-critic learning rate");
    add(app, "--lr-ed", "lr_ed", "FLOAT", "Agent model learning rate");
    add(app, "--entropy-beta", "entropy_beta", "FLOAT|auto", "Entropy bonus weight");
    add(app, "--envs", "envs", "INT", "Parallel environments");
    add(app, "--update-freq", "update_freq", "INT", "Steps per update segment");
    add(app, "--out", "out", "DIR", "Run directory");
    add_deterministic(app, "Sequential stepping and single-stream evaluation (default on; --parallel turns it off)");
  }

  // File values first, then any flag given on the command line.
  rl::RunConfig resolve(std::optional<rl::RunConfig> base = std::nullopt) const {
    rl::RunConfig config = base ? *base : rl::RunConfig{};
    if (!config_path.empty()) config = load_config(config_path);
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) set_config_value(config, key, values.at(key));
    }
    if (deterministic_opt != nullptr && deterministic_opt->count() > 0) config.deterministic = deterministic;
    config.validate();
    return config;
  }
};

struct Subcommand {
  CLI::App* app = nullptr;
  RunFlags flags;
  std::string checkpoint;
  int episodes = 100;
  std::string kind;
  int at_step = 20;
  std::string out;
  std::string traces;
  int size = 0;
};

void print_json_line(std::ostream& out, const nlohmann::json& j) { out << j.dump() << '\n'; }

std::unique_ptr<rl::Trainer> trainer_from(const Subcommand& s) {
  const Checkpoint ck = load_checkpoint(s.checkpoint);
  rl::RunConfig config = s.flags.resolve(ck.config);
  return restore_trainer(ck, config);
}

int run_train(Subcommand& s, std::ostream& out) {
  if (!s.checkpoint.empty()) {
    const Checkpoint ck = load_checkpoint(s.checkpoint);
    train(s.flags.resolve(ck.config), &ck, &out);
  } else {
    train(s.flags.resolve(), nullptr, &out);
  }
  return 0;
}

int run_evaluate(Subcommand& s, std::ostream& out) {
  auto trainer = trainer_from(s);
  const Evaluation e = evaluate(*trainer, s.episodes);
  if (!s.out.empty()) {
    JsonLinesWriter w(s.out);
    for (std::size_t i = 0; i < e.episodes.size(); ++i) append_trajectory(w, e.episodes[i], long(i));
  }
  out << std::setprecision(10) << "mean_return " << e.returns.mean << " +- " << e.returns.stderr_mean
      << " (stderr, " << e.episodes.size() << " episodes, step " << trainer->step() << ")\n";
  return 0;
}

int run_probe(Subcommand& s, std::ostream& out) {
  auto trainer = trainer_from(s);
  const Evaluation e = evaluate(*trainer, s.episodes);
  std::ofstream file;
  if (!s.out.empty()) {
    file.open(s.out, std::ios::trunc);
    if (!file) throw IoError("cannot write '" + s.out + "'");
  }
  std::ostream& sink = s.out.empty() ? out : file;
  eval::AccuracyCurve curve;
  if (s.kind == "action") {
    curve = eval::action_reconstruction_accuracy(trainer->learner(), e.episodes);
  } else {
    const auto report = eval::colour_identification_accuracy(trainer->learner(), trainer->spec(), e.episodes);
    curve = report.curve;
    if (!s.traces.empty()) {
      JsonLinesWriter w(s.traces);
      for (std::size_t i = 0; i < report.traces.size(); ++i) {
        for (std::size_t t = 0; t < report.traces[i].size(); ++t) {
          const auto& v = report.traces[i][t];
          w.write({{"episode", i}, {"t", t}, {"colour", {v(0), v(1), v(2)}}, {"true_colour", report.true_colour[i]}});
        }
      }
    }
  }
  for (std::size_t t = 0; t < curve.total.size(); ++t) {
    print_json_line(sink, {{"kind", s.kind}, {"t", t}, {"accuracy", curve.at(t)}, {"samples", curve.total[t]}});
  }
  sink.flush();
  if (!sink) throw IoError("write failed for probe output");
  return 0;
}

int run_dump(Subcommand& s, std::ostream& out) {
  auto trainer = trainer_from(s);
  const Evaluation e = evaluate(*trainer, s.episodes);
  const auto table = eval::embeddings_at(e.episodes, s.at_step);
  eval::dump_embeddings(s.out, table);
  const auto sil = eval::silhouette_by_policy(table);
  out << "wrote " << s.out << ".csv and " << s.out << "_pca.csv (" << table.z.rows() << " rows)\n";
  out << "silhouette_by_policy " << sil.score << '\n';
  return 0;
}

int run_make_pool(Subcommand& s, std::ostream& out) {
  const rl::RunConfig config = s.flags.resolve();
  const auto& preset = env::find_preset(config.env);
  const auto mode = pool::parse_pool_mode(config.pool_mode);
  auto pool = pool::build_pool(preset, mode, config.seed, s.size > 0 ? s.size : config.pool_size);
  if (!config.plugins.empty()) {
    auto env = env::make_environment(preset);
    apply_plugins(pool, env->spec(), config.plugins);
  }
  if (s.out.empty()) {
    pool::write_manifest(out, pool, config.env, mode, config.seed);
  } else {
    std::ofstream file(s.out, std::ios::trunc);
    pool::write_manifest(file, pool, config.env, mode, config.seed);
    if (!file) throw IoError("cannot write '" + s.out + "'");
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Agent modelling workbench: train, evaluate and probe agents that model others from local observations."};
  app.name("liam");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Same as --help");

  Subcommand train_cmd, eval_cmd, probe_cmd, dump_cmd, pool_cmd;
  train_cmd.app = app.add_subcommand("train", "Train an agent; writes config, pool manifest, metrics and checkpoints");
  train_cmd.flags.attach(train_cmd.app, true);
  train_cmd.app->add_option("--checkpoint", train_cmd.checkpoint, "Resume from this checkpoint directory");

  eval_cmd.app = app.add_subcommand("evaluate", "Print mean return +- stderr of a checkpoint");
  probe_cmd.app = app.add_subcommand("probe", "Per-step reconstruction accuracy as JSON Lines");
  dump_cmd.app = app.add_subcommand("dump-embeddings", "Write embeddings at one time step as CSV plus a 2-D PCA");
  for (Subcommand* s : {&eval_cmd, &probe_cmd, &dump_cmd}) {
    s->app->add_option("--checkpoint", s->checkpoint, "Checkpoint directory")->required();
    s->app->add_option("--episodes", s->episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
    s->flags.add(s->app, "--seed", "seed", "UINT", "Evaluation seed (default: the run seed)");
    s->flags.add_deterministic(s->app, "Single-stream evaluation (default on; --parallel spreads over threads)");
  }
  eval_cmd.app->add_option("--out", eval_cmd.out, "Also write the episodes as trajectory JSON Lines");
  probe_cmd.app->add_option("--kind", probe_cmd.kind, "action or colour")
      ->required()
      ->check(CLI::IsMember({"action", "colour"}));
  probe_cmd.app->add_option("--out", probe_cmd.out, "Write to a file instead of stdout");
  probe_cmd.app->add_option("--traces", probe_cmd.traces, "Colour probe: per-episode belief traces (JSON Lines)");
  dump_cmd.app->add_option("--at-step", dump_cmd.at_step, "Episode time step to sample")->check(CLI::NonNegativeNumber);
  dump_cmd.app->add_option("--out", dump_cmd.out, "Output prefix")->required();

  pool_cmd.app = app.add_subcommand("make-pool", "Print or write the fixed policy pool manifest");
  pool_cmd.flags.attach(pool_cmd.app, false);
  pool_cmd.app->add_option("--size", pool_cmd.size, "Pool size (default: preset)")->check(CLI::NonNegativeNumber);
  pool_cmd.app->add_option("--out", pool_cmd.out, "Manifest path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun 'liam --help' for the flag reference.\n";
    return 2;
  }

  try {
    if (train_cmd.app->parsed()) return run_train(train_cmd, out);
    if (eval_cmd.app->parsed()) return run_evaluate(eval_cmd, out);
    if (probe_cmd.app->parsed()) return run_probe(probe_cmd, out);
    if (dump_cmd.app->parsed()) return run_dump(dump_cmd, out);
    if (pool_cmd.app->parsed()) return run_make_pool(pool_cmd, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const VersionError& e) {
    err << "version error: " << e.what() << '\n';
    return 3;
  } catch (const CorruptionError& e) {
    err << "corrupt file: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace liam::io
