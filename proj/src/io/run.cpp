#include "liam/io/run.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <thread>

#include "liam/io/config_file.hpp"
#include "liam/io/network_policy.hpp"

namespace liam::io {
namespace fs = std::filesystem;

nn::Rng evaluation_rng(std::uint64_t seed, long step, std::uint64_t stream) {
  const auto s = static_cast<std::uint64_t>(step);
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(s), std::uint32_t(s >> 32),
                    std::uint32_t(stream), std::uint32_t(0x5eed)};
  return nn::Rng(seq);
}

Evaluation evaluate(const rl::Learner32& learner, const env::EnvPreset& preset, const pool::FixedPolicyPool& pool,
                    int episodes, std::uint64_t seed, long step, bool deterministic) {
  if (episodes < 1) throw UsageError("evaluate: need at least one episode");
  Evaluation out;
  const unsigned workers =
      deterministic ? 1u : std::clamp(std::thread::hardware_concurrency(), 1u, static_cast<unsigned>(episodes));
  if (workers <= 1) {
    auto env = env::make_environment(preset);
    nn::Rng rng = evaluation_rng(seed, step);
    out.episodes = eval::run_episodes(learner, *env, pool, episodes, rng);
  } else {
    std::vector<std::vector<eval::EpisodeRecord>> parts(workers);
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) {
      const int count = episodes / int(workers) + (int(w) < episodes % int(workers) ? 1 : 0);
      threads.emplace_back([&, w, count] {
        auto env = env::make_environment(preset);
        nn::Rng rng = evaluation_rng(seed, step, w + 1);
        parts[w] = eval::run_episodes(learner, *env, pool, count, rng);
      });
    }
    for (auto& t : threads) t.join();
    for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(out.episodes));
  }
  std::vector<double> returns;
  for (const auto& e : out.episodes) returns.push_back(e.episode_return());
  out.returns = eval::summarize_returns(std::move(returns));
  out.action_recon_acc = learner.spec().has_action_head()
                             ? eval::action_reconstruction_accuracy(learner, out.episodes).overall()
                             : std::nan("");
  return out;
}

Evaluation evaluate(const rl::Trainer& trainer, int episodes) {
  const auto& c = trainer.config();
  return evaluate(trainer.learner(), trainer.preset(), trainer.pool(), episodes, c.seed, trainer.step(),
                  c.deterministic);
}

std::unique_ptr<rl::Trainer> make_trainer(const rl::RunConfig& config) {
  auto trainer = std::make_unique<rl::Trainer>(config);
  if (!config.plugins.empty()) apply_plugins(*trainer, config.plugins);
  return trainer;
}

void save_trainer(const fs::path& dir, rl::Trainer& trainer) {
  std::vector<NamedStore> stores{{"model", &trainer.learner().model().store()},
                                 {"agent", &trainer.learner().agent_store()}};
  save_checkpoint(dir, trainer.config(), stores, trainer.rng(), trainer.step(), trainer.episodes());
}

std::unique_ptr<rl::Trainer> restore_trainer(const Checkpoint& ck, const std::optional<rl::RunConfig>& config) {
  auto trainer = make_trainer(config ? *config : ck.config);
  restore_store(ck, "model", trainer->learner().model().store());
  restore_store(ck, "agent", trainer->learner().agent_store());
  trainer->rng() = ck.rng();
  trainer->set_step(ck.step);
  trainer->set_episodes(ck.episodes);
  return trainer;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  out.flush();
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

}  // namespace

void train(const rl::RunConfig& config, const Checkpoint* resume, std::ostream* log) {
  config.validate();
  if (config.out.empty()) throw ConfigError("out: a run directory is required for training");
  const fs::path out = config.out;
  std::error_code ec;
  fs::create_directories(out / "checkpoints", ec);
  if (ec) throw IoError("cannot create '" + out.string() + "': " + ec.message());

  auto trainer = resume != nullptr ? restore_trainer(*resume, config) : make_trainer(config);
  write_text(out / "config.ini", config_text(config));
  {
    std::ofstream manifest(out / "pool_manifest.txt", std::ios::trunc);
    pool::write_manifest(manifest, trainer->pool(), config.env, pool::parse_pool_mode(config.pool_mode),
                         config.seed);
    if (!manifest) throw IoError("cannot write pool manifest under '" + out.string() + "'");
  }
  JsonLinesWriter metrics(out / "metrics.jsonl", resume != nullptr);

  auto checkpoint = [&](rl::Trainer& t) {
    const std::string name = "step_" + std::to_string(t.step());
    save_trainer(out / "checkpoints" / name, t);
    write_text(out / "checkpoints" / "latest", name + "\n");
  };
  long next_checkpoint = config.checkpoint_every > 0
                             ? (trainer->step() / config.checkpoint_every + 1) * config.checkpoint_every
                             : -1;

  long last_logged = -1;
  auto on_episodes = [&](rl::Trainer& t) {
    if (t.step() == last_logged) return;
    last_logged = t.step();
    const Evaluation e = evaluate(t, config.eval_episodes);
    MetricsRecord r;
    r.step = t.step();
    r.mean_return = e.returns.mean;
    r.std_return = e.returns.std;
    r.ed_loss = t.take_mean_ed_loss();
    r.action_recon_acc = e.action_recon_acc;
    r.seed = config.seed;
    r.variant = config.variant;
    r.episodes = t.episodes();
    append_metrics(metrics, r);
    if (log != nullptr) {
      *log << "step " << r.step << "  return " << r.mean_return << " +- " << e.returns.stderr_mean << "  ed_loss "
           << r.ed_loss << "  action_acc " << r.action_recon_acc << std::endl;
    }
    if (next_checkpoint > 0 && t.step() >= next_checkpoint) {
      checkpoint(t);
      while (next_checkpoint <= t.step()) next_checkpoint += config.checkpoint_every;
    }
  };
  trainer->run(on_episodes, config.eval_every_episodes);
  checkpoint(*trainer);
}

}  // namespace liam::io
