#include <gtest/gtest.h>

#include <atomic>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "liam/io/checkpoint.hpp"
#include "liam/io/cli.hpp"
#include "liam/io/config_file.hpp"
#include "liam/io/network_policy.hpp"
#include "liam/io/records.hpp"
#include "liam/io/run.hpp"

using namespace liam;
using namespace liam::io;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("liam_io_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string config_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_config(in);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

rl::RunConfig small_config(const std::string& env = "dsl-lite", const std::string& variant = "liam") {
  rl::RunConfig c;
  c.env = env;
  c.variant = variant;
  c.hidden = 16;
  c.embedding = 16;
  c.latent = 8;
  c.envs = 4;
  c.update_freq = 10;
  c.seed = 5;
  c.eval_episodes = 8;
  c.eval_every_episodes = 20;
  return c;
}

std::vector<char> all_bytes(const nn::ParameterStore<float>& store) {
  std::vector<char> out;
  for (const auto& p : store) {
    for (const auto* t : {&p->value, &p->adam_m, &p->adam_v}) {
      const auto* d = reinterpret_cast<const char*>(t->data());
      out.insert(out.end(), d, d + t->size() * Eigen::Index(sizeof(float)));
    }
    const auto* s = reinterpret_cast<const char*>(&p->step);
    out.insert(out.end(), s, s + sizeof(p->step));
  }
  return out;
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "liam");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text != nullptr) *out_text = out.str();
  if (err_text != nullptr) *err_text = err.str();
  return code;
}

}  // namespace

// --- configuration ------------------------------------------------------

TEST(ConfigFile, SectionsAndDefaults) {
  std::istringstream in(
      "# comment\n[run]\nenv = lbf-small\nvariant = fiam\nseed = 7\n\n[training]\nlr_rl = 1e-4\nenvs = 3\n"
      "[model]\nhidden = 32\n");
  const auto c = parse_config(in);
  EXPECT_EQ(c.env, "lbf-small");
  EXPECT_EQ(c.variant, "fiam");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.lr_rl, 1e-4);
  EXPECT_EQ(c.envs, 3);
  EXPECT_EQ(c.hidden, 32);
  const rl::RunConfig defaults;
  EXPECT_EQ(c.lr_ed, defaults.lr_ed);
  EXPECT_EQ(c.update_freq, defaults.update_freq);
  EXPECT_FALSE(c.entropy_beta.has_value());
}

TEST(ConfigFile, TopLevelKeysAreAccepted) {
  std::istringstream in("env = pp\nvariant = nam\n");
  EXPECT_EQ(parse_config(in).env, "pp");
}

TEST(ConfigFile, EmptyEnvNamesEnv) {
  EXPECT_TRUE(starts_with(config_error("[run]\nenv =\nvariant = liam\n"), "env"));
  EXPECT_TRUE(starts_with(config_error("[run]\nenv = \"\"\nvariant = liam\n"), "env"));
}

TEST(ConfigFile, NegativeEntropyIsARangeError) {
  const auto msg = config_error("[run]\nenv = dsl\nvariant = liam\n[training]\nentropy_beta = -0.1\n");
  EXPECT_TRUE(starts_with(msg, "entropy_beta")) << msg;
}

TEST(ConfigFile, UnknownKeyIsRejected) {
  EXPECT_TRUE(starts_with(config_error("[run]\nenv = dsl\nvariant = liam\nlearning_rate = 3\n"), "run.learning_rate"));
  EXPECT_TRUE(starts_with(config_error("[run]\nenv = dsl\nvariant = liam\n[training]\nhidden = 3\n"), "training.hidden"));
  EXPECT_TRUE(starts_with(config_error("[bogus]\nenv = dsl\n"), "bogus.env"));
}

TEST(ConfigFile, MissingRequiredKeyIsNamed) {
  EXPECT_TRUE(starts_with(config_error("[run]\nenv = dsl\n"), "variant"));
  EXPECT_TRUE(starts_with(config_error("[run]\nvariant = liam\n"), "env"));
}

TEST(ConfigFile, MalformedValuesAreNamed) {
  EXPECT_TRUE(starts_with(config_error("env = dsl\nvariant = liam\nsteps = lots\n"), "steps"));
  EXPECT_TRUE(starts_with(config_error("env = dsl\nvariant = liam\nlr_ed = 1e-3x\n"), "lr_ed"));
  EXPECT_TRUE(starts_with(config_error("env = dsl\nvariant = liam\ndeterministic = maybe\n"), "deterministic"));
  EXPECT_TRUE(starts_with(config_error("env = dsl\nvariant = liam\nenvs = 1\nenvs = 2\n"), "envs"));
  EXPECT_TRUE(starts_with(config_error("env = mars\nvariant = liam\n"), "env"));
}

TEST(ConfigFile, FlagOverridesFileValue) {
  std::istringstream in("[run]\nenv = dsl\nvariant = liam\n[training]\nlr_rl = 5e-4\n");
  auto c = parse_config(in);
  set_config_value(c, "lr_rl", "1e-4");
  EXPECT_EQ(c.lr_rl, 1e-4);
  EXPECT_THROW(set_config_value(c, "nope", "1"), ConfigError);
}

TEST(ConfigFile, EchoParsesBackExactly) {
  rl::RunConfig c = small_config("lbf-small", "liam-vae");
  c.lr_rl = 0.1 + 0.2;  // not exactly representable in short decimal form
  c.entropy_beta = 1.0 / 3.0;
  c.out = "runs/with space";
  c.normalize_advantages = true;
  c.plugins = "0:0=/tmp/x";
  const std::string text = config_text(c);
  std::istringstream in(text);
  const auto back = parse_config(in);
  EXPECT_EQ(config_text(back), text);
  EXPECT_EQ(back.lr_rl, c.lr_rl);
  EXPECT_EQ(*back.entropy_beta, *c.entropy_beta);
  EXPECT_EQ(back.out, c.out);

  c.entropy_beta.reset();
  std::istringstream in2(config_text(c));
  EXPECT_FALSE(parse_config(in2).entropy_beta.has_value());
}

TEST(ConfigFile, MissingFileIsAnIoError) { EXPECT_THROW(load_config("/nonexistent/cfg.ini"), IoError); }

// --- checkpoints ----------------------------------------------------------

TEST(Checkpoint, Crc32MatchesTheStandardCheckValue) {
  const char text[] = "123456789";
  EXPECT_EQ(crc32_bytes(text, 9), 0xCBF43926u);
}

TEST(Checkpoint, RoundTripRestoresEverythingBitExactly) {
  TempDir tmp;
  auto config = small_config();
  rl::Trainer a(config);
  for (int i = 0; i < 3; ++i) a.update();
  save_trainer(tmp.path / "ck", a);

  // A trainer built from another seed starts from different parameters.
  auto other = config;
  other.seed = 99;
  const Checkpoint ck = load_checkpoint(tmp.path / "ck");
  auto b = restore_trainer(ck, other);
  EXPECT_EQ(all_bytes(a.learner().model().store()), all_bytes(b->learner().model().store()));
  EXPECT_EQ(all_bytes(a.learner().agent_store()), all_bytes(b->learner().agent_store()));
  EXPECT_EQ(b->step(), a.step());
  EXPECT_EQ(b->episodes(), a.episodes());
  EXPECT_EQ(ck.config.seed, config.seed);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(b->rng()(), a.rng()());

  // Forward pass on a fixed input.
  const auto& dims = a.learner().dims();
  models::StepInputs<float> in;
  std::mt19937 gen(1);
  std::normal_distribution<float> n;
  auto fill = [&](Eigen::Index cols) {
    nn::Tensor<float> t(3, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = n(gen);
    return t;
  };
  in.obs = fill(dims.controlled_obs);
  in.modelled_obs = fill(dims.modelled_obs);
  in.prev_action = fill(dims.controlled_action_width());
  in.modelled_prev_action = fill(dims.modelled_action_width());
  auto sa = a.learner().initial_state(3);
  auto sb = b->learner().initial_state(3);
  for (int t = 0; t < 4; ++t) {
    const auto za = a.learner().embed(sa, in);
    const auto zb = b->learner().embed(sb, in);
    ASSERT_EQ(std::memcmp(za.data(), zb.data(), sizeof(float) * std::size_t(za.size())), 0);
    const auto pa = a.learner().policy(rl::Learner32::policy_input(in.obs, za));
    const auto pb = b->learner().policy(rl::Learner32::policy_input(in.obs, zb));
    ASSERT_EQ(std::memcmp(pa.logits.data(), pb.logits.data(), sizeof(float) * std::size_t(pa.logits.size())), 0);
    ASSERT_EQ(std::memcmp(pa.values.data(), pb.values.data(), sizeof(float) * std::size_t(pa.values.size())), 0);
  }
}

TEST(Checkpoint, PayloadIsLittleEndianFloat32AtManifestOffsets) {
  TempDir tmp;
  nn::ParameterStore<float> store;
  nn::Tensor<float> w(2, 3);
  w << 1.0f, -2.5f, 0.1f, 3e-8f, 1e30f, -0.0f;
  store.add("w", w);
  save_checkpoint(tmp.path, small_config(), {{"s", &store}}, nn::Rng(3), 7, 2);
  const std::string bytes = slurp(tmp.path / "params.bin");
  ASSERT_EQ(bytes.size(), 3u * 6u * 4u);
  for (int i = 0; i < 6; ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= std::uint32_t(static_cast<unsigned char>(bytes[std::size_t(4 * i + k)])) << (8 * k);
    float f;
    std::memcpy(&f, &bits, 4);
    EXPECT_EQ(std::memcmp(&f, w.data() + i, 4), 0) << i;
  }
  const std::string manifest = slurp(tmp.path / "manifest.txt");
  EXPECT_NE(manifest.find("array = s w value 2 3 0 "), std::string::npos);
  EXPECT_NE(manifest.find("array = s w adam_m 2 3 24 "), std::string::npos);
  EXPECT_NE(manifest.find("step = 7\n"), std::string::npos);
  EXPECT_FALSE(fs::exists(tmp.path / "manifest.txt.tmp"));
  EXPECT_FALSE(fs::exists(tmp.path / "params.bin.tmp"));
}

class CheckpointDamage : public ::testing::Test {
 protected:
  void SetUp() override {
    store.add("a", nn::Tensor<float>::Constant(4, 4, 0.5f));
    store.add("b", nn::Tensor<float>::Constant(1, 4, -1.0f));
    save_checkpoint(tmp.path, small_config(), {{"s", &store}}, nn::Rng(1), 10, 1);
  }
  TempDir tmp;
  nn::ParameterStore<float> store;
};

TEST_F(CheckpointDamage, TruncatedPayloadIsCorruption) {
  std::string bytes = slurp(tmp.path / "params.bin");
  spit(tmp.path / "params.bin", bytes.substr(0, bytes.size() - 7));
  EXPECT_THROW(load_checkpoint(tmp.path), CorruptionError);
}

TEST_F(CheckpointDamage, FlippedByteIsCorruption) {
  std::string bytes = slurp(tmp.path / "params.bin");
  bytes[5] = static_cast<char>(bytes[5] ^ 0x10);
  spit(tmp.path / "params.bin", bytes);
  EXPECT_THROW(load_checkpoint(tmp.path), CorruptionError);
}

TEST_F(CheckpointDamage, TruncatedManifestIsCorruption) {
  const std::string text = slurp(tmp.path / "manifest.txt");
  spit(tmp.path / "manifest.txt", text.substr(0, text.find("payload")));
  EXPECT_THROW(load_checkpoint(tmp.path), CorruptionError);
  spit(tmp.path / "manifest.txt", text.substr(0, text.size() / 2));
  EXPECT_THROW(load_checkpoint(tmp.path), CorruptionError);
}

TEST_F(CheckpointDamage, EditedConfigIsCorruption) {
  spit(tmp.path / "config.ini", slurp(tmp.path / "config.ini") + "\n");
  EXPECT_THROW(load_checkpoint(tmp.path), CorruptionError);
}

TEST_F(CheckpointDamage, NewerVersionIsRejected) {
  std::string text = slurp(tmp.path / "manifest.txt");
  const auto at = text.find("format_version = 1");
  text.replace(at, 18, "format_version = 2");
  spit(tmp.path / "manifest.txt", text);
  EXPECT_THROW(load_checkpoint(tmp.path), VersionError);
}

TEST_F(CheckpointDamage, MissingDirectoryIsAnIoError) {
  EXPECT_THROW(load_checkpoint(tmp.path / "nowhere"), IoError);
}

TEST_F(CheckpointDamage, ShapeMismatchOnRestoreIsCorruption) {
  const Checkpoint ck = load_checkpoint(tmp.path);
  nn::ParameterStore<float> wrong;
  wrong.add("a", nn::Tensor<float>::Zero(4, 5));
  wrong.add("b", nn::Tensor<float>::Zero(1, 4));
  EXPECT_THROW(restore_store(ck, "s", wrong), CorruptionError);
  nn::ParameterStore<float> fewer;
  fewer.add("a", nn::Tensor<float>::Zero(4, 4));
  EXPECT_THROW(restore_store(ck, "s", fewer), CorruptionError);
}

TEST(Checkpoint, ResumeWithoutFurtherStepsReproducesEvaluation) {
  TempDir tmp;
  for (const char* variant : {"liam", "nam", "carl"}) {
    rl::Trainer a(small_config("dsl-lite", variant));
    for (int i = 0; i < 4; ++i) a.update();
    const Evaluation before = evaluate(a, 12);
    save_trainer(tmp.path / variant, a);
    auto b = restore_trainer(load_checkpoint(tmp.path / variant));
    const Evaluation after = evaluate(*b, 12);
    ASSERT_EQ(after.returns.returns.size(), before.returns.returns.size());
    for (std::size_t i = 0; i < before.returns.returns.size(); ++i) {
      EXPECT_EQ(after.returns.returns[i], before.returns.returns[i]) << variant << " episode " << i;
    }
    EXPECT_EQ(after.returns.mean, before.returns.mean);
    EXPECT_TRUE(after.action_recon_acc == before.action_recon_acc ||
                (std::isnan(after.action_recon_acc) && std::isnan(before.action_recon_acc)));
  }
}

TEST(Checkpoint, ResumedTrainingIsReproducible) {
  TempDir tmp;
  rl::Trainer a(small_config());
  a.update();
  save_trainer(tmp.path, a);
  const Checkpoint ck = load_checkpoint(tmp.path);
  auto b = restore_trainer(ck);
  auto c = restore_trainer(ck);
  for (int i = 0; i < 3; ++i) {
    b->update();
    c->update();
  }
  EXPECT_EQ(all_bytes(b->learner().model().store()), all_bytes(c->learner().model().store()));
  EXPECT_EQ(all_bytes(b->learner().agent_store()), all_bytes(c->learner().agent_store()));
  EXPECT_NE(all_bytes(b->learner().agent_store()), all_bytes(a.learner().agent_store()));
}

// --- JSON Lines records -----------------------------------------------

TEST(Metrics, EachAppendIsOneParseableLine) {
  TempDir tmp;
  {
    JsonLinesWriter w(tmp.path / "m.jsonl");
    for (int i = 0; i < 3; ++i) {
      MetricsRecord r;
      r.step = 100 * i;
      r.mean_return = -i;
      r.seed = 4;
      r.variant = "liam";
      append_metrics(w, r);
      // Flushed before the writer goes away.
      EXPECT_EQ(read_json_lines(tmp.path / "m.jsonl").size(), std::size_t(i + 1));
    }
  }
  const auto lines = read_json_lines(tmp.path / "m.jsonl");
  ASSERT_EQ(lines.size(), 3u);
  for (const char* key : {"step", "mean_return", "std_return", "ed_loss", "action_recon_acc", "seed", "variant"}) {
    EXPECT_TRUE(lines[2].contains(key)) << key;
  }
  EXPECT_EQ(lines[2]["step"], 200);
  EXPECT_EQ(lines[1]["mean_return"], -1.0);
  EXPECT_FALSE(lines[0].contains("nonfinite"));
}

TEST(Metrics, NonFiniteValuesBecomeFlaggedStrings) {
  MetricsRecord r;
  r.ed_loss = std::nan("");
  r.mean_return = -std::numeric_limits<double>::infinity();
  const auto j = metrics_json(r);
  EXPECT_EQ(j["ed_loss"], "NaN");
  EXPECT_EQ(j["mean_return"], "NaN");
  ASSERT_TRUE(j.contains("nonfinite"));
  std::set<std::string> flagged(j["nonfinite"].begin(), j["nonfinite"].end());
  EXPECT_EQ(flagged, (std::set<std::string>{"ed_loss", "mean_return"}));
  EXPECT_NO_THROW(nlohmann::json::parse(j.dump()));
}

TEST(Metrics, ConcurrentAppendsNeverInterleave) {
  TempDir tmp;
  const int threads = 8, per_thread = 400;
  {
    JsonLinesWriter w(tmp.path / "m.jsonl");
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int i = 0; i < per_thread; ++i) {
          MetricsRecord r;
          r.step = t * per_thread + i;
          r.variant = std::string(200 + t, char('a' + t));  // long lines make tearing likely
          append_metrics(w, r);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  const auto lines = read_json_lines(tmp.path / "m.jsonl");
  ASSERT_EQ(lines.size(), std::size_t(threads * per_thread));
  std::set<long> steps;
  for (const auto& j : lines) {
    const long step = j["step"];
    const int t = int(step / per_thread);
    EXPECT_EQ(j["variant"], std::string(200 + t, char('a' + t)));
    steps.insert(step);
  }
  EXPECT_EQ(steps.size(), lines.size());
}

TEST(Metrics, UnwritablePathIsAnIoError) {
  EXPECT_THROW(JsonLinesWriter("/nonexistent/dir/m.jsonl"), IoError);
}

TEST(Trajectory, OneRecordPerStepWithPerAgentArrays) {
  TempDir tmp;
  rl::Trainer tr(small_config("lbf-small", "liam"));
  const Evaluation e = evaluate(tr, 3);
  {
    JsonLinesWriter w(tmp.path / "t.jsonl");
    for (std::size_t i = 0; i < e.episodes.size(); ++i) append_trajectory(w, e.episodes[i], long(i));
  }
  const auto lines = read_json_lines(tmp.path / "t.jsonl");
  std::size_t steps = 0;
  for (const auto& ep : e.episodes) steps += ep.steps.size();
  ASSERT_EQ(lines.size(), steps);
  const auto agents = tr.spec().action_spaces.size();
  std::vector<double> returns(e.episodes.size(), 0.0);
  for (const auto& j : lines) {
    EXPECT_EQ(j["obs"].size(), agents);
    EXPECT_EQ(j["actions"].size(), agents);
    EXPECT_EQ(j["rewards"].size(), agents);
    EXPECT_EQ(j["obs"][0].size(), std::size_t(tr.learner().dims().controlled_obs));
    returns[j["episode"].get<std::size_t>()] += j["rewards"][0].get<double>();
  }
  for (std::size_t i = 0; i < returns.size(); ++i) EXPECT_DOUBLE_EQ(returns[i], e.episodes[i].episode_return());
  EXPECT_TRUE(lines.back()["done"].get<bool>());
}

// --- network sub-policies -----------------------------------------------

TEST(NetworkPolicy, LogProbsMatchADirectForwardPass) {
  nn::Rng rng(4);
  NetworkPolicy policy({6, 8, 7}, {5, 2}, rng);
  env::Observation obs(6);
  obs << 0.3, -1.0, 2.0, 0.0, 0.5, -0.2;
  // Independent double-precision forward pass.
  const auto& s = policy.store();
  Eigen::RowVectorXd x = obs.transpose();
  for (int layer = 0; layer < 2; ++layer) {
    const auto& w = s.at("policy." + std::to_string(layer) + ".weight").value;
    const auto& b = s.at("policy." + std::to_string(layer) + ".bias").value;
    x = (x * w.cast<double>() + b.cast<double>()).eval();
    if (layer == 0) x = x.cwiseMax(0.0);
  }
  const Eigen::RowVectorXf lp = policy.log_probs(obs);
  int off = 0;
  for (int f : {5, 2}) {
    const double lse = std::log(x.segment(off, f).array().exp().sum());
    for (int j = 0; j < f; ++j) EXPECT_NEAR(lp(off + j), x(off + j) - lse, 1e-5);
    off += f;
  }
}

TEST(NetworkPolicy, SaveLoadRoundTripAndPlugIn) {
  TempDir tmp;
  const auto& preset = env::find_preset("dsl-lite");
  auto environment = env::make_environment(preset);
  const auto& spec = environment->spec();
  nn::Rng rng(9);
  NetworkPolicy policy({int(spec.layouts[1].size()), 12, spec.action_spaces[1].one_hot_width()},
                       spec.action_spaces[1].factors, rng);
  policy.save(tmp.path / "net", small_config());
  auto loaded = NetworkPolicy::load(tmp.path / "net", spec.action_spaces[1].factors);
  EXPECT_EQ(loaded->widths(), policy.widths());
  auto obs = environment->reset(3);
  const Eigen::RowVectorXf a = policy.log_probs(obs[1]);
  const Eigen::RowVectorXf b = loaded->log_probs(obs[1]);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(float) * std::size_t(a.size())), 0);

  auto pool = pool::build_pool(preset, pool::PoolMode::Paired, 1);
  apply_plugins(pool, spec, "1:0=" + (tmp.path / "net").string());
  EXPECT_EQ(pool[1].members[0]->kind(), "network");
  EXPECT_NE(pool[0].members[0]->kind(), "network");
  nn::Rng act_rng(1);
  const auto action = pool[1].act({obs[1]}, act_rng);
  ASSERT_EQ(action.size(), 1u);
  EXPECT_EQ(action[0].size(), spec.action_spaces[1].factors.size());

  EXPECT_THROW(apply_plugins(pool, spec, "1-0=" + tmp.path.string()), ConfigError);
  EXPECT_THROW(apply_plugins(pool, spec, "1:5=" + (tmp.path / "net").string()), ConfigError);
  EXPECT_THROW(NetworkPolicy::load(tmp.path / "net", {3}), DimensionError);
}

// --- command line -----------------------------------------------------------

TEST(Cli, UsageErrorsExitWithTwo) {
  std::string err;
  EXPECT_EQ(run_cli({}, nullptr, &err), 2);
  EXPECT_EQ(run_cli({"frobnicate"}, nullptr, &err), 2);
  EXPECT_EQ(run_cli({"train", "--no-such-flag"}, nullptr, &err), 2);
  EXPECT_EQ(run_cli({"probe", "--checkpoint", "x", "--kind", "smell"}, nullptr, &err), 2);
  EXPECT_EQ(run_cli({"evaluate"}, nullptr, &err), 2);
  EXPECT_EQ(run_cli({"train", "--env", "dsl", "--entropy-beta", "-0.1", "--out", "/tmp/unused"}, nullptr, &err), 2);
  EXPECT_NE(err.find("entropy_beta"), std::string::npos);
}

TEST(Cli, HelpListsEveryFlag) {
  std::string out;
  EXPECT_EQ(run_cli({"--help"}, &out), 0);
  for (const char* flag : {"--config", "--env", "--variant", "--seed", "--steps", "--lr-rl", "--lr-ed",
                           "--entropy-beta", "--envs", "--update-freq", "--pool-mode", "--out", "--deterministic",
                           "--checkpoint", "--episodes", "--kind", "--at-step", "train", "evaluate", "probe",
                           "dump-embeddings", "make-pool"}) {
    EXPECT_NE(out.find(flag), std::string::npos) << flag;
  }
}

TEST(Cli, FileErrorsExitWithThree) {
  std::string err;
  EXPECT_EQ(run_cli({"evaluate", "--checkpoint", "/nonexistent/ck"}, nullptr, &err), 3);
}

TEST(Cli, MakePoolPrintsTheManifest) {
  std::string out;
  ASSERT_EQ(run_cli({"make-pool", "--env", "lbf-small", "--seed", "2"}, &out), 0);
  EXPECT_NE(out.find("env = lbf-small"), std::string::npos);
  EXPECT_NE(out.find("[policy 9]"), std::string::npos);
}

TEST(Cli, TrainWritesARunDirectoryAndCheckpointsServeEveryCommand) {
  TempDir tmp;
  const fs::path cfg = tmp.path / "cfg.ini";
  spit(cfg, "[run]\nenv = dsl-lite\nvariant = liam\nsteps = 4000\n[training]\nenvs = 4\nlr_rl = 5e-4\n"
            "[model]\nhidden = 16\nembedding = 16\nlatent = 8\n[eval]\neval_every_episodes = 40\neval_episodes = 10\n");
  const fs::path run = tmp.path / "run";
  std::string out, err;
  ASSERT_EQ(run_cli({"train", "--config", cfg.string(), "--seed", "1", "--lr-rl", "1e-4", "--out", run.string()}, &out,
                    &err),
            0)
      << err;
  for (const char* f : {"config.ini", "pool_manifest.txt", "metrics.jsonl", "checkpoints/latest"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  const auto echoed = load_config(run / "config.ini");
  EXPECT_EQ(echoed.lr_rl, 1e-4);
  EXPECT_EQ(echoed.envs, 4);
  const auto metrics = read_json_lines(run / "metrics.jsonl");
  ASSERT_FALSE(metrics.empty());
  EXPECT_EQ(metrics.back()["step"], 4000);

  std::string latest = slurp(run / "checkpoints" / "latest");
  latest.erase(latest.find_last_not_of('\n') + 1);
  const std::string ck = (run / "checkpoints" / latest).string();

  // The checkpoint's evaluation reproduces the last metrics record.
  ASSERT_EQ(run_cli({"evaluate", "--checkpoint", ck, "--episodes", "10"}, &out, &err), 0) << err;
  std::ostringstream expected;
  expected.precision(10);
  expected << "mean_return " << metrics.back()["mean_return"].get<double>() << " +- ";
  EXPECT_EQ(out.rfind(expected.str(), 0), 0u) << out;

  ASSERT_EQ(run_cli({"probe", "--checkpoint", ck, "--kind", "colour", "--episodes", "12"}, &out, &err), 0) << err;
  std::istringstream lines(out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["t"], n);
    EXPECT_EQ(j["samples"], 12);
    ++n;
  }
  EXPECT_EQ(n, 25);

  const fs::path prefix = tmp.path / "emb";
  ASSERT_EQ(run_cli({"dump-embeddings", "--checkpoint", ck, "--episodes", "30", "--at-step", "20", "--out",
                     prefix.string()},
                    &out, &err),
            0)
      << err;
  EXPECT_TRUE(fs::exists(prefix.string() + ".csv"));
  EXPECT_TRUE(fs::exists(prefix.string() + "_pca.csv"));
  EXPECT_NE(out.find("silhouette_by_policy"), std::string::npos);

  // Resuming extends the same metrics file.
  ASSERT_EQ(run_cli({"train", "--checkpoint", ck, "--steps", "6000"}, &out, &err), 0) << err;
  const auto more = read_json_lines(run / "metrics.jsonl");
  EXPECT_GT(more.size(), metrics.size());
  EXPECT_EQ(more.back()["step"], 6000);
}

TEST(Cli, SameSeedGivesByteIdenticalMetrics) {
  TempDir tmp;
  for (const char* name : {"a", "b"}) {
    ASSERT_EQ(run_cli({"train", "--env", "lbf-small", "--variant", "liam", "--seed", "3", "--steps", "3000", "--envs",
                       "3", "--out", (tmp.path / name).string()}),
              0);
  }
  const std::string a = slurp(tmp.path / "a" / "metrics.jsonl");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(tmp.path / "b" / "metrics.jsonl"));
  EXPECT_EQ(slurp(tmp.path / "a" / "pool_manifest.txt"), slurp(tmp.path / "b" / "pool_manifest.txt"));
}
