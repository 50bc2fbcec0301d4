#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "accident/cli/commands.hpp"
#include "accident/config.hpp"
#include "accident/training/checkpoint.hpp"
#include "test_util.hpp"

using namespace accident;

namespace {

struct Result {
  int code = 0;
  std::string out, log;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "accident");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, log;
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, log);
  r.out = out.str();
  r.log = log.str();
  return r;
}

/// Small dataset plus a config that keeps clips short and training quick.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::ofstream(dir / "config.json") << R"({
      "synth": {"frames": 20, "accident_frame": 15},
      "train": {"epochs": 1, "batch_size": 4, "learning_rate": 0.001},
      "alerts": {"reference_frame": 15}
    })";
    const Result r = run({"synth", "--config", cfg(), "--out", (dir / "data").string(), "--seed", "1",
                          "--positives", "5", "--negatives", "5"});
    ASSERT_EQ(r.code, 0) << r.log;
  }

  std::string cfg() const { return (dir / "config.json").string(); }
  std::string manifest() const { return (dir / "data" / "manifest.jsonl").string(); }

  /// Checkpoint whose score head is pinned far to one side.
  std::string biased_checkpoint(double bias) {
    const RunConfig c = load_config(cfg());
    AccidentModel model(c.model);
    model.params().at("anticipation.score.weight").value.fill(0.0);
    model.params().at("anticipation.score.bias").value.fill(bias);
    const std::string path = (dir / ("bias" + std::to_string(bias) + ".ckpt")).string();
    training::save_checkpoint(path, model.params(), {});
    return path;
  }

  testutil::TempDir dir{"cli"};
};

}  // namespace

TEST_F(CliTest, SynthWritesRequestedClips) {
  const Result r = run({"synth", "--config", cfg(), "--out", (dir / "more").string(), "--seed", "2",
                        "--positives", "10", "--negatives", "20"});
  ASSERT_EQ(r.code, 0) << r.log;
  std::size_t clips = 0;
  for (const auto& f : std::filesystem::directory_iterator(dir / "more")) clips += f.path().extension() == ".clip";
  EXPECT_EQ(clips, 30u);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["clips"], 30);
}

TEST_F(CliTest, UnwritableOutputIsIoExit) {
  std::ofstream(dir / "plain_file") << "x";
  const Result r = run({"synth", "--config", cfg(), "--out", (dir / "plain_file" / "sub").string(), "--positives",
                        "1", "--negatives", "1"});
  EXPECT_EQ(r.code, 3) << r.log;
}

TEST_F(CliTest, PhaseTwoWithoutCheckpointIsMissingPrerequisite) {
  const Result r = run({"train", "--config", cfg(), "--manifest", manifest(), "--phase", "2", "--out",
                        (dir / "run").string()});
  EXPECT_EQ(r.code, 4) << r.log;
  const Result missing = run({"train", "--config", cfg(), "--manifest", manifest(), "--phase", "2", "--checkpoint",
                              (dir / "nope.ckpt").string(), "--out", (dir / "run").string()});
  EXPECT_EQ(missing.code, 4) << missing.log;
}

TEST_F(CliTest, PhaseTwoOnProfileWithoutInvolvementIsMissingPrerequisite) {
  std::ofstream(dir / "ccd.json") << R"({"dataset": {"profile": "ccd"}, "train": {"epochs": 1}})";
  const Result r = run({"train", "--config", (dir / "ccd.json").string(), "--manifest", manifest(), "--phase", "2",
                        "--checkpoint", biased_checkpoint(0.0), "--out", (dir / "run").string()});
  EXPECT_EQ(r.code, 4) << r.log;
}

TEST_F(CliTest, TrainThenEvalPrintsFixedKeys) {
  const Result t = run({"train", "--config", cfg(), "--manifest", manifest(), "--out", (dir / "run").string()});
  ASSERT_EQ(t.code, 0) << t.log;
  const auto tj = nlohmann::json::parse(t.out);
  EXPECT_EQ(tj["phase"], 1);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "checkpoint_phase1.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "history_phase1.csv"));

  const Result e = run({"eval", "--config", cfg(), "--manifest", manifest(), "--checkpoint",
                        (dir / "run" / "checkpoint_phase1.ckpt").string(), "--out", (dir / "eval").string(),
                        "--sweep-iters"});
  ASSERT_EQ(e.code, 0) << e.log;
  const auto ej = nlohmann::json::parse(e.out);
  std::vector<std::string> keys;
  for (const auto& [k, v] : ej.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"AOLA", "AP", "TTA@R80", "mTTA"}));
  for (const char* f : {"scores.csv", "pr_curve.csv", "tta_sweep.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / "eval" / "curves" / f)) << f;
  EXPECT_TRUE(std::filesystem::exists(dir / "eval" / "iter_sweep.csv"));
}

TEST_F(CliTest, EvalWithoutCheckpointIsMissingPrerequisite) {
  EXPECT_EQ(run({"eval", "--config", cfg(), "--manifest", manifest()}).code, 4);
}

TEST_F(CliTest, AlertQuietAndFiring) {
  const std::string clip = (dir / "data" / "neg_0000.clip").string();
  const Result quiet = run({"alert", "--config", cfg(), "--checkpoint", biased_checkpoint(-20.0), "--clip", clip});
  ASSERT_EQ(quiet.code, 0) << quiet.log;
  EXPECT_EQ(quiet.out, "no alert\n");
  const Result loud = run({"alert", "--config", cfg(), "--checkpoint", biased_checkpoint(20.0), "--clip", clip});
  ASSERT_EQ(loud.code, 0) << loud.log;
  EXPECT_EQ(loud.out.rfind("Warning: possible accident in 0.65s", 0), 0u) << loud.out;
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  std::ofstream(dir / "bad.json") << R"({"train": {"epochz": 1}})";
  EXPECT_EQ(run({"train", "--config", (dir / "bad.json").string(), "--manifest", manifest()}).code, 2);
  EXPECT_EQ(run({"train", "--config", cfg(), "--manifest", manifest(), "--phase", "3"}).code, 2);
}

TEST_F(CliTest, AlertDeliveryFailureExitsFive) {
  std::ofstream(dir / "http.json") << R"({"synth": {"frames": 20, "accident_frame": 15},
    "alerts": {"client": "http", "endpoint": "http://127.0.0.1:1/v1/chat/completions",
               "retries": 0, "timeout_seconds": 1}})";
  const Result r = run({"alert", "--config", (dir / "http.json").string(), "--checkpoint", biased_checkpoint(20.0),
                        "--clip", (dir / "data" / "pos_0000.clip").string()});
  EXPECT_EQ(r.code, 5) << r.log;
}
