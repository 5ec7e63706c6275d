// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "mavae/cli/commands.hpp"
#include "mavae/cli/config.hpp"
#include "mavae/errors.hpp"

namespace mavae::cli {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mavae_cli_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig tiny(const fs::path& root) {
  RunConfig c;
  c.data_dir = root / "data";
  c.run_dir = root / "run";
  c.data.n_train = 3;
  c.data.n_val = 2;
  c.data.n_test_normal = 2;
  c.data.anomalies_per_type = 1;
  c.data.synth.min_minutes = 1.0;
  c.data.synth.max_minutes = 1.0;
  c.model.window = 16;
  c.model.latent_width = 2;
  c.model.heads = 2;
  c.model.outer_units = 4;
  c.model.inner_units = 3;
  c.train.batch_size = 8;
  c.train.max_epochs = 2;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(RunConfig, DefaultsAreTheDeskExperiment) {
  const RunConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.model.window, 64u);
  EXPECT_EQ(c.model.input_width, 13u);
  EXPECT_EQ(c.model.latent_width, 8u);
  EXPECT_EQ(c.model.heads, 4u);
  EXPECT_EQ(c.model.resolved_key_width(), 2u);
  EXPECT_EQ(c.train.batch_size, 32u);
  EXPECT_LE(c.train.max_epochs, 500u);
  EXPECT_EQ(c.data.n_train, 60u);
  EXPECT_EQ(c.data.n_val, 12u);
  EXPECT_EQ(c.data.n_test_normal, 40u);
  EXPECT_EQ(c.data.anomalies_per_type, 4u);
}

TEST(RunConfig, ParsesSections) {
  std::istringstream in(
      "[run]\nseed = 7\nrun_dir = out\n"
      "[model]\nwindow = 32\nno_attention = true\n"
      "[train]\nlearning_rate = 0.0005\n"
      "[detect]\nreverse_mode = last\n");
  const RunConfig c = parse_run_config(in);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.run_dir, "out");
  EXPECT_EQ(c.model.window, 32u);
  EXPECT_TRUE(c.model.no_attention);
  EXPECT_EQ(c.train.optimizer.learning_rate, 0.0005);
  EXPECT_EQ(c.detect.mode, detect::ReverseMode::last);
  EXPECT_EQ(c.synth().seed, 7u);
  EXPECT_EQ(c.training().seed, 7u);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  for (const char* text : {"[model]\nwidht = 3\n", "[nonsense]\nx = 1\n", "[model]\nwindow = -4\n",
                           "[model]\nwindow = 12abc\n", "[model]\nno_attention = maybe\n",
                           "[detect]\nreverse_mode = median\n", "[train]\nbatch_size = 0\n",
                           "[model]\nwindow = 1\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(parse_run_config(in), ConfigError) << text;
  }
  std::istringstream broken("[model\nwindow = 3\n");
  EXPECT_THROW(parse_run_config(broken), ConfigError);
}

TEST(RunConfig, WriteParseRoundTrip) {
  RunConfig c;
  c.seed = 0xfeedbeefcafe1234ull;
  c.train.optimizer.learning_rate = 1.0 / 3.0;
  c.detect.mode = detect::ReverseMode::first;
  c.data.window_from_autocorr = true;
  std::stringstream s;
  write_run_config(s, c);
  const RunConfig back = parse_run_config(s);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.train.optimizer.learning_rate, c.train.optimizer.learning_rate);
  EXPECT_EQ(back.detect.mode, c.detect.mode);
  EXPECT_TRUE(back.data.window_from_autocorr);
  EXPECT_EQ(back.model, c.model);
}

TEST(RunConfig, Overrides) {
  RunConfig c;
  apply_override(c, "train.max_epochs=12");
  apply_override(c, " model.heads = 2");
  EXPECT_EQ(c.train.max_epochs, 12u);
  EXPECT_EQ(c.model.heads, 2u);
  EXPECT_THROW(apply_override(c, "train.max_epochs"), ConfigError);
  EXPECT_THROW(apply_override(c, "train.nope=1"), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/mavae.ini"), PathError);
}

TEST(ExitCodes, OnePerCategory) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), kExitConfig);
  EXPECT_EQ(exit_code_for(DataError("x")), kExitData);
  EXPECT_EQ(exit_code_for(PathError("x")), kExitPath);
  EXPECT_EQ(exit_code_for(ContractError("x")), kExitContract);
  EXPECT_EQ(exit_code_for(DimensionError("x")), kExitContract);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), kExitFailure);
}

TEST(Generate, DeterministicAndRefusesOverwrite) {
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  std::ostringstream log;
  const auto entries = generate_dataset(tiny(a), false, log);
  generate_dataset(tiny(b), false, log);
  ASSERT_EQ(entries.size(), 3u + 2u + 2u + 5u);
  for (const auto& e : entries) {
    EXPECT_EQ(slurp(a / "data" / e.path), slurp(b / "data" / e.path)) << e.path;
  }
  EXPECT_EQ(slurp(a / "data" / kManifestFile), slurp(b / "data" / kManifestFile));
  EXPECT_THROW(generate_dataset(tiny(a), false, log), PathError);
  EXPECT_NO_THROW(generate_dataset(tiny(a), true, log));
  fs::remove_all(a);
  fs::remove_all(b);
}

class TinyRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(scratch("run"));
    std::ostringstream log;
    generate_dataset(tiny(*root_), false, log);
    trained_ = new TrainedRun(train_run(tiny(*root_), log));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*root_);
    delete trained_;
    delete root_;
  }
  static fs::path* root_;
  static TrainedRun* trained_;
};

fs::path* TinyRun::root_ = nullptr;
TrainedRun* TinyRun::trained_ = nullptr;

TEST_F(TinyRun, WritesCheckpointHistoryAndConfig) {
  const RunConfig c = tiny(*root_);
  EXPECT_TRUE(fs::exists(c.run_dir / kHistoryFile));
  EXPECT_TRUE(fs::exists(c.run_dir / kConfigFile));
  const model::Checkpoint ckpt = model::load_checkpoint(c.run_dir / kCheckpointFile);
  EXPECT_EQ(ckpt.params, trained_->result.best_params);
  EXPECT_EQ(ckpt.config, trained_->checkpoint.config);
  const data::NormStats norm = checkpoint_norm(ckpt);
  EXPECT_EQ(norm.mean.size(), 13u);
  ASSERT_NE(ckpt.find_extra("meta.val_recon"), nullptr);
  EXPECT_EQ(ckpt.find_extra("meta.val_recon")->values()[0], trained_->result.best_val_recon);
  EXPECT_EQ(trained_->result.history.size(), 2u);
  const RunConfig saved = load_run_config(c.run_dir / kConfigFile);
  EXPECT_EQ(saved.model, c.model);
}

TEST_F(TinyRun, EvaluateWritesReportsAndNeverFlagsValidation) {
  const RunConfig c = tiny(*root_);
  std::ostringstream log;
  const Evaluation ev = evaluate_run(c, log);
  EXPECT_EQ(ev.validation_flagged, 0u);
  EXPECT_EQ(ev.test.size(), 7u);
  EXPECT_EQ(ev.summary.counts.tp + ev.summary.counts.fp + ev.summary.counts.fn + ev.summary.counts.tn, 7u);
  for (const auto& r : ev.test) {
    EXPECT_EQ(r.threshold, ev.tau);
    EXPECT_TRUE(fs::exists(c.run_dir / kReportDir / (r.id + ".csv")));
    EXPECT_TRUE(fs::exists(c.run_dir / kReportDir / (r.id + ".json")));
  }
  EXPECT_TRUE(fs::exists(c.run_dir / kSummaryFile));
  EXPECT_TRUE(fs::exists(c.run_dir / kCurveFile));
}

TEST_F(TinyRun, ReverseModesAllComplete) {
  std::ostringstream log;
  const ReverseComparison cmp = compare_reverse_modes(tiny(*root_), log);
  ASSERT_EQ(cmp.modes.size(), 3u);
  EXPECT_EQ(cmp.modes[0].first, detect::ReverseMode::mean);
  for (const auto& [mode, ev] : cmp.modes) EXPECT_EQ(ev.validation_flagged, 0u);
  EXPECT_NE(reverse_comparison_json(cmp).find("\"last\""), std::string::npos);
}

TEST_F(TinyRun, AttentionIsRowStochastic) {
  const RunConfig c = tiny(*root_);
  const PreparedData data = prepare_training_data(c);
  const AttentionCheck check =
      check_attention(trained_->checkpoint.config, trained_->checkpoint.params, data.val_windows, 4);
  EXPECT_EQ(check.windows, 4u);
  EXPECT_TRUE(check.row_stochastic());
  EXPECT_GE(check.min_weight, 0.0);
}

TEST_F(TinyRun, DetectsForeignValidationData) {
  RunConfig c = tiny(*root_);
  const fs::path other = scratch("foreign");
  RunConfig foreign = tiny(other);
  foreign.seed = 99;
  std::ostringstream log;
  generate_dataset(foreign, false, log);
  c.data_dir = foreign.data_dir;
  c.run_dir = *root_ / "run";
  EXPECT_THROW(evaluate_run(c, log), DataError);
  fs::remove_all(other);
}

}  // namespace
}  // namespace mavae::cli
