// SPDX-License-Identifier: Apache-2.0
// mavae: generate data, train, detect, evaluate.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "mavae/cli/commands.hpp"
#include "mavae/cli/config.hpp"
#include "mavae/errors.hpp"

namespace {

using namespace mavae;

// The trainer churns through many large short-lived buffers; keep glibc from
// mapping and unmapping them on every step.
void tune_allocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();

  CLI::App app{"MA-VAE multivariate time-series anomaly detection"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string data_dir, run_dir;
  app.add_option("-c,--config", config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "Override a config value, section.key=value (repeatable)");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--data-dir", data_dir, "Generated data directory");
  app.add_option("--run-dir", run_dir, "Directory for checkpoints and reports");

  bool force = false;
  auto* gen = app.add_subcommand("gen", "Generate the synthetic bench dataset");
  gen->add_flag("--force", force, "Overwrite an existing dataset");

  bool no_attention = false;
  auto* train = app.add_subcommand("train", "Train a model on the train split");
  train->add_flag("--no-attention", no_attention, "Train the variant without attention");

  auto* detect = app.add_subcommand("detect", "Threshold from validation, detect and score the test split");
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate with and without attention");
  auto* reverse = app.add_subcommand("compare-reverse", "Evaluate every reverse-window mode");
  auto* run = app.add_subcommand("run", "gen (if needed), train and detect");
  auto* show = app.add_subcommand("config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    cli::RunConfig config = config_path.empty() ? cli::RunConfig{} : cli::load_run_config(config_path);
    for (const auto& o : overrides) cli::apply_override(config, o);
    if (seed) config.seed = *seed;
    if (!data_dir.empty()) config.data_dir = data_dir;
    if (!run_dir.empty()) config.run_dir = run_dir;
    if (no_attention) config.model.no_attention = true;
    config.validate();

    std::ostream& log = std::cerr;
    if (*gen) {
      cli::generate_dataset(config, force, log);
    } else if (*train) {
      cli::train_run(config, log);
    } else if (*detect) {
      cli::evaluate_run(config, log);
    } else if (*ablate) {
      cli::run_ablation(config, log);
    } else if (*reverse) {
      cli::compare_reverse_modes(config, log);
    } else if (*run) {
      if (!std::filesystem::exists(config.data_dir / cli::kManifestFile)) {
        cli::generate_dataset(config, false, log);
      }
      cli::train_run(config, log);
      cli::evaluate_run(config, log);
    } else if (*show) {
      cli::write_run_config(std::cout, config);
    }
  } catch (const std::exception& e) {
    std::cerr << "mavae: " << e.what() << '\n';
    return cli::exit_code_for(e);
  }
  return cli::kExitOk;
}
