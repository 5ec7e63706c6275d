// SPDX-License-Identifier: Apache-2.0
#include "mavae/cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "mavae/datapipe/synth.hpp"
#include "mavae/errors.hpp"
#include "mavae/rng.hpp"

namespace mavae::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&error)) return kExitData;
  if (dynamic_cast<const PathError*>(&error)) return kExitPath;
  if (dynamic_cast<const ContractError*>(&error) || dynamic_cast<const DimensionError*>(&error)) {
    return kExitContract;
  }
  return kExitFailure;
}

namespace {

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw PathError("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw PathError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

Tensor vector_tensor(const std::vector<double>& v) { return Tensor({v.size()}, v); }

double scalar_extra(const model::Checkpoint& ckpt, const std::string& name) {
  const Tensor* t = ckpt.find_extra(name);
  if (!t || t->size() != 1) throw DataError("checkpoint lacks " + name);
  return t->values()[0];
}

std::vector<data::Sequence> normalised(std::vector<data::Sequence> seqs, const data::NormStats& norm) {
  for (auto& s : seqs) s = data::apply_norm(s, norm);
  return seqs;
}

std::size_t train_shift(const RunConfig& config, std::size_t window) {
  return config.data.train_shift != 0 ? config.data.train_shift : std::max<std::size_t>(1, window / 2);
}

void write_evaluation(const fs::path& dir, const Evaluation& ev,
                      const std::vector<std::string>& channels) {
  make_dirs(dir / kReportDir);
  auto write_reports = [&](const std::vector<detect::DetectionReport>& reports) {
    for (const auto& r : reports) {
      std::ofstream csv = open_out(dir / kReportDir / (r.id + ".csv"));
      detect::write_report_csv(csv, r, channels);
      open_out(dir / kReportDir / (r.id + ".json")) << detect::report_summary_json(r) << '\n';
    }
  };
  write_reports(ev.validation);
  write_reports(ev.test);
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(eval::summary_json(ev.summary));
  j["validation_flagged"] = ev.validation_flagged;
  open_out(dir / kSummaryFile) << j.dump(2) << '\n';
  std::ofstream curve = open_out(dir / kCurveFile);
  eval::write_curve_csv(curve, ev.curve);
}

nlohmann::ordered_json evaluation_json(const Evaluation& ev) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(eval::summary_json(ev.summary));
  j["validation_flagged"] = ev.validation_flagged;
  return j;
}

void log_summary(std::ostream& log, const std::string& tag, const Evaluation& ev) {
  const auto& s = ev.summary;
  log << tag << "tau " << s.tau << "  TP " << s.counts.tp << " FP " << s.counts.fp << " FN "
      << s.counts.fn << " TN " << s.counts.tn << "  P " << s.scores.precision << " R "
      << s.scores.recall << " F1 " << s.scores.f1 << "  AUPRC " << s.auprc
      << "  validation flagged " << ev.validation_flagged << '\n';
}

}  // namespace

std::vector<data::ManifestEntry> generate_dataset(const RunConfig& config, bool force,
                                                  std::ostream& log) {
  config.validate();
  const fs::path manifest = config.data_dir / kManifestFile;
  if (fs::exists(manifest) && !force) {
    throw PathError(manifest.string() + " exists; pass --force to regenerate");
  }
  const data::SynthConfig synth = config.synth();
  struct Part {
    data::Split split;
    data::SynthPlan plan;
  };
  const std::vector<Part> parts = {
      {data::Split::train, {config.data.n_train, {}, "train"}},
      {data::Split::val, {config.data.n_val, {}, "val"}},
      {data::Split::test,
       {config.data.n_test_normal, data::balanced_anomalies(config.data.anomalies_per_type), "test"}},
  };
  std::vector<data::ManifestEntry> entries;
  for (const Part& part : parts) {
    const fs::path dir = config.data_dir / data::to_string(part.split);
    make_dirs(dir);
    for (const data::Sequence& s : data::synth_generate(synth, part.plan)) {
      const std::string rel = std::string(data::to_string(part.split)) + "/" + s.id + ".bin";
      data::save_sequence(config.data_dir / rel, s);
      entries.push_back({part.split, s.id, s.label, rel});
    }
    log << "generated " << part.plan.n_normal + part.plan.anomalies.size() << ' '
        << data::to_string(part.split) << " sequences\n";
  }
  std::ofstream out = open_out(manifest);
  data::write_manifest(out, entries);
  return entries;
}

PreparedData prepare_training_data(const RunConfig& config) {
  const fs::path manifest = config.data_dir / kManifestFile;
  PreparedData p;
  std::vector<data::Sequence> train = data::load_split(manifest, data::Split::train);
  std::vector<data::Sequence> val = data::load_split(manifest, data::Split::val);
  if (train.empty() || val.empty()) throw DataError("training needs train and val sequences");
  p.norm = data::fit_norm(train);
  p.train = normalised(std::move(train), p.norm);
  p.val = normalised(std::move(val), p.norm);
  p.window = config.data.window_from_autocorr
                 ? data::autocorr_window_size(p.train, config.data.autocorr_threshold)
                 : config.model.window;
  const std::size_t shift = train_shift(config, p.window);
  p.train_windows = data::pool_windows(p.train, p.window, shift, config.data.cover_tail);
  p.val_windows = data::pool_windows(p.val, p.window, shift, config.data.cover_tail);
  return p;
}

TrainedRun train_run(const RunConfig& config, std::ostream& log) {
  config.validate();
  PreparedData data = prepare_training_data(config);
  model::MavaeConfig mc = config.model;
  mc.window = data.window;
  mc.validate();
  log << "training " << (mc.no_attention ? "no-attention variant" : "MA-VAE") << ": "
      << data.train_windows.dim(0) << " train / " << data.val_windows.dim(0)
      << " val windows, W = " << mc.window << '\n';

  Rng init = make_stream(config.seed, "init");
  const train::TrainConfig tc = config.training();
  TrainedRun run;
  run.result = train::train(mc, model::init_params(mc, init), data.train_windows, data.val_windows, tc,
                            [&](const train::EpochRecord& r) {
                              log << "epoch " << std::setw(4) << r.epoch << "  recon "
                                  << std::setw(12) << r.recon << "  kl " << std::setw(10) << r.kl
                                  << "  beta " << std::setw(9) << r.beta << "  val "
                                  << std::setw(12) << r.val_recon << (r.best ? "  *" : "") << '\n'
                                  << std::flush;
                            });

  run.checkpoint.config = mc;
  run.checkpoint.params = run.result.best_params;
  run.checkpoint.set_extra("norm.mean", vector_tensor(data.norm.mean));
  run.checkpoint.set_extra("norm.std", vector_tensor(data.norm.std));
  run.checkpoint.set_extra("meta.val_recon", Tensor::scalar(run.result.best_val_recon));
  // Split so that every 64-bit seed survives the f64 record.
  run.checkpoint.set_extra("meta.seed", Tensor({2}, {static_cast<double>(config.seed >> 32),
                                                     static_cast<double>(config.seed & 0xffffffffu)}));
  run.checkpoint.set_extra("meta.best_epoch", Tensor::scalar(static_cast<double>(run.result.best_epoch)));

  make_dirs(config.run_dir);
  model::save_checkpoint(config.run_dir / kCheckpointFile, run.checkpoint);
  std::ofstream history = open_out(config.run_dir / kHistoryFile);
  train::write_history_csv(history, run.result.history);
  std::ofstream cfg = open_out(config.run_dir / kConfigFile);
  write_run_config(cfg, config);
  log << "best epoch " << run.result.best_epoch << ", val recon " << run.result.best_val_recon
      << "; wrote " << (config.run_dir / kCheckpointFile).string() << '\n';
  return run;
}

data::NormStats checkpoint_norm(const model::Checkpoint& checkpoint) {
  const Tensor* mean = checkpoint.find_extra("norm.mean");
  const Tensor* std = checkpoint.find_extra("norm.std");
  if (!mean || !std) throw DataError("checkpoint lacks normalisation statistics");
  const std::size_t d = checkpoint.config.input_width;
  if (mean->size() != d || std->size() != d) throw DataError("checkpoint normalisation width mismatch");
  return {{mean->values().begin(), mean->values().end()}, {std->values().begin(), std->values().end()}};
}

Evaluation evaluate_sequences(const model::MavaeConfig& model_config,
                              const model::ModelParams& params,
                              const std::vector<data::Sequence>& validation,
                              const std::vector<data::Sequence>& test,
                              const detect::DetectOptions& options, double pr_step) {
  if (test.empty()) throw DataError("evaluation needs test sequences");
  Evaluation ev;
  for (const auto& s : validation) {
    ev.validation.push_back(
        detect::detect(model_config, params, s, std::numeric_limits<double>::infinity(), options));
  }
  ev.tau = detect::estimate_threshold(ev.validation);
  for (auto& r : ev.validation) {
    r.threshold = ev.tau;
    r.flagged = r.peak > ev.tau;
    if (r.flagged) ++ev.validation_flagged;
  }
  for (const auto& s : test) ev.test.push_back(detect::detect(model_config, params, s, ev.tau, options));

  std::vector<double> peaks;
  std::vector<bool> anomalous;
  for (const auto& r : ev.test) {
    peaks.push_back(r.peak);
    anomalous.push_back(r.label != data::kNormalLabel);
  }
  ev.curve = eval::pr_curve(peaks, anomalous, pr_step);
  ev.summary = eval::summarize(ev.test, pr_step);
  return ev;
}

Evaluation evaluate_run(const RunConfig& config, std::ostream& log) {
  config.validate();
  const model::Checkpoint ckpt = model::load_checkpoint(config.run_dir / kCheckpointFile);
  const data::NormStats norm = checkpoint_norm(ckpt);
  const fs::path manifest = config.data_dir / kManifestFile;
  const auto val = normalised(data::load_split(manifest, data::Split::val), norm);
  const auto test = normalised(data::load_split(manifest, data::Split::test), norm);
  if (val.empty()) throw DataError("evaluation needs validation sequences");

  // The recorded validation term must be reproducible from this data.
  const std::size_t w = ckpt.config.window;
  const double recorded = scalar_extra(ckpt, "meta.val_recon");
  const Tensor* seed_halves = ckpt.find_extra("meta.seed");
  if (!seed_halves || seed_halves->size() != 2) throw DataError("checkpoint lacks meta.seed");
  const std::uint64_t seed = (static_cast<std::uint64_t>(seed_halves->values()[0]) << 32) |
                             static_cast<std::uint64_t>(seed_halves->values()[1]);
  const double recomputed = train::validation_recon(
      ckpt.config, ckpt.params, data::pool_windows(val, w, train_shift(config, w), config.data.cover_tail), seed,
      config.train.batch_size);
  if (!(std::abs(recomputed - recorded) <= 1e-9 * std::max(1.0, std::abs(recorded)))) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "validation data does not match the checkpoint: recorded "
        << recorded << ", recomputed " << recomputed;
    throw DataError(msg.str());
  }

  Evaluation ev = evaluate_sequences(ckpt.config, ckpt.params, val, test, config.detect, config.pr_step);
  write_evaluation(config.run_dir, ev, test.front().channels);
  log_summary(log, "", ev);
  return ev;
}

AttentionCheck check_attention(const model::MavaeConfig& config, const model::ModelParams& params,
                               const Tensor& windows, std::size_t count) {
  if (config.no_attention) throw ContractError("check_attention: model has no attention");
  if (windows.rank() != 3 || windows.dim(0) == 0) throw DimensionError("check_attention: need [N, W, d] windows");
  AttentionCheck check;
  check.windows = std::min(count, windows.dim(0));
  check.min_weight = std::numeric_limits<double>::infinity();
  const std::size_t w = windows.dim(1), d = windows.dim(2);
  const double uniform = 1.0 / static_cast<double>(w);
  for (std::size_t n = 0; n < check.windows; ++n) {
    Tensor x({w, d});
    std::copy_n(windows.values().begin() + static_cast<std::ptrdiff_t>(n * w * d), w * d, x.values().begin());
    for (const Tensor& a : model::inference_attention_scores(config, params, x)) {
      for (std::size_t i = 0; i < w; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
          const double v = a.at(i, j);
          row += v;
          check.min_weight = std::min(check.min_weight, v);
          check.max_uniform_deviation = std::max(check.max_uniform_deviation, std::abs(v - uniform));
        }
        check.max_row_error = std::max(check.max_row_error, std::abs(row - 1.0));
      }
    }
  }
  return check;
}

Ablation run_ablation(const RunConfig& config, std::ostream& log) {
  Ablation out;
  const fs::path manifest = config.data_dir / kManifestFile;
  for (bool no_attention : {false, true}) {
    RunConfig variant = config;
    variant.model.no_attention = no_attention;
    variant.run_dir = config.run_dir / (no_attention ? "no_ma" : "ma");
    const TrainedRun run = train_run(variant, log);
    Evaluation ev = evaluate_run(variant, log);
    if (!no_attention) {
      const data::NormStats norm = checkpoint_norm(run.checkpoint);
      const auto val = normalised(data::load_split(manifest, data::Split::val), norm);
      const std::size_t w = run.checkpoint.config.window;
      out.weights = check_attention(run.checkpoint.config, run.checkpoint.params,
                                    data::pool_windows(val, w, train_shift(config, w), config.data.cover_tail));
      out.attention = std::move(ev);
    } else {
      out.no_attention = std::move(ev);
    }
  }
  open_out(config.run_dir / "ablation.json") << ablation_json(out) << '\n';
  log << "AUPRC MA-VAE " << out.attention.summary.auprc << ", no attention "
      << out.no_attention.summary.auprc << '\n';
  return out;
}

std::string ablation_json(const Ablation& ablation) {
  nlohmann::ordered_json j;
  j["ma_vae"] = evaluation_json(ablation.attention);
  j["no_ma"] = evaluation_json(ablation.no_attention);
  j["attention"] = {{"windows", ablation.weights.windows},
                    {"max_row_error", ablation.weights.max_row_error},
                    {"min_weight", ablation.weights.min_weight},
                    {"max_uniform_deviation", ablation.weights.max_uniform_deviation},
                    {"row_stochastic", ablation.weights.row_stochastic()},
                    {"non_uniform", ablation.weights.non_uniform()}};
  return j.dump(2);
}

ReverseComparison compare_reverse_modes(const RunConfig& config, std::ostream& log) {
  config.validate();
  const model::Checkpoint ckpt = model::load_checkpoint(config.run_dir / kCheckpointFile);
  const data::NormStats norm = checkpoint_norm(ckpt);
  const fs::path manifest = config.data_dir / kManifestFile;
  const auto val = normalised(data::load_split(manifest, data::Split::val), norm);
  const auto test = normalised(data::load_split(manifest, data::Split::test), norm);
  ReverseComparison out;
  for (detect::ReverseMode mode :
       {detect::ReverseMode::mean, detect::ReverseMode::first, detect::ReverseMode::last}) {
    detect::DetectOptions options = config.detect;
    options.mode = mode;
    Evaluation ev = evaluate_sequences(ckpt.config, ckpt.params, val, test, options, config.pr_step);
    log_summary(log, std::string(detect::to_string(mode)) + ": ", ev);
    out.modes.emplace_back(mode, std::move(ev));
  }
  open_out(config.run_dir / "reverse_modes.json") << reverse_comparison_json(out) << '\n';
  return out;
}

std::string reverse_comparison_json(const ReverseComparison& comparison) {
  nlohmann::ordered_json j;
  for (const auto& [mode, ev] : comparison.modes) j[detect::to_string(mode)] = evaluation_json(ev);
  return j.dump(2);
}

}  // namespace mavae::cli
