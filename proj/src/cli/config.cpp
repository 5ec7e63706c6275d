// SPDX-License-Identifier: Apache-2.0
#include "mavae/cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include "mavae/errors.hpp"

namespace mavae::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const std::string t = trim(text);
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw ConfigError(key + ": cannot parse '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

struct Field {
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Access>
Field size_field(Access access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) {
            access(c) = parse_number<std::size_t>(k, v);
          },
          [access](const RunConfig& c) {
            return std::to_string(access(const_cast<RunConfig&>(c)));
          }};
}

template <typename Access>
Field double_field(Access access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) {
            access(c) = parse_number<double>(k, v);
          },
          [access](const RunConfig& c) { return format_double(access(const_cast<RunConfig&>(c))); }};
}

template <typename Access>
Field bool_field(Access access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) {
            access(c) = parse_bool(k, v);
          },
          [access](const RunConfig& c) {
            return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false");
          }};
}

template <typename Access>
Field path_field(Access access) {
  return {[access](RunConfig& c, const std::string&, const std::string& v) { access(c) = trim(v); },
          [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)).string(); }};
}

// Ordered so write_run_config emits sections in a stable, readable order.
const std::vector<std::pair<std::string, Field>>& schema() {
  static const std::vector<std::pair<std::string, Field>> fields = {
      {"run.seed",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.seed = parse_number<std::uint64_t>(k, v);
        },
        [](const RunConfig& c) { return std::to_string(c.seed); }}},
      {"run.data_dir", path_field([](RunConfig& c) -> auto& { return c.data_dir; })},
      {"run.run_dir", path_field([](RunConfig& c) -> auto& { return c.run_dir; })},

      {"data.n_train", size_field([](RunConfig& c) -> auto& { return c.data.n_train; })},
      {"data.n_val", size_field([](RunConfig& c) -> auto& { return c.data.n_val; })},
      {"data.n_test_normal", size_field([](RunConfig& c) -> auto& { return c.data.n_test_normal; })},
      {"data.anomalies_per_type",
       size_field([](RunConfig& c) -> auto& { return c.data.anomalies_per_type; })},
      {"data.train_shift", size_field([](RunConfig& c) -> auto& { return c.data.train_shift; })},
      {"data.cover_tail", bool_field([](RunConfig& c) -> auto& { return c.data.cover_tail; })},
      {"data.window_from_autocorr",
       bool_field([](RunConfig& c) -> auto& { return c.data.window_from_autocorr; })},
      {"data.autocorr_threshold",
       double_field([](RunConfig& c) -> auto& { return c.data.autocorr_threshold; })},
      {"data.rate", double_field([](RunConfig& c) -> auto& { return c.data.synth.rate; })},
      {"data.min_minutes", double_field([](RunConfig& c) -> auto& { return c.data.synth.min_minutes; })},
      {"data.max_minutes", double_field([](RunConfig& c) -> auto& { return c.data.synth.max_minutes; })},
      {"data.library_size",
       size_field([](RunConfig& c) -> auto& { return c.data.synth.library_size; })},

      {"model.window", size_field([](RunConfig& c) -> auto& { return c.model.window; })},
      {"model.latent_width", size_field([](RunConfig& c) -> auto& { return c.model.latent_width; })},
      {"model.heads", size_field([](RunConfig& c) -> auto& { return c.model.heads; })},
      {"model.key_width", size_field([](RunConfig& c) -> auto& { return c.model.key_width; })},
      {"model.outer_units", size_field([](RunConfig& c) -> auto& { return c.model.outer_units; })},
      {"model.inner_units", size_field([](RunConfig& c) -> auto& { return c.model.inner_units; })},
      {"model.no_attention", bool_field([](RunConfig& c) -> auto& { return c.model.no_attention; })},

      {"train.batch_size", size_field([](RunConfig& c) -> auto& { return c.train.batch_size; })},
      {"train.noise_std", double_field([](RunConfig& c) -> auto& { return c.train.noise_std; })},
      {"train.grace_epochs",
       size_field([](RunConfig& c) -> auto& { return c.train.annealing.grace_epochs; })},
      {"train.beta_low", double_field([](RunConfig& c) -> auto& { return c.train.annealing.beta_low; })},
      {"train.beta_high",
       double_field([](RunConfig& c) -> auto& { return c.train.annealing.beta_high; })},
      {"train.cycle_length",
       size_field([](RunConfig& c) -> auto& { return c.train.annealing.cycle_length; })},
      {"train.patience", size_field([](RunConfig& c) -> auto& { return c.train.patience; })},
      {"train.max_epochs", size_field([](RunConfig& c) -> auto& { return c.train.max_epochs; })},
      {"train.learning_rate",
       double_field([](RunConfig& c) -> auto& { return c.train.optimizer.learning_rate; })},
      {"train.beta1", double_field([](RunConfig& c) -> auto& { return c.train.optimizer.beta1; })},
      {"train.beta2", double_field([](RunConfig& c) -> auto& { return c.train.optimizer.beta2; })},
      {"train.epsilon", double_field([](RunConfig& c) -> auto& { return c.train.optimizer.epsilon; })},
      {"train.clip_norm", double_field([](RunConfig& c) -> auto& { return c.train.clip_norm; })},

      {"detect.reverse_mode",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          c.detect.mode = detect::parse_reverse_mode(trim(v));
        },
        [](const RunConfig& c) { return std::string(detect::to_string(c.detect.mode)); }}},
      {"detect.batch_size", size_field([](RunConfig& c) -> auto& { return c.detect.batch_size; })},

      {"eval.pr_step", double_field([](RunConfig& c) -> auto& { return c.pr_step; })},
  };
  return fields;
}

const Field& field(const std::string& key) {
  for (const auto& [name, f] : schema()) {
    if (name == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

data::SynthConfig RunConfig::synth() const {
  data::SynthConfig s = data.synth;
  s.seed = seed;
  return s;
}

train::TrainConfig RunConfig::training() const {
  train::TrainConfig t = train;
  t.seed = seed;
  return t;
}

model::MavaeConfig RunConfig::desk_model() {
  model::MavaeConfig m;
  m.window = 64;
  m.input_width = data::kSynthChannels;
  m.latent_width = 8;
  m.heads = 4;
  m.key_width = 2;
  m.outer_units = 32;
  m.inner_units = 16;
  return m;
}

train::TrainConfig RunConfig::desk_training() {
  train::TrainConfig t;
  t.batch_size = 32;
  t.max_epochs = 300;
  return t;
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  data.synth.validate();
  if (model.input_width != data::kSynthChannels) {
    throw ConfigError("model input width must match the " + std::to_string(data::kSynthChannels) +
                      " generated channels");
  }
  if (data.n_train == 0 || data.n_val == 0) {
    throw ConfigError("data: n_train and n_val must be positive");
  }
  if (!(data.autocorr_threshold > 0.0 && data.autocorr_threshold < 1.0)) {
    throw ConfigError("data.autocorr_threshold must lie in (0, 1)");
  }
  if (detect.batch_size == 0) throw ConfigError("detect.batch_size must be positive");
  if (!(pr_step > 0.0)) throw ConfigError("eval.pr_step must be positive");
  if (data_dir.empty() || run_dir.empty()) throw ConfigError("run: directories must be set");
}

RunConfig parse_run_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  RunConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config key '" + section + "' must sit inside a section");
    }
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      field(name).set(config, name, value.data());
    }
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PathError("cannot open config " + path.string());
  return parse_run_config(in);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  field(key).set(config, key, assignment.substr(eq + 1));
}

void write_run_config(std::ostream& out, const RunConfig& config) {
  std::string current;
  for (const auto& [name, f] : schema()) {
    const auto dot = name.find('.');
    const std::string section = name.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << name.substr(dot + 1) << " = " << f.get(config) << '\n';
  }
}

}  // namespace mavae::cli
