// SPDX-License-Identifier: Apache-2.0
#include "mavae/datapipe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "mavae/datapipe/signal.hpp"
#include "mavae/errors.hpp"
#include "mavae/rng.hpp"

namespace mavae::data {

const std::array<std::string, kSynthChannels>& synth_channel_names() {
  static const std::array<std::string, kSynthChannels> names = {
      "vehicle_speed",     "edu_torque",      "left_axle_torque",
      "right_axle_torque", "edu_current",     "edu_voltage",
      "hvb_current",       "hvb_voltage",     "hvb_temperature",
      "hvb_soc",           "edu_rotor_temperature", "edu_stator_temperature",
      "inverter_temperature"};
  return names;
}

const char* to_string(AnomalyType type) {
  switch (type) {
    case AnomalyType::wheel_diameter: return "wheel_diameter";
    case AnomalyType::driving_mode: return "driving_mode";
    case AnomalyType::recuperation: return "recuperation";
    case AnomalyType::battery_simulator: return "battery_simulator";
    case AnomalyType::cooling: return "cooling";
  }
  return "?";
}

AnomalyType parse_anomaly_type(std::string_view name) {
  for (AnomalyType t : kAnomalyTypes) {
    if (name == to_string(t)) return t;
  }
  throw ConfigError("unknown anomaly type '" + std::string(name) + "'");
}

double AnomalySpec::resolved_factor() const {
  if (factor != 0.0) return factor;
  switch (type) {
    case AnomalyType::wheel_diameter: return 1.1;
    case AnomalyType::driving_mode: return 1.15;
    case AnomalyType::cooling: return 1.8;
    default: return 1.0;
  }
}

void SynthConfig::validate() const {
  if (!(rate > 0.0) || !(sim_rate > 0.0) || !(fast_rate > 0.0) || !(slow_rate > 0.0)) {
    throw ConfigError("synth: rates must be positive");
  }
  const double fast_step = sim_rate / fast_rate;
  const double slow_step = sim_rate / slow_rate;
  if (fast_step < 1.0 || slow_step < 1.0 || fast_step != std::floor(fast_step) ||
      slow_step != std::floor(slow_step)) {
    throw ConfigError("synth: logging rates must divide the simulation rate");
  }
  if (!(min_minutes > 0.0) || max_minutes < min_minutes) {
    throw ConfigError("synth: need 0 < min_minutes <= max_minutes");
  }
  if (library_size == 0) throw ConfigError("synth: library_size must be positive");
  if (!(max_speed > 5.0)) throw ConfigError("synth: max_speed must exceed 5 m/s");
  for (double n : noise) {
    if (!(n >= 0.0)) throw ConfigError("synth: noise levels must be non-negative");
  }
}

namespace {

constexpr double kGravity = 9.81;
constexpr double kMsToKmh = 3.6;

std::vector<double> moving_average(const std::vector<double>& x, std::size_t half) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(x.size() - 1, i + half);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += x[j];
    y[i] = s / static_cast<double>(hi - lo + 1);
  }
  return y;
}

// Piecewise-linear ramps between random cruise speeds with occasional stops,
// then smoothed.
std::vector<double> cycle_speed(const SynthConfig& config, std::size_t cycle) {
  Rng rng = make_stream(config.seed, "cycle", cycle);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double minutes =
      config.min_minutes + unit(rng) * (config.max_minutes - config.min_minutes);
  const double dt = 1.0 / config.sim_rate;
  const auto n = static_cast<std::size_t>(std::round(minutes * 60.0 * config.sim_rate)) + 1;

  std::vector<double> v(n, 0.0);
  std::size_t i = 0;
  double current = 0.0;
  auto hold = [&](double seconds) {
    for (double s = 0.0; s < seconds && i < n; s += dt) v[i++] = current;
  };
  auto ramp = [&](double target, double accel) {
    while (i < n && std::abs(target - current) > 1e-9) {
      const double step = std::min(accel * dt, std::abs(target - current));
      current += target > current ? step : -step;
      v[i++] = current;
    }
  };
  hold(3.0 + 5.0 * unit(rng));
  while (i < n) {
    if (current > 0.0 && unit(rng) < 0.2) {
      ramp(0.0, 1.0 + 1.5 * unit(rng));
      hold(4.0 + 10.0 * unit(rng));
      continue;
    }
    const double target = 5.0 + unit(rng) * (config.max_speed - 5.0);
    ramp(target, 0.5 + 1.8 * unit(rng));
    hold(8.0 + 35.0 * unit(rng));
  }
  v = moving_average(v, static_cast<std::size_t>(config.sim_rate));
  for (double& x : v) x = std::max(x, 0.0);
  return v;
}

// Everything drawn per recording, in a fixed order so that a recording and
// its anomalous twin share all of it.
struct RecordingState {
  double soc0 = 0.0;
  double ambient = 0.0;
  double hvb_temp0 = 0.0;
  double rotor_temp0 = 0.0;
  double stator_temp0 = 0.0;
  double inverter_temp0 = 0.0;
  double speed_scale = 1.0;
  double axle_skew = 0.0;
  bool cooling_from_middle = false;
  std::vector<double> jitter;  // m/s, per simulation step
  std::uint64_t noise_seed = 0;
};

RecordingState draw_recording(const SynthConfig& config, const Recording& rec, std::size_t steps) {
  Rng rng = make_stream(config.seed, "recording." + std::to_string(rec.cycle), rec.version);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RecordingState s;
  s.soc0 = 45.0 + 45.0 * unit(rng);
  s.ambient = 18.0 + 10.0 * unit(rng);
  s.hvb_temp0 = s.ambient + 6.0 * unit(rng);
  const double warm = unit(rng);
  s.rotor_temp0 = s.ambient + config.thermal.coolant_offset + 15.0 * warm + 2.0 * unit(rng);
  s.stator_temp0 = s.ambient + config.thermal.coolant_offset + 15.0 * warm + 2.0 * unit(rng);
  s.inverter_temp0 = s.ambient + config.thermal.coolant_offset + 8.0 * warm + 2.0 * unit(rng);
  s.speed_scale = 1.0 + 0.01 * gauss(rng);
  s.axle_skew = 0.01 * gauss(rng);
  s.cooling_from_middle = unit(rng) < 0.5;
  s.jitter.resize(steps);
  // Slow driver deviation from the nominal trace: AR(1) with ~0.3 m/s spread.
  const double phi = 0.995;
  const double innovation = 0.3 * std::sqrt(1.0 - phi * phi);
  double j = 0.3 * gauss(rng);
  for (double& x : s.jitter) {
    j = phi * j + innovation * gauss(rng);
    x = j;
  }
  s.noise_seed = rng();
  return s;
}

struct Trace {
  std::array<std::vector<double>, kSynthChannels> channel;
};

Trace simulate(const SynthConfig& config, const std::vector<double>& nominal,
               const RecordingState& rs, const std::optional<AnomalySpec>& anomaly) {
  const VehicleConstants& veh = config.vehicle;
  const BatteryConstants& bat = config.battery;
  const ThermalConstants& th = config.thermal;
  const auto type = anomaly ? std::optional(anomaly->type) : std::nullopt;
  const double factor = anomaly ? anomaly->resolved_factor() : 1.0;
  const double dt = 1.0 / config.sim_rate;
  const std::size_t n = nominal.size();

  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = nominal[i] <= 0.0 ? 0.0 : std::max(0.0, nominal[i] * rs.speed_scale + rs.jitter[i]);
  }

  const bool sport = type == AnomalyType::driving_mode;
  const double torque_lag = sport ? veh.torque_lag / 3.0 : veh.torque_lag;
  const double efficiency = sport ? veh.efficiency - 0.04 : veh.efficiency;
  const double torque_gain = sport ? factor : 1.0;

  Trace out;
  for (auto& c : out.channel) c.resize(n);
  double torque = 0.0;
  double soc = rs.soc0;
  double hvb_temp = rs.hvb_temp0;
  double rotor = rs.rotor_temp0, stator = rs.stator_temp0, inverter = rs.inverter_temp0;
  const double coolant = rs.ambient + th.coolant_offset;

  for (std::size_t i = 0; i < n; ++i) {
    const double accel = (v[std::min(i + 1, n - 1)] - v[i == 0 ? 0 : i - 1]) /
                         (dt * static_cast<double>(std::min(i + 1, n - 1) - (i == 0 ? 0 : i - 1)));
    const double rolling = veh.rolling * veh.mass * kGravity * std::min(1.0, v[i] / 0.5);
    const double force = veh.mass * accel + 0.5 * veh.air_density * veh.drag_area * v[i] * v[i] + rolling;
    double request = force * veh.wheel_radius / veh.gear_ratio;
    if (request > 0.0) request *= torque_gain;
    const double regen_limit = type == AnomalyType::recuperation
                                   ? 0.0
                                   : veh.regen_limit * std::min(1.0, v[i] / 3.0);
    request = std::max(request, -regen_limit);
    torque += (request - torque) * (1.0 - std::exp(-dt / torque_lag));
    if (type == AnomalyType::recuperation) torque = std::max(torque, 0.0);

    const double omega = v[i] / veh.wheel_radius * veh.gear_ratio;
    const double p_mech = torque * omega;
    const double p_elec = p_mech >= 0.0 ? p_mech / efficiency : p_mech * efficiency;
    const double motor_loss = std::abs(p_elec - p_mech);
    const double inverter_loss = th.inverter_loss * std::abs(p_elec) + th.inverter_idle;
    const double p_edu = p_elec + inverter_loss;
    const double p_batt = p_edu + veh.aux_power;

    double hvb_voltage, hvb_current;
    if (type == AnomalyType::battery_simulator) {
      // Regulated supply: stiff voltage, no cells to heat or discharge.
      const double setpoint = bat.ocv_base + bat.ocv_slope * rs.soc0;
      hvb_current = p_batt / setpoint;
      hvb_voltage = setpoint - 0.005 * hvb_current;
    } else {
      const double ocv = bat.ocv_base + bat.ocv_slope * soc;
      hvb_current = (ocv - std::sqrt(ocv * ocv - 4.0 * bat.resistance * p_batt)) /
                    (2.0 * bat.resistance);
      hvb_voltage = ocv - bat.resistance * hvb_current;
      soc -= hvb_current * dt / (bat.capacity_ah * 3600.0) * 100.0;
      const double heat = bat.resistance * hvb_current * hvb_current;
      hvb_temp += (rs.ambient + bat.heat_gain * heat - hvb_temp) * dt / bat.heat_lag;
    }
    const double edu_current = p_edu / hvb_voltage;
    const double edu_voltage = hvb_voltage - veh.cable_resistance * edu_current;

    double gain = 1.0;
    if (type == AnomalyType::cooling && (!rs.cooling_from_middle || i >= n / 2)) gain = factor;
    rotor += (coolant + gain * th.rotor_gain * 0.4 * motor_loss - rotor) * dt / th.rotor_lag;
    stator += (coolant + gain * th.stator_gain * 0.6 * motor_loss - stator) * dt / th.stator_lag;
    inverter += (coolant + gain * th.inverter_gain * inverter_loss - inverter) * dt / th.inverter_lag;

    const double axle = torque * veh.gear_ratio * veh.gear_efficiency / 2.0;
    const double reported_speed = type == AnomalyType::wheel_diameter ? v[i] * factor : v[i];

    out.channel[kVehicleSpeed][i] = reported_speed * kMsToKmh;
    out.channel[kEduTorque][i] = torque;
    out.channel[kLeftAxleTorque][i] = axle * (1.0 + rs.axle_skew);
    out.channel[kRightAxleTorque][i] = axle * (1.0 - rs.axle_skew);
    out.channel[kEduCurrent][i] = edu_current;
    out.channel[kEduVoltage][i] = edu_voltage;
    out.channel[kHvbCurrent][i] = hvb_current;
    out.channel[kHvbVoltage][i] = hvb_voltage;
    out.channel[kHvbTemperature][i] = type == AnomalyType::battery_simulator ? rs.ambient : hvb_temp;
    out.channel[kHvbSoc][i] = soc;
    out.channel[kEduRotorTemperature][i] = rotor;
    out.channel[kEduStatorTemperature][i] = stator;
    out.channel[kInverterTemperature][i] = inverter;
  }
  return out;
}

bool is_slow(std::size_t c) {
  return c == kHvbTemperature || c == kHvbSoc || c >= kEduRotorTemperature;
}

}  // namespace

Sequence render(const SynthConfig& config, const std::string& id, const Recording& recording,
                const std::optional<AnomalySpec>& anomaly) {
  config.validate();
  if (recording.cycle >= config.library_size) {
    throw ConfigError("synth: cycle index " + std::to_string(recording.cycle) +
                      " outside the library");
  }
  const std::vector<double> nominal = cycle_speed(config, recording.cycle);
  const RecordingState rs = draw_recording(config, recording, nominal.size());
  const Trace trace = simulate(config, nominal, rs, anomaly);

  Rng noise_rng(rs.noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<RawChannel> raw;
  for (std::size_t c = 0; c < kSynthChannels; ++c) {
    const double logging_rate = is_slow(c) ? config.slow_rate : config.fast_rate;
    const auto stride = static_cast<std::size_t>(std::round(config.sim_rate / logging_rate));
    RawChannel ch{synth_channel_names()[c], logging_rate, {}};
    for (std::size_t i = 0; i < trace.channel[c].size(); i += stride) {
      ch.values.push_back(trace.channel[c][i] + config.noise[c] * gauss(noise_rng));
    }
    raw.push_back(std::move(ch));
  }

  Sequence seq;
  seq.id = id;
  seq.label = anomaly ? to_string(anomaly->type) : kNormalLabel;
  seq.rate = config.rate;
  seq.channels.assign(synth_channel_names().begin(), synth_channel_names().end());
  seq.values = resample_channels(raw, config.rate);
  if (anomaly && anomaly->type == AnomalyType::recuperation) {
    // With recuperation off the inverter never reports braking torque.
    for (std::size_t t = 0; t < seq.length(); ++t) {
      seq.values.at(t, kEduTorque) = std::max(seq.values.at(t, kEduTorque), 0.0);
    }
  }
  seq.validate();
  return seq;
}

std::vector<SynthItem> synth_generate_items(const SynthConfig& config, const SynthPlan& plan) {
  config.validate();
  if (plan.split.empty()) throw ConfigError("synth: plan needs a split name");
  Rng rng = make_stream(config.seed, "data." + plan.split);
  std::uniform_int_distribution<std::size_t> pick(0, config.library_size - 1);
  std::vector<SynthItem> items;
  const std::size_t total = plan.n_normal + plan.anomalies.size();
  for (std::size_t i = 0; i < total; ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "%s-%04zu", plan.split.c_str(), i);
    const Recording rec{pick(rng), rng()};
    std::optional<AnomalySpec> anomaly;
    if (i >= plan.n_normal) anomaly = plan.anomalies[i - plan.n_normal];
    items.push_back({render(config, id, rec, anomaly), rec});
  }
  return items;
}

std::vector<Sequence> synth_generate(const SynthConfig& config, const SynthPlan& plan) {
  std::vector<Sequence> out;
  for (SynthItem& item : synth_generate_items(config, plan)) out.push_back(std::move(item.sequence));
  return out;
}

std::vector<AnomalySpec> balanced_anomalies(std::size_t per_type) {
  std::vector<AnomalySpec> out;
  for (std::size_t k = 0; k < per_type; ++k) {
    for (AnomalyType t : kAnomalyTypes) out.push_back({t, 0.0});
  }
  return out;
}

}  // namespace mavae::data
