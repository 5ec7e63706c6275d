// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mavae/datapipe/sequence.hpp"

namespace mavae::data {

// Virtual test bench: a battery-electric powertrain driven through a small
// library of speed cycles. Every physical constant is a config value.

inline constexpr std::size_t kSynthChannels = 13;

enum Channel : std::size_t {
  kVehicleSpeed,          // km/h
  kEduTorque,             // N m
  kLeftAxleTorque,        // N m
  kRightAxleTorque,       // N m
  kEduCurrent,            // A
  kEduVoltage,            // V
  kHvbCurrent,            // A
  kHvbVoltage,            // V
  kHvbTemperature,        // degC
  kHvbSoc,                // %
  kEduRotorTemperature,   // degC
  kEduStatorTemperature,  // degC
  kInverterTemperature,   // degC
};

const std::array<std::string, kSynthChannels>& synth_channel_names();

enum class AnomalyType { wheel_diameter, driving_mode, recuperation, battery_simulator, cooling };

inline constexpr std::array<AnomalyType, 5> kAnomalyTypes = {
    AnomalyType::wheel_diameter, AnomalyType::driving_mode, AnomalyType::recuperation,
    AnomalyType::battery_simulator, AnomalyType::cooling};

const char* to_string(AnomalyType type);
/// Throws ConfigError for unknown names.
AnomalyType parse_anomaly_type(std::string_view name);

struct AnomalySpec {
  AnomalyType type = AnomalyType::wheel_diameter;
  /// wheel_diameter: radius factor; driving_mode: torque gain; cooling:
  /// thermal gain factor. Unused by the other types.
  double factor = 0.0;  // 0: type default

  double resolved_factor() const;
};

struct VehicleConstants {
  double mass = 2100.0;          // kg
  double drag_area = 0.65;       // Cd * A, m^2
  double air_density = 1.2;      // kg/m^3
  double rolling = 0.011;
  double wheel_radius = 0.34;    // m
  double gear_ratio = 9.0;
  double efficiency = 0.92;      // motor + inverter, each direction
  double gear_efficiency = 0.97;
  double regen_limit = 120.0;    // N m at the motor
  double torque_lag = 0.4;       // s, comfort mode
  double aux_power = 600.0;      // W
  double cable_resistance = 0.015;
};

struct BatteryConstants {
  double ocv_base = 330.0;       // V at 0 % SoC
  double ocv_slope = 0.8;        // V per % SoC
  double resistance = 0.09;      // ohm
  double capacity_ah = 50.0;
  double heat_gain = 0.02;       // K per W of I^2 R loss at steady state
  double heat_lag = 900.0;       // s
};

struct ThermalConstants {
  double coolant_offset = 5.0;   // K above ambient
  double rotor_gain = 0.012;     // K/W
  double rotor_lag = 240.0;      // s
  double stator_gain = 0.018;
  double stator_lag = 150.0;
  double inverter_gain = 0.03;
  double inverter_lag = 90.0;
  double inverter_loss = 0.02;   // fraction of electrical power
  double inverter_idle = 100.0;  // W
};

struct SynthConfig {
  std::uint64_t seed = 1;
  double rate = kDefaultRate;  // output rate, Hz
  double sim_rate = 10.0;      // internal integration rate, Hz
  double fast_rate = 10.0;     // logging rate of mechanical/electrical channels
  double slow_rate = 1.0;      // logging rate of temperatures and SoC
  double min_minutes = 5.0;
  double max_minutes = 5.0;
  std::size_t library_size = 8;
  double max_speed = 36.0;     // m/s
  VehicleConstants vehicle;
  BatteryConstants battery;
  ThermalConstants thermal;
  /// Measurement noise standard deviation per channel, in channel units.
  std::array<double, kSynthChannels> noise = {0.2, 0.5, 4.0,  4.0,  1.0,  0.2, 1.0,
                                              0.2, 0.05, 0.02, 0.05, 0.05, 0.05};

  /// Throws ConfigError.
  void validate() const;
};

/// One recording: which library cycle and which recording of it. Recordings
/// of the same cycle differ in initial state, ambient conditions, driver
/// jitter and measurement noise.
struct Recording {
  std::size_t cycle = 0;
  std::uint64_t version = 0;
};

Sequence render(const SynthConfig& config, const std::string& id, const Recording& recording,
                const std::optional<AnomalySpec>& anomaly = std::nullopt);

struct SynthPlan {
  std::size_t n_normal = 0;
  std::vector<AnomalySpec> anomalies;
  std::string split = "train";  // names the random stream and id prefix
};

struct SynthItem {
  Sequence sequence;
  Recording recording;
};

/// Normal sequences first, then one sequence per anomaly spec. Ids are
/// "<split>-NNNN"; labels are "normal" or the anomaly type name.
std::vector<SynthItem> synth_generate_items(const SynthConfig& config, const SynthPlan& plan);
std::vector<Sequence> synth_generate(const SynthConfig& config, const SynthPlan& plan);

/// `per_type` specs of every anomaly type with default factors.
std::vector<AnomalySpec> balanced_anomalies(std::size_t per_type);

}  // namespace mavae::data
