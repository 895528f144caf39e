#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "sher/control.hpp"
#include "sher/eye.hpp"
#include "sher/optimizer.hpp"
#include "sher/robot_model.hpp"

namespace sher {

// Scripted stand-in for the human operator.
struct OperatorParams {
  double tip_gain = 2.0;        // (mm/s) per mm of tip error
  double velocity_cap = 3.0;    // mm/s, tip speed
  double hover = 0.2;           // mm the target is lifted off the retina
  double min_lever = 3.0;       // mm; shallower than this the operator translates only
  double rcm_awareness = 0.2;   // 1/s re-centring on the perceived port offset
  double tremor_rms = 0.182;    // mm
  double tremor_low_hz = 8.0;
  double tremor_high_hz = 12.0;
  double drift_min = 0.4;       // mm/s lateral bias magnitude
  double drift_max = 0.9;
  double drift_segment_min = 3.0;  // s
  double drift_segment_max = 6.0;
  double master_workspace = 40.0;  // mm, teleop master excursion before clutching
  double reposition_time = 0.3;    // s spent clutched while re-centring the master

  void validate() const;
};

struct TrialConfig {
  ControlMode mode = ControlMode::AdaptiveTeleop;
  std::uint64_t seed = 1;
  double dt = 1e-3;
  double max_duration = 40.0;
  int log_decimation = 5;             // one logged row every N ticks (200 Hz at 1 kHz)
  std::optional<ColorOrder> color_order;  // derived from the seed when empty
  double initial_depth = 14.0;  // mm of shaft past the port at t = 0; < 0 starts outside

  void validate() const;
};

struct SimConfig {
  RobotDescription robot = RobotDescription::sher_default();
  EyePhantom phantom;
  VesselLayout vessels;
  AdmittanceGains admittance;
  TeleopMapping teleop;
  AdaptiveParams adaptive;
  OptimizerOptions optimizer;
  double sensor_noise_rms = 1.0;  // mN per axis
  double staleness_timeout = 0.1; // s, live master velocity hold
  OperatorParams operator_model;
  TrialConfig trial;

  // Phantom vessels are regenerated from `vessels` unless explicitly supplied.
  void validate() const;
};

// Built-in defaults with the procedurally generated vessel map.
[[nodiscard]] SimConfig default_config();

// Overlay the fields present in the JSON document `text` onto `cfg`. Throws
// ConfigError on parse errors, type errors or unknown keys.
void apply_config_json(SimConfig& cfg, const std::string& text);

[[nodiscard]] SimConfig load_config(const std::filesystem::path& path);

// Full resolved configuration, suitable for echoing into output headers and
// for re-loading with apply_config_json.
[[nodiscard]] std::string config_to_json(const SimConfig& cfg);

}  // namespace sher
