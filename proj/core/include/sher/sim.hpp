#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sher/config.hpp"
#include "sher/control.hpp"
#include "sher/eye.hpp"
#include "sher/operator.hpp"
#include "sher/optimizer.hpp"

namespace sher {

struct LogRow {
  double t = 0.0;
  JointVector q = JointVector::Zero();
  JointVector qdot = JointVector::Zero();
  Vec3 tip = Vec3::Zero();
  double F_sx = 0.0;
  double F_sy = 0.0;
  double F_s_norm = 0.0;
  double f_dx = 0.0;
  double f_dy = 0.0;
  double alpha_x = 0.0;
  double alpha_y = 0.0;
  bool active_x = false;
  bool active_y = false;
  Vec6 handle = Vec6::Zero();  // (h_fx, h_fy, h_fz, h_tx, h_ty, h_tz) in {B}
  double insertion_depth = 0.0;
  ControlMode mode = ControlMode::Coop;
  std::string cursor;
};

struct TrialSummary {
  double mean_fs = 0.0;        // mN
  double max_fs = 0.0;         // mN
  double mean_handle_force = 0.0;   // mN
  double mean_handle_torque = 0.0;  // mN*mm
  double pct_over_threshold = 0.0;  // % of logged rows with F_s_norm > T_s
  bool completed = false;
  double completion_time = 0.0;  // s, meaningful only when completed
  std::size_t rows = 0;
};

// Summary recomputed from rows alone. Completion is the first row whose
// cursor reads "done".
[[nodiscard]] TrialSummary summarize_rows(const std::vector<LogRow>& rows, double threshold);

struct TrialRecord {
  ControlMode mode = ControlMode::Coop;
  std::uint64_t seed = 0;
  ColorOrder order{};
  std::vector<LogRow> rows;
  TrialSummary summary;
  bool aborted = false;
  std::string diagnostic;
  std::string config_json;  // resolved configuration echoed into the CSV header
};

// Color order for a trial: the configured one, else a seed-derived shuffle.
[[nodiscard]] ColorOrder resolve_color_order(const TrialConfig& trial);

// Joint vector placing the tool axis through the port with the tip `depth` mm
// inside the eye. Damped Newton on the tip pose; throws DomainError if no
// in-limit solution is found.
[[nodiscard]] JointVector initial_configuration(const RobotDescription& desc,
                                                const EyePhantom& phantom, double depth);

// Handle wrench in {B}: the operator wrench in cooperative modes; in
// teleoperation the sclera reaction on the shaft, moved to {B}.
[[nodiscard]] Vec6 handle_wrench(ControlMode mode, const Vec6& operator_wrench,
                                 const ScleraContact& contact, const RigidTransform& pose);

/// The simulated world plus the controller stack for one trial.
///
/// One tick of `step`: operator command -> mode velocity (admittance or
/// teleop mapping) -> adaptive policy on the sensed sclera force -> joint-rate
/// optimizer -> ideal integration -> kinematics, contact and sensing ->
/// activation update -> task progress -> log row.
class Simulation {
 public:
  explicit Simulation(SimConfig cfg);

  void step(const OperatorCommand& cmd);

  [[nodiscard]] const SimConfig& config() const { return cfg_; }
  [[nodiscard]] ControlMode mode() const { return mode_; }
  void set_mode(ControlMode m) { mode_ = m; }
  void set_scale(double scale);

  [[nodiscard]] double time() const { return static_cast<double>(tick_) * cfg_.trial.dt; }
  [[nodiscard]] std::uint64_t tick() const { return tick_; }
  [[nodiscard]] const JointVector& q() const { return q_; }
  [[nodiscard]] const JointVector& qdot() const { return qdot_; }
  [[nodiscard]] const RigidTransform& pose() const { return pose_; }
  [[nodiscard]] const Vec3& tip() const { return tip_; }
  [[nodiscard]] const ScleraContact& contact() const { return contact_; }
  [[nodiscard]] const SensedForce& sensed() const { return sensed_; }
  [[nodiscard]] const AdaptiveState& adaptive() const { return adaptive_; }
  [[nodiscard]] const ProgressState& progress() const { return progress_; }
  [[nodiscard]] const ColorOrder& order() const { return order_; }
  [[nodiscard]] const EyePhantom& phantom() const { return cfg_.phantom; }
  [[nodiscard]] const Vec3* target() const;
  [[nodiscard]] bool complete() const { return progress_.complete; }
  [[nodiscard]] bool clutch() const { return last_clutch_; }
  [[nodiscard]] const Vec6& handle() const { return handle_; }
  [[nodiscard]] const std::vector<LogRow>& rows() const { return rows_; }
  [[nodiscard]] std::vector<LogRow> take_rows() { return std::move(rows_); }
  [[nodiscard]] LogRow current_row() const;

 private:
  void sense_and_update();

  SimConfig cfg_;
  ControlMode mode_;
  ColorOrder order_{};
  std::mt19937_64 sensor_rng_;
  std::uint64_t tick_ = 0;
  JointVector q_ = JointVector::Zero();
  JointVector qdot_ = JointVector::Zero();
  RigidTransform pose_;
  Vec3 tip_ = Vec3::Zero();
  ScleraContact contact_;
  SensedForce sensed_;
  AdaptiveState adaptive_;
  ProgressState progress_;
  Vec6 handle_ = Vec6::Zero();
  bool last_clutch_ = false;
  std::vector<LogRow> rows_;
};

// Activation/release hysteresis alone, evaluated on the sensed force right
// after sensing so logged flags match the logged force. Idempotent for a
// repeated reading, so the following control_policy call sees no new edge.
void update_activation(const AdaptiveParams& params, ControlMode mode, double t, double F_sx,
                       double F_sy, AdaptiveState& state);

// Run one scripted trial to completion or max_duration.
[[nodiscard]] TrialRecord run_trial(const SimConfig& cfg);

struct BatchResult {
  std::vector<TrialRecord> records;
  std::vector<std::string> errors;  // per-trial failures (aborted trials, I/O)
};

// n trials with seeds cfg.trial.seed .. seed + n - 1. When `out_dir` is set,
// one CSV per trial is written there; I/O failures are recorded per trial.
// `jobs` > 1 runs trials on worker threads; results keep seed order.
[[nodiscard]] BatchResult run_batch(const SimConfig& cfg, int n_trials,
                                    const std::optional<std::filesystem::path>& out_dir = {},
                                    int jobs = 1);

// CSV with a leading "# " comment block echoing the resolved configuration.
void write_csv(std::ostream& out, const TrialRecord& record);
[[nodiscard]] std::string csv_string(const TrialRecord& record);
void write_csv_file(const std::filesystem::path& path, const TrialRecord& record);
[[nodiscard]] std::string csv_header_line();
[[nodiscard]] std::string trial_file_name(const TrialRecord& record);

// Parsed CSV: the echoed configuration text and rows (values at 9 digits).
struct ParsedCsv {
  std::string config_json;
  std::vector<LogRow> rows;
};
[[nodiscard]] ParsedCsv read_csv(std::istream& in);
[[nodiscard]] ParsedCsv read_csv_file(const std::filesystem::path& path);

}  // namespace sher
