#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sher/control.hpp"
#include "sher/eye.hpp"
#include "sher/robot_model.hpp"

namespace sher {

// Wire schema version announced in the hello handshake.
inline constexpr int kProtocolVersion = 1;

struct MasterVelocityCmd {
  Vec3 v = Vec3::Zero();      // mm/s, master frame
  Vec3 omega = Vec3::Zero();  // rad/s
};
struct ClutchCmd {
  bool engaged = false;
};
struct SetModeCmd {
  ControlMode mode = ControlMode::Teleop;
};
struct SetScaleCmd {
  double scale = 1.0;
};
struct ResetCmd {
  std::uint64_t seed = 0;
};
struct StartTrialCmd {
  std::optional<ColorOrder> color_order;  // seed-derived when empty
};

using Command =
    std::variant<MasterVelocityCmd, ClutchCmd, SetModeCmd, SetScaleCmd, ResetCmd, StartTrialCmd>;

// One JSON object per line, e.g.
//   {"type":"master_velocity","v":[1,0,0],"omega":[0,0,0]}
//   {"type":"start_trial","color_order":"RGBY"}
// Throws ProtocolError on malformed input, unknown types or unknown fields.
[[nodiscard]] Command parse_command(std::string_view line);
[[nodiscard]] std::string serialize_command(const Command& cmd);
[[nodiscard]] std::string_view command_type(const Command& cmd);

// A command stamped with the session tick it was applied before.
struct TimedCommand {
  std::uint64_t tick = 0;
  Command cmd;
};

// JSONL: {"tick":N,"cmd":{...}} per line.
[[nodiscard]] std::string serialize_timed_command(const TimedCommand& tc);
[[nodiscard]] TimedCommand parse_timed_command(std::string_view line);
void write_command_log(std::ostream& out, const std::vector<TimedCommand>& log);
[[nodiscard]] std::vector<TimedCommand> read_command_log(std::istream& in);

struct StateSnapshot {
  std::uint64_t tick = 0;  // session tick
  double t = 0.0;          // session time, s (monotone)
  double trial_t = 0.0;    // time inside the running trial, s
  bool trial_running = false;
  Vec3 tip = Vec3::Zero();
  JointVector q = JointVector::Zero();
  double F_sx = 0.0;
  double F_sy = 0.0;
  double F_s_norm = 0.0;
  double f_dx = 0.0;
  double f_dy = 0.0;
  double alpha_x = 0.0;
  double alpha_y = 0.0;
  bool active_x = false;
  bool active_y = false;
  ControlMode mode = ControlMode::Teleop;
  double insertion_depth = 0.0;
  std::string color;  // current color letter, empty once the task is done
  std::size_t waypoint = 0;
  bool complete = false;
  bool clutch = false;
  double scale = 1.0;

  bool operator==(const StateSnapshot&) const = default;
};

[[nodiscard]] std::string serialize_snapshot(const StateSnapshot& s);
[[nodiscard]] StateSnapshot parse_snapshot(std::string_view line);

// Server-originated envelopes.
[[nodiscard]] std::string hello_message(bool interactive);
[[nodiscard]] std::string error_message(std::string_view what);
[[nodiscard]] std::string ack_message(std::string_view type);
[[nodiscard]] std::string trial_complete_message(std::string_view file, bool completed,
                                                 double completion_time, double max_fs);

}  // namespace sher
