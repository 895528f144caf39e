#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "sher/config.hpp"
#include "sher/protocol.hpp"
#include "sher/sim.hpp"

namespace sher {

/// Tick-stamped live teleoperation session shared by the network bridge and
/// offline replay. Commands are applied between ticks and recorded with the
/// tick they precede, so feeding the same log to a fresh session reproduces
/// every trial exactly.
///
/// Master velocities are held (latest wins) for `staleness_timeout`, then
/// read as zero. Cooperative modes turn the master velocity into a hand wrench
/// K^-1 v so the same input device drives all four modes.
class LiveSession {
 public:
  explicit LiveSession(SimConfig cfg);

  void apply(const Command& cmd);
  void tick();

  [[nodiscard]] std::uint64_t ticks() const { return tick_; }
  [[nodiscard]] double time() const { return static_cast<double>(tick_) * base_.trial.dt; }
  [[nodiscard]] bool trial_running() const { return running_; }
  [[nodiscard]] StateSnapshot snapshot() const;
  [[nodiscard]] const std::vector<TimedCommand>& command_log() const { return log_; }
  [[nodiscard]] std::uint64_t staleness_ticks() const { return staleness_ticks_; }

  // Trials finished since the last call, in completion order.
  [[nodiscard]] std::vector<TrialRecord> take_finished();

 private:
  void rebuild_idle();
  void finish_trial();
  [[nodiscard]] SimConfig trial_config() const;
  [[nodiscard]] OperatorCommand operator_command() const;

  SimConfig base_;
  ControlMode mode_;
  double scale_;
  std::uint64_t seed_;
  bool clutch_ = false;
  std::optional<std::uint64_t> velocity_tick_;
  Vec6 velocity_ = Vec6::Zero();
  std::uint64_t staleness_ticks_;
  std::uint64_t max_trial_ticks_;

  std::uint64_t tick_ = 0;
  bool running_ = false;
  std::unique_ptr<Simulation> sim_;
  std::string trial_config_json_;
  std::vector<TimedCommand> log_;
  std::vector<TrialRecord> finished_;
};

// Offline driver: applies each command at its tick and runs until the log is
// exhausted and no trial is running (or `max_ticks` elapse). Returns every
// finished trial.
[[nodiscard]] std::vector<TrialRecord> run_command_timeline(
    const SimConfig& cfg, const std::vector<TimedCommand>& timeline,
    std::uint64_t max_ticks = 100'000'000);

}  // namespace sher
