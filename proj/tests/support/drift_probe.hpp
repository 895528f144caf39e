#pragma once
// Constant-heading lateral push against the port, used to exercise force
// regulation in the full simulation without the scripted operator's servo.

#include <cmath>
#include <vector>

#include "sher/sim.hpp"

namespace probe {

struct DriftSample {
  double t = 0.0;
  double F_s_norm = 0.0;
  double F_sx = 0.0;
  double F_sy = 0.0;
  double f_dx = 0.0;
  double f_dy = 0.0;
  bool active_x = false;
  bool active_y = false;
};

struct DriftRun {
  std::vector<DriftSample> samples;  // one per tick, after the step
  double first_activation = -1.0;
};

inline sher::OperatorCommand drift_command(const sher::SimConfig& cfg, sher::ControlMode mode,
                                           double speed, double heading) {
  sher::Vec6 v = sher::Vec6::Zero();
  v(0) = speed * std::cos(heading);
  v(1) = speed * std::sin(heading);
  sher::OperatorCommand cmd;
  if (sher::is_teleop(mode)) {
    cmd.master_velocity.head<3>() =
        cfg.teleop.master_to_body.transpose() * (v.head<3>() / cfg.teleop.scale);
  } else {
    for (Eigen::Index i = 0; i < 6; ++i) {
      const double k = cfg.admittance.diagonal(i);
      cmd.hand_wrench(i) = k > 0.0 ? v(i) / k : 0.0;
    }
  }
  return cmd;
}

inline DriftRun run_drift(sher::SimConfig cfg, sher::ControlMode mode, double stiffness,
                          double speed, double heading, double seconds) {
  cfg.trial.mode = mode;
  cfg.phantom.sclera_stiffness = stiffness;
  sher::Simulation sim(cfg);
  const sher::OperatorCommand cmd = drift_command(cfg, mode, speed, heading);
  DriftRun run;
  const auto ticks = static_cast<long>(std::lround(seconds / cfg.trial.dt));
  for (long k = 0; k < ticks; ++k) {
    sim.step(cmd);
    const sher::AdaptiveState& a = sim.adaptive();
    DriftSample s;
    s.t = sim.time();
    s.F_sx = sim.sensed().F_sx;
    s.F_sy = sim.sensed().F_sy;
    s.F_s_norm = sim.sensed().norm();
    s.f_dx = a.axes[0].f_d;
    s.f_dy = a.axes[1].f_d;
    s.active_x = a.axes[0].active;
    s.active_y = a.axes[1].active;
    if (run.first_activation < 0.0 && (s.active_x || s.active_y)) {
      run.first_activation = s.t;
    }
    run.samples.push_back(s);
  }
  return run;
}

}  // namespace probe
