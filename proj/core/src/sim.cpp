#include "sher/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "sher/errors.hpp"
#include "sher/rng.hpp"

namespace sher {

ColorOrder resolve_color_order(const TrialConfig& trial) {
  if (trial.color_order) {
    return *trial.color_order;
  }
  ColorOrder order = kAllColors;
  std::mt19937_64 rng(stream_seed(trial.seed, RngStream::ColorOrder));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

JointVector initial_configuration(const RobotDescription& desc, const EyePhantom& phantom,
                                  double depth) {
  const Vec3 n = phantom.port_normal();
  const Vec3 tip_target = phantom.entry_point - depth * n;
  const Vec3 axis_target = -n;
  JointVector q = JointVector::Zero();
  for (int iter = 0; iter < 200; ++iter) {
    const RigidTransform pose = forward_kinematics(desc, q);
    const Vec3 tip = pose.apply(Vec3(0.0, 0.0, -desc.tip_offset));
    const Vec3 u = -pose.R().col(2);
    const Vec3 v_err = tip_target - tip;
    const Vec3 cross = u.cross(axis_target);
    const double angle = std::atan2(cross.norm(), u.dot(axis_target));
    const Vec3 w_err = cross.norm() > 0.0 ? Vec3(cross.normalized() * angle) : Vec3::Zero();
    if (v_err.norm() < 1e-12 && angle < 1e-12) {
      return q;
    }
    // Spatial motion at the tip -> body twist of {B}.
    const Mat3 rt = pose.R().transpose();
    Vec6 body;
    body << rt * (v_err - w_err.cross(tip - pose.p())), rt * w_err;
    q += pseudo_inverse(body_jacobian(desc, q)) * body;
    for (Eigen::Index i = 0; i < 5; ++i) {
      const JointLimit& lim = desc.joint_limits[static_cast<std::size_t>(i)];
      q(i) = std::clamp(q(i), lim.min, lim.max);
    }
  }
  const RigidTransform pose = forward_kinematics(desc, q);
  const Vec3 tip = pose.apply(Vec3(0.0, 0.0, -desc.tip_offset));
  if ((tip - tip_target).norm() > 1e-6 || (-pose.R().col(2) - axis_target).norm() > 1e-6) {
    throw DomainError("no in-limit joint configuration places the tool through the port");
  }
  return q;
}

Vec6 handle_wrench(ControlMode mode, const Vec6& operator_wrench, const ScleraContact& contact,
                   const RigidTransform& pose) {
  if (!is_teleop(mode)) {
    return operator_wrench;
  }
  if (!contact.active) {
    return Vec6::Zero();
  }
  // Reaction of the sclera on the shaft, applied at the contact point.
  Vec6 w = Vec6::Zero();
  w.head<3>() = -contact.force_spatial;
  const RigidTransform contact_in_body =
      pose.inverse() * RigidTransform::translation(contact.contact_point);
  return transform_wrench(contact_in_body, w);
}

void update_activation(const AdaptiveParams& params, ControlMode mode, double t, double F_sx,
                       double F_sy, AdaptiveState& state) {
  if (!is_adaptive(mode)) {
    return;
  }
  const std::array<double, 2> forces = {F_sx, F_sy};
  for (std::size_t i = 0; i < 2; ++i) {
    AxisState& ax = state.axes[i];
    const double f = forces[i];
    if (!std::isfinite(f)) {
      throw SensorError("non-finite sclera force reading");
    }
    if (!ax.active && std::abs(f) >= params.T_a) {
      ax.active = true;
      ax.t_activation = t;
      ax.sign = f >= 0.0 ? 1.0 : -1.0;
    } else if (ax.active && std::abs(f) < params.T_r) {
      ax.active = false;
    }
    if (ax.active) {
      const ForceTrajectoryPoint p = desired_force_trajectory(params, ax, t, static_cast<Axis>(i));
      ax.f_d = p.f_d;
      ax.f_d_dot = p.f_d_dot;
    } else {
      ax.f_d = 0.0;
      ax.f_d_dot = 0.0;
    }
  }
}

Simulation::Simulation(SimConfig cfg)
    : cfg_(std::move(cfg)),
      mode_(cfg_.trial.mode),
      sensor_rng_(stream_seed(cfg_.trial.seed, RngStream::Sensor)) {
  cfg_.validate();
  order_ = resolve_color_order(cfg_.trial);
  cfg_.trial.color_order = order_;
  q_ = initial_configuration(cfg_.robot, cfg_.phantom, cfg_.trial.initial_depth);
  adaptive_ = AdaptiveState::initial(cfg_.adaptive);
  sense_and_update();
}

void Simulation::set_scale(double scale) {
  TeleopMapping m = cfg_.teleop;
  m.scale = scale;
  m.validate();
  cfg_.teleop = m;
}

const Vec3* Simulation::target() const {
  return current_waypoint(cfg_.phantom.vessels, order_, progress_);
}

void Simulation::sense_and_update() {
  pose_ = forward_kinematics(cfg_.robot, q_);
  tip_ = pose_.apply(Vec3(0.0, 0.0, -cfg_.robot.tip_offset));
  contact_ = compute_contact(cfg_.phantom, pose_, tip_);
  sensed_ = sense_sclera_force(contact_, cfg_.sensor_noise_rms, sensor_rng_);
  update_activation(cfg_.adaptive, mode_, time(), sensed_.F_sx, sensed_.F_sy, adaptive_);
}

void Simulation::step(const OperatorCommand& cmd) {
  const double dt = cfg_.trial.dt;
  Vec6 operator_velocity;
  if (is_teleop(mode_)) {
    TeleopMapping map = cfg_.teleop;
    map.clutch = cmd.clutch;
    operator_velocity = teleop_velocity(map, cmd.master_velocity);
  } else {
    operator_velocity = cooperative_velocity(cfg_.admittance, cmd.hand_wrench);
  }
  const PolicyOutput policy = control_policy(cfg_.adaptive, mode_, time(), dt, sensed_.F_sx,
                                             sensed_.F_sy, operator_velocity, adaptive_);
  const RateSolution sol = solve_rates(cfg_.robot, q_, policy.velocity, dt, cfg_.optimizer);
  q_ = integrate_joints(q_, sol.qdot, dt);
  qdot_ = sol.qdot;
  ++tick_;
  last_clutch_ = is_teleop(mode_) && cmd.clutch;

  sense_and_update();
  handle_ = handle_wrench(mode_, cmd.hand_wrench, contact_, pose_);

  const bool was_complete = progress_.complete;
  if (!was_complete) {
    progress_ = task_progress(cfg_.phantom.vessels, order_, tip_, progress_);
  }
  const bool just_completed = !was_complete && progress_.complete;
  if (just_completed ||
      tick_ % static_cast<std::uint64_t>(cfg_.trial.log_decimation) == 0) {
    rows_.push_back(current_row());
  }
}

LogRow Simulation::current_row() const {
  LogRow r;
  r.t = time();
  r.q = q_;
  r.qdot = qdot_;
  r.tip = tip_;
  r.F_sx = sensed_.F_sx;
  r.F_sy = sensed_.F_sy;
  r.F_s_norm = sensed_.norm();
  r.f_dx = adaptive_.axes[0].f_d;
  r.f_dy = adaptive_.axes[1].f_d;
  r.alpha_x = adaptive_.axes[0].alpha;
  r.alpha_y = adaptive_.axes[1].alpha;
  r.active_x = adaptive_.axes[0].active;
  r.active_y = adaptive_.axes[1].active;
  r.handle = handle_;
  r.insertion_depth = contact_.insertion_depth;
  r.mode = mode_;
  r.cursor = cursor_label(order_, progress_);
  return r;
}

TrialSummary summarize_rows(const std::vector<LogRow>& rows, double threshold) {
  TrialSummary s;
  s.rows = rows.size();
  if (rows.empty()) {
    return s;
  }
  double sum_fs = 0.0;
  double sum_hf = 0.0;
  double sum_ht = 0.0;
  std::size_t over = 0;
  for (const LogRow& r : rows) {
    sum_fs += r.F_s_norm;
    s.max_fs = std::max(s.max_fs, r.F_s_norm);
    sum_hf += r.handle.head<3>().norm();
    sum_ht += r.handle.tail<3>().norm();
    if (r.F_s_norm > threshold) {
      ++over;
    }
    if (!s.completed && r.cursor == "done") {
      s.completed = true;
      s.completion_time = r.t;
    }
  }
  const auto n = static_cast<double>(rows.size());
  s.mean_fs = sum_fs / n;
  s.mean_handle_force = sum_hf / n;
  s.mean_handle_torque = sum_ht / n;
  s.pct_over_threshold = 100.0 * static_cast<double>(over) / n;
  return s;
}

TrialRecord run_trial(const SimConfig& cfg) {
  SimConfig resolved = cfg;
  resolved.trial.color_order = resolve_color_order(cfg.trial);

  TrialRecord rec;
  rec.mode = resolved.trial.mode;
  rec.seed = resolved.trial.seed;
  rec.order = *resolved.trial.color_order;
  rec.config_json = config_to_json(resolved);

  std::optional<Simulation> sim;
  try {
    sim.emplace(resolved);
    ScriptedOperator op(resolved, resolved.trial.seed);
    const auto ticks = static_cast<std::uint64_t>(
        std::llround(resolved.trial.max_duration / resolved.trial.dt));
    while (sim->tick() < ticks && !sim->complete()) {
      sim->step(op.emit(*sim));
    }
  } catch (const Error& e) {
    rec.aborted = true;
    rec.diagnostic = e.what();
  }
  if (sim) {
    rec.rows = sim->take_rows();
  }
  rec.summary = summarize_rows(rec.rows, resolved.adaptive.T_s);
  return rec;
}

std::string trial_file_name(const TrialRecord& record) {
  return std::string(mode_name(record.mode)) + "_seed" + std::to_string(record.seed) + ".csv";
}

BatchResult run_batch(const SimConfig& cfg, int n_trials,
                      const std::optional<std::filesystem::path>& out_dir, int jobs) {
  if (n_trials < 1) {
    throw ContractError("run_batch: need at least one trial");
  }
  BatchResult result;
  result.records.resize(static_cast<std::size_t>(n_trials));
  std::vector<std::string> errors(static_cast<std::size_t>(n_trials));

  auto run_one = [&](std::size_t i) {
    SimConfig c = cfg;
    c.trial.seed = cfg.trial.seed + i;
    TrialRecord rec = run_trial(c);
    if (rec.aborted) {
      errors[i] = trial_file_name(rec) + ": aborted: " + rec.diagnostic;
    }
    if (out_dir) {
      try {
        write_csv_file(*out_dir / trial_file_name(rec), rec);
      } catch (const std::exception& e) {
        errors[i] += (errors[i].empty() ? "" : "; ") + trial_file_name(rec) + ": " + e.what();
      }
    }
    result.records[i] = std::move(rec);
  };

  const auto n = static_cast<std::size_t>(n_trials);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      run_one(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const auto workers_n = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    for (std::size_t w = 0; w < workers_n; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          run_one(i);
        }
      });
    }
    for (std::thread& t : workers) {
      t.join();
    }
  }
  for (std::string& e : errors) {
    if (!e.empty()) {
      result.errors.push_back(std::move(e));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

void put(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  line += buf;
  line += ',';
}

}  // namespace

std::string csv_header_line() {
  return "t,q1,q2,q3,q4,q5,qd1,qd2,qd3,qd4,qd5,tip_x,tip_y,tip_z,F_sx,F_sy,F_s_norm,f_dx,f_dy,"
         "alpha_x,alpha_y,active_x,active_y,h_fx,h_fy,h_fz,h_tx,h_ty,h_tz,insertion_depth,mode,"
         "color_cursor";
}

void write_csv(std::ostream& out, const TrialRecord& record) {
  out << "# sher trial log v1\n";
  out << "# mode=" << mode_name(record.mode) << " seed=" << record.seed
      << " color_order=" << order_string(record.order) << '\n';
  if (record.aborted) {
    out << "# aborted: " << record.diagnostic << '\n';
  }
  out << "# config-begin\n";
  std::istringstream cfg(record.config_json);
  for (std::string line; std::getline(cfg, line);) {
    out << "# " << line << '\n';
  }
  out << "# config-end\n";
  out << csv_header_line() << '\n';
  std::string line;
  for (const LogRow& r : record.rows) {
    line.clear();
    put(line, r.t);
    for (Eigen::Index i = 0; i < 5; ++i) {
      put(line, r.q(i));
    }
    for (Eigen::Index i = 0; i < 5; ++i) {
      put(line, r.qdot(i));
    }
    put(line, r.tip.x());
    put(line, r.tip.y());
    put(line, r.tip.z());
    put(line, r.F_sx);
    put(line, r.F_sy);
    put(line, r.F_s_norm);
    put(line, r.f_dx);
    put(line, r.f_dy);
    put(line, r.alpha_x);
    put(line, r.alpha_y);
    line += r.active_x ? "1," : "0,";
    line += r.active_y ? "1," : "0,";
    for (Eigen::Index i = 0; i < 6; ++i) {
      put(line, r.handle(i));
    }
    put(line, r.insertion_depth);
    line += mode_name(r.mode);
    line += ',';
    line += r.cursor;
    out << line << '\n';
  }
}

std::string csv_string(const TrialRecord& record) {
  std::ostringstream out;
  write_csv(out, record);
  return out.str();
}

void write_csv_file(const std::filesystem::path& path, const TrialRecord& record) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot open '" + path.string() + "' for writing");
  }
  write_csv(out, record);
  out.flush();
  if (!out) {
    throw Error("failed writing '" + path.string() + "'");
  }
}

ParsedCsv read_csv(std::istream& in) {
  ParsedCsv parsed;
  bool in_config = false;
  bool header_seen = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.starts_with("#")) {
      if (line == "# config-begin") {
        in_config = true;
      } else if (line == "# config-end") {
        in_config = false;
      } else if (in_config) {
        parsed.config_json += line.substr(std::min<std::size_t>(2, line.size())) + '\n';
      }
      continue;
    }
    if (line.empty()) {
      continue;
    }
    if (!header_seen) {
      if (line != csv_header_line()) {
        throw ConfigError("CSV header does not match the trial log schema (line " +
                          std::to_string(line_no) + ")");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) {
        break;
      }
      start = comma + 1;
    }
    if (cells.size() != 32) {
      throw ConfigError("CSV line " + std::to_string(line_no) + " has " +
                        std::to_string(cells.size()) + " cells, expected 32");
    }
    auto num = [&](std::size_t i) {
      try {
        return std::stod(cells[i]);
      } catch (const std::exception&) {
        throw ConfigError("CSV line " + std::to_string(line_no) + ": bad number '" + cells[i] +
                          "'");
      }
    };
    LogRow r;
    std::size_t c = 0;
    r.t = num(c++);
    for (Eigen::Index i = 0; i < 5; ++i) {
      r.q(i) = num(c++);
    }
    for (Eigen::Index i = 0; i < 5; ++i) {
      r.qdot(i) = num(c++);
    }
    r.tip = Vec3(num(c), num(c + 1), num(c + 2));
    c += 3;
    r.F_sx = num(c++);
    r.F_sy = num(c++);
    r.F_s_norm = num(c++);
    r.f_dx = num(c++);
    r.f_dy = num(c++);
    r.alpha_x = num(c++);
    r.alpha_y = num(c++);
    r.active_x = num(c++) != 0.0;
    r.active_y = num(c++) != 0.0;
    for (Eigen::Index i = 0; i < 6; ++i) {
      r.handle(i) = num(c++);
    }
    r.insertion_depth = num(c++);
    r.mode = parse_mode(cells[c++]);
    r.cursor = cells[c++];
    parsed.rows.push_back(std::move(r));
  }
  if (!header_seen) {
    throw ConfigError("CSV has no header row");
  }
  return parsed;
}

ParsedCsv read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open '" + path.string() + "'");
  }
  return read_csv(in);
}

}  // namespace sher
