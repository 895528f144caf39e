#include "sher/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sher/errors.hpp"

namespace sher {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::string& section, const std::set<std::string>& allowed) {
  if (!j.is_object()) {
    throw ConfigError("config section '" + section + "' must be an object");
  }
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown config key '" + section + "." + key + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) {
    return;
  }
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + section + "." + key + "': " + e.what());
  }
}

Vec3 to_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError("'" + where + "' must be a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Vec6 to_vec6(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 6) {
    throw ConfigError("'" + where + "' must be a 6-element array");
  }
  Vec6 v;
  for (Eigen::Index i = 0; i < 6; ++i) {
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

Mat3 to_mat3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError("'" + where + "' must be a 3x3 array");
  }
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    const Vec3 row = to_vec3(j[static_cast<std::size_t>(r)], where);
    m.row(r) = row.transpose();
  }
  return m;
}

json from_vec(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    a.push_back(v(i));
  }
  return a;
}

json from_mat3(const Mat3& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r) {
    a.push_back(from_vec(m.row(r).transpose()));
  }
  return a;
}

ColorOrder parse_order(const json& j) {
  if (j.is_string()) {
    return parse_color_order(j.get<std::string>());
  }
  ColorOrder order{};
  if (j.is_array() && j.size() == 4) {
    for (std::size_t i = 0; i < 4; ++i) {
      order[i] = parse_color(j[i].get<std::string>());
    }
  } else {
    throw ConfigError("color_order must be a string like \"RGBY\" or an array of four colors");
  }
  if (!is_permutation_of_colors(order)) {
    throw ConfigError("color_order must be a permutation of R, G, B, Y");
  }
  return order;
}

void apply_robot(RobotDescription& r, const json& j) {
  require_keys(j, "robot", {"screws", "home", "tip_offset", "joint_limits", "joint_rate_limits"});
  if (j.contains("screws")) {
    const json& s = j.at("screws");
    if (!s.is_array() || s.size() != kNumJoints) {
      throw ConfigError("robot.screws must hold five 6-vectors (v, w)");
    }
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      r.screws[i] = Twist::from_coordinates(to_vec6(s[i], "robot.screws"));
    }
  }
  if (j.contains("home")) {
    const json& h = j.at("home");
    require_keys(h, "robot.home", {"R", "p"});
    Mat3 rot = r.home.R();
    Vec3 pos = r.home.p();
    if (h.contains("R")) {
      rot = to_mat3(h.at("R"), "robot.home.R");
    }
    if (h.contains("p")) {
      pos = to_vec3(h.at("p"), "robot.home.p");
    }
    r.home = RigidTransform(rot, pos);
  }
  read(j, "tip_offset", r.tip_offset, "robot");
  if (j.contains("joint_limits")) {
    const json& l = j.at("joint_limits");
    if (!l.is_array() || l.size() != kNumJoints) {
      throw ConfigError("robot.joint_limits must hold five [min, max] pairs");
    }
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      if (!l[i].is_array() || l[i].size() != 2) {
        throw ConfigError("robot.joint_limits entries must be [min, max]");
      }
      r.joint_limits[i] = {l[i][0].get<double>(), l[i][1].get<double>()};
    }
  }
  if (j.contains("joint_rate_limits")) {
    const json& l = j.at("joint_rate_limits");
    if (!l.is_array() || l.size() != kNumJoints) {
      throw ConfigError("robot.joint_rate_limits must hold five values");
    }
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      r.joint_rate_limits[i] = l[i].get<double>();
    }
  }
}

bool apply_phantom(EyePhantom& p, const json& j) {
  require_keys(j, "phantom", {"center", "radius", "entry_point", "sclera_stiffness", "vessels"});
  if (j.contains("center")) {
    p.center = to_vec3(j.at("center"), "phantom.center");
  }
  read(j, "radius", p.radius, "phantom");
  if (j.contains("entry_point")) {
    p.entry_point = to_vec3(j.at("entry_point"), "phantom.entry_point");
  }
  read(j, "sclera_stiffness", p.sclera_stiffness, "phantom");
  if (!j.contains("vessels")) {
    return false;
  }
  const json& vs = j.at("vessels");
  if (!vs.is_array() || vs.size() != 4) {
    throw ConfigError("phantom.vessels must list exactly four paths");
  }
  std::array<bool, 4> seen{};
  for (const json& v : vs) {
    require_keys(v, "phantom.vessels[]", {"color", "waypoints", "capture_radius"});
    ColoredPath path;
    path.color = parse_color(v.at("color").get<std::string>());
    read(v, "capture_radius", path.capture_radius, "phantom.vessels[]");
    for (const json& w : v.at("waypoints")) {
      path.waypoints.push_back(to_vec3(w, "phantom.vessels[].waypoints"));
    }
    const auto idx = static_cast<std::size_t>(path.color);
    if (seen[idx]) {
      throw ConfigError("phantom.vessels lists a color twice");
    }
    seen[idx] = true;
    p.vessels[idx] = std::move(path);
  }
  return true;
}

}  // namespace

void OperatorParams::validate() const {
  if (!(tremor_rms >= 0.0)) {
    throw ConfigError("operator.tremor_rms must be >= 0");
  }
  if (!(velocity_cap > 0.0)) {
    throw ConfigError("operator.velocity_cap must be > 0");
  }
  if (!(tremor_low_hz > 0.0 && tremor_low_hz < tremor_high_hz)) {
    throw ConfigError("operator tremor band must satisfy 0 < low < high");
  }
  if (!(drift_min >= 0.0 && drift_min <= drift_max)) {
    throw ConfigError("operator drift needs 0 <= drift_min <= drift_max");
  }
  if (!(drift_segment_min > 0.0 && drift_segment_min <= drift_segment_max)) {
    throw ConfigError("operator drift segments need 0 < min <= max");
  }
  if (!(tip_gain > 0.0 && master_workspace > 0.0 && reposition_time > 0.0)) {
    throw ConfigError("operator gains, master workspace and reposition time must be > 0");
  }
}

void TrialConfig::validate() const {
  if (!(dt > 0.0)) {
    throw ConfigError("--dt must be > 0");
  }
  if (!(max_duration >= 0.0)) {
    throw ConfigError("--duration must be >= 0");
  }
  if (log_decimation < 1) {
    throw ConfigError("log decimation must be >= 1");
  }
  if (color_order && !is_permutation_of_colors(*color_order)) {
    throw ConfigError("color order must be a permutation of R, G, B, Y");
  }
  if (!std::isfinite(initial_depth)) {
    throw ConfigError("trial.initial_depth must be finite");
  }
}

void SimConfig::validate() const {
  robot.validate();
  phantom.validate();
  admittance.validate();
  teleop.validate();
  adaptive.validate();
  operator_model.validate();
  trial.validate();
  if (!(sensor_noise_rms >= 0.0)) {
    throw ConfigError("sensor.noise_rms must be >= 0");
  }
  if (!(staleness_timeout > 0.0)) {
    throw ConfigError("live.staleness_timeout must be > 0");
  }
  if ((optimizer.weights.array() <= 0.0).any() || !(optimizer.damping >= 0.0)) {
    throw ConfigError("optimizer weights must be > 0 and damping >= 0");
  }
}

SimConfig default_config() {
  SimConfig cfg;
  cfg.phantom.vessels = generate_vessels(cfg.phantom, cfg.vessels);
  return cfg;
}

void apply_config_json(SimConfig& cfg, const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  require_keys(j, "<root>",
               {"robot", "phantom", "vessel_layout", "admittance", "teleop", "adaptive",
                "optimizer", "sensor", "live", "operator", "trial"});
  try {
    if (j.contains("robot")) {
      apply_robot(cfg.robot, j.at("robot"));
    }
    bool explicit_vessels = false;
    if (j.contains("phantom")) {
      explicit_vessels = apply_phantom(cfg.phantom, j.at("phantom"));
    }
    if (j.contains("vessel_layout")) {
      const json& v = j.at("vessel_layout");
      const std::string s = "vessel_layout";
      require_keys(v, s,
                   {"seed", "waypoints", "capture_radius", "max_polar_deg", "min_arc_deg",
                    "max_arc_deg"});
      read(v, "seed", cfg.vessels.seed, s);
      read(v, "waypoints", cfg.vessels.waypoints, s);
      read(v, "capture_radius", cfg.vessels.capture_radius, s);
      read(v, "max_polar_deg", cfg.vessels.max_polar_deg, s);
      read(v, "min_arc_deg", cfg.vessels.min_arc_deg, s);
      read(v, "max_arc_deg", cfg.vessels.max_arc_deg, s);
    }
    if (!explicit_vessels) {
      cfg.phantom.vessels = generate_vessels(cfg.phantom, cfg.vessels);
    }
    if (j.contains("admittance")) {
      const json& a = j.at("admittance");
      require_keys(a, "admittance", {"diagonal"});
      if (a.contains("diagonal")) {
        cfg.admittance.diagonal = to_vec6(a.at("diagonal"), "admittance.diagonal");
      }
    }
    if (j.contains("teleop")) {
      const json& t = j.at("teleop");
      require_keys(t, "teleop", {"scale", "master_to_body"});
      read(t, "scale", cfg.teleop.scale, "teleop");
      if (t.contains("master_to_body")) {
        cfg.teleop.master_to_body = to_mat3(t.at("master_to_body"), "teleop.master_to_body");
      }
    }
    if (j.contains("adaptive")) {
      const json& a = j.at("adaptive");
      const std::string s = "adaptive";
      require_keys(a, s, {"T_s", "T_a", "T_r", "K_f", "Gamma", "alpha0", "exponent"});
      read(a, "T_s", cfg.adaptive.T_s, s);
      read(a, "T_a", cfg.adaptive.T_a, s);
      read(a, "T_r", cfg.adaptive.T_r, s);
      read(a, "K_f", cfg.adaptive.K_f, s);
      read(a, "Gamma", cfg.adaptive.Gamma, s);
      read(a, "alpha0", cfg.adaptive.alpha0, s);
      if (a.contains("exponent")) {
        cfg.adaptive.exponent = parse_exponent(a.at("exponent").get<std::string>());
      }
    }
    if (j.contains("optimizer")) {
      const json& o = j.at("optimizer");
      require_keys(o, "optimizer", {"weights", "damping", "max_iterations"});
      if (o.contains("weights")) {
        cfg.optimizer.weights = to_vec6(o.at("weights"), "optimizer.weights");
      }
      read(o, "damping", cfg.optimizer.damping, "optimizer");
      read(o, "max_iterations", cfg.optimizer.max_iterations, "optimizer");
    }
    if (j.contains("sensor")) {
      require_keys(j.at("sensor"), "sensor", {"noise_rms"});
      read(j.at("sensor"), "noise_rms", cfg.sensor_noise_rms, "sensor");
    }
    if (j.contains("live")) {
      require_keys(j.at("live"), "live", {"staleness_timeout"});
      read(j.at("live"), "staleness_timeout", cfg.staleness_timeout, "live");
    }
    if (j.contains("operator")) {
      const json& o = j.at("operator");
      const std::string s = "operator";
      OperatorParams& op = cfg.operator_model;
      require_keys(o, s,
                   {"tip_gain", "velocity_cap", "hover", "min_lever", "rcm_awareness",
                    "tremor_rms", "tremor_low_hz", "tremor_high_hz", "drift_min", "drift_max",
                    "drift_segment_min", "drift_segment_max", "master_workspace",
                    "reposition_time"});
      read(o, "tip_gain", op.tip_gain, s);
      read(o, "velocity_cap", op.velocity_cap, s);
      read(o, "hover", op.hover, s);
      read(o, "min_lever", op.min_lever, s);
      read(o, "rcm_awareness", op.rcm_awareness, s);
      read(o, "tremor_rms", op.tremor_rms, s);
      read(o, "tremor_low_hz", op.tremor_low_hz, s);
      read(o, "tremor_high_hz", op.tremor_high_hz, s);
      read(o, "drift_min", op.drift_min, s);
      read(o, "drift_max", op.drift_max, s);
      read(o, "drift_segment_min", op.drift_segment_min, s);
      read(o, "drift_segment_max", op.drift_segment_max, s);
      read(o, "master_workspace", op.master_workspace, s);
      read(o, "reposition_time", op.reposition_time, s);
    }
    if (j.contains("trial")) {
      const json& t = j.at("trial");
      const std::string s = "trial";
      require_keys(t, s,
                   {"mode", "seed", "dt", "max_duration", "log_decimation", "color_order",
                    "initial_depth"});
      if (t.contains("mode")) {
        cfg.trial.mode = parse_mode(t.at("mode").get<std::string>());
      }
      read(t, "seed", cfg.trial.seed, s);
      read(t, "dt", cfg.trial.dt, s);
      read(t, "max_duration", cfg.trial.max_duration, s);
      read(t, "log_decimation", cfg.trial.log_decimation, s);
      read(t, "initial_depth", cfg.trial.initial_depth, s);
      if (t.contains("color_order")) {
        if (t.at("color_order").is_null()) {
          cfg.trial.color_order.reset();
        } else {
          cfg.trial.color_order = parse_order(t.at("color_order"));
        }
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path.string() + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  SimConfig cfg = default_config();
  apply_config_json(cfg, text.str());
  return cfg;
}

std::string config_to_json(const SimConfig& cfg) {
  json j;
  {
    json r;
    json screws = json::array();
    for (const Twist& s : cfg.robot.screws) {
      screws.push_back(from_vec(s.coordinates()));
    }
    r["screws"] = screws;
    r["home"] = {{"R", from_mat3(cfg.robot.home.R())}, {"p", from_vec(cfg.robot.home.p())}};
    r["tip_offset"] = cfg.robot.tip_offset;
    json limits = json::array();
    for (const JointLimit& l : cfg.robot.joint_limits) {
      limits.push_back({l.min, l.max});
    }
    r["joint_limits"] = limits;
    r["joint_rate_limits"] = cfg.robot.joint_rate_limits;
    j["robot"] = r;
  }
  {
    json p;
    p["center"] = from_vec(cfg.phantom.center);
    p["radius"] = cfg.phantom.radius;
    p["entry_point"] = from_vec(cfg.phantom.entry_point);
    p["sclera_stiffness"] = cfg.phantom.sclera_stiffness;
    json vs = json::array();
    for (const ColoredPath& path : cfg.phantom.vessels) {
      json wps = json::array();
      for (const Vec3& w : path.waypoints) {
        wps.push_back(from_vec(w));
      }
      vs.push_back({{"color", std::string(1, color_letter(path.color))},
                    {"capture_radius", path.capture_radius},
                    {"waypoints", wps}});
    }
    p["vessels"] = vs;
    j["phantom"] = p;
  }
  j["vessel_layout"] = {{"seed", cfg.vessels.seed},
                        {"waypoints", cfg.vessels.waypoints},
                        {"capture_radius", cfg.vessels.capture_radius},
                        {"max_polar_deg", cfg.vessels.max_polar_deg},
                        {"min_arc_deg", cfg.vessels.min_arc_deg},
                        {"max_arc_deg", cfg.vessels.max_arc_deg}};
  j["admittance"] = {{"diagonal", from_vec(cfg.admittance.diagonal)}};
  j["teleop"] = {{"scale", cfg.teleop.scale},
                 {"master_to_body", from_mat3(cfg.teleop.master_to_body)}};
  j["adaptive"] = {{"T_s", cfg.adaptive.T_s},
                   {"T_a", cfg.adaptive.T_a},
                   {"T_r", cfg.adaptive.T_r},
                   {"K_f", cfg.adaptive.K_f},
                   {"Gamma", cfg.adaptive.Gamma},
                   {"alpha0", cfg.adaptive.alpha0},
                   {"exponent", std::string(exponent_name(cfg.adaptive.exponent))}};
  j["optimizer"] = {{"weights", from_vec(cfg.optimizer.weights)},
                    {"damping", cfg.optimizer.damping},
                    {"max_iterations", cfg.optimizer.max_iterations}};
  j["sensor"] = {{"noise_rms", cfg.sensor_noise_rms}};
  j["live"] = {{"staleness_timeout", cfg.staleness_timeout}};
  const OperatorParams& op = cfg.operator_model;
  j["operator"] = {{"tip_gain", op.tip_gain},
                   {"velocity_cap", op.velocity_cap},
                   {"hover", op.hover},
                   {"min_lever", op.min_lever},
                   {"rcm_awareness", op.rcm_awareness},
                   {"tremor_rms", op.tremor_rms},
                   {"tremor_low_hz", op.tremor_low_hz},
                   {"tremor_high_hz", op.tremor_high_hz},
                   {"drift_min", op.drift_min},
                   {"drift_max", op.drift_max},
                   {"drift_segment_min", op.drift_segment_min},
                   {"drift_segment_max", op.drift_segment_max},
                   {"master_workspace", op.master_workspace},
                   {"reposition_time", op.reposition_time}};
  json trial = {{"mode", std::string(mode_name(cfg.trial.mode))},
                {"seed", cfg.trial.seed},
                {"dt", cfg.trial.dt},
                {"max_duration", cfg.trial.max_duration},
                {"log_decimation", cfg.trial.log_decimation},
                {"initial_depth", cfg.trial.initial_depth}};
  trial["color_order"] =
      cfg.trial.color_order ? json(order_string(*cfg.trial.color_order)) : json(nullptr);
  j["trial"] = trial;
  return j.dump(2);
}

}  // namespace sher
