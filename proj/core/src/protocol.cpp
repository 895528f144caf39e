#include "sher/protocol.hpp"

#include <cmath>
#include <set>

#include "json.hpp"
#include "sher/errors.hpp"

namespace sher {

using nlohmann::json;

namespace {

json vec(const auto& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    a.push_back(v(i));
  }
  return a;
}

template <int N>
Eigen::Matrix<double, N, 1> read_vec(const json& j, const char* key) {
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != static_cast<std::size_t>(N)) {
    throw ProtocolError(std::string("field '") + key + "' must be an array of " +
                        std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!a[static_cast<std::size_t>(i)].is_number()) {
      throw ProtocolError(std::string("field '") + key + "' must hold numbers");
    }
    v(i) = a[static_cast<std::size_t>(i)].get<double>();
    if (!std::isfinite(v(i))) {
      throw ProtocolError(std::string("field '") + key + "' must be finite");
    }
  }
  return v;
}

void only_keys(const json& j, std::initializer_list<const char*> allowed) {
  std::set<std::string> ok;
  for (const char* k : allowed) {
    ok.insert(k);
  }
  for (const auto& item : j.items()) {
    if (!ok.contains(item.key())) {
      throw ProtocolError("unknown field '" + item.key() + "'");
    }
  }
}

json parse_object(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) {
    throw ProtocolError("message is not valid JSON");
  }
  if (!j.is_object()) {
    throw ProtocolError("message must be a JSON object");
  }
  return j;
}

json command_json(const Command& cmd) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, MasterVelocityCmd>) {
          return {{"type", "master_velocity"}, {"v", vec(c.v)}, {"omega", vec(c.omega)}};
        } else if constexpr (std::is_same_v<T, ClutchCmd>) {
          return {{"type", "clutch"}, {"engaged", c.engaged}};
        } else if constexpr (std::is_same_v<T, SetModeCmd>) {
          return {{"type", "set_mode"}, {"mode", mode_name(c.mode)}};
        } else if constexpr (std::is_same_v<T, SetScaleCmd>) {
          return {{"type", "set_scale"}, {"scale", c.scale}};
        } else if constexpr (std::is_same_v<T, ResetCmd>) {
          return {{"type", "reset"}, {"seed", c.seed}};
        } else {
          return {{"type", "start_trial"},
                  {"color_order",
                   c.color_order ? json(order_string(*c.color_order)) : json(nullptr)}};
        }
      },
      cmd);
}

Command command_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw ProtocolError("command needs a string 'type'");
  }
  const std::string type = j.at("type").get<std::string>();
  try {
    if (type == "master_velocity") {
      only_keys(j, {"type", "v", "omega"});
      MasterVelocityCmd c;
      c.v = read_vec<3>(j, "v");
      if (j.contains("omega")) {
        c.omega = read_vec<3>(j, "omega");
      }
      return c;
    }
    if (type == "clutch") {
      only_keys(j, {"type", "engaged"});
      return ClutchCmd{j.at("engaged").get<bool>()};
    }
    if (type == "set_mode") {
      only_keys(j, {"type", "mode"});
      return SetModeCmd{parse_mode(j.at("mode").get<std::string>())};
    }
    if (type == "set_scale") {
      only_keys(j, {"type", "scale"});
      const double s = j.at("scale").get<double>();
      if (!(s > 0.0 && s <= 1.0)) {
        throw ProtocolError("scale must be in (0, 1]");
      }
      return SetScaleCmd{s};
    }
    if (type == "reset") {
      only_keys(j, {"type", "seed"});
      if (!j.at("seed").is_number_unsigned()) {
        throw ProtocolError("seed must be a non-negative integer");
      }
      return ResetCmd{j.at("seed").get<std::uint64_t>()};
    }
    if (type == "start_trial") {
      only_keys(j, {"type", "color_order"});
      StartTrialCmd c;
      if (j.contains("color_order") && !j.at("color_order").is_null()) {
        c.color_order = parse_color_order(j.at("color_order").get<std::string>());
      }
      return c;
    }
  } catch (const json::exception& e) {
    throw ProtocolError("bad '" + type + "' command: " + e.what());
  } catch (const ConfigError& e) {
    throw ProtocolError("bad '" + type + "' command: " + e.what());
  }
  throw ProtocolError("unknown command type '" + type + "'");
}

}  // namespace

Command parse_command(std::string_view line) { return command_from_json(parse_object(line)); }

std::string serialize_command(const Command& cmd) { return command_json(cmd).dump(); }

std::string_view command_type(const Command& cmd) {
  static constexpr std::string_view kNames[] = {"master_velocity", "clutch", "set_mode",
                                                "set_scale",       "reset",  "start_trial"};
  return kNames[cmd.index()];
}

std::string serialize_timed_command(const TimedCommand& tc) {
  return json{{"tick", tc.tick}, {"cmd", command_json(tc.cmd)}}.dump();
}

TimedCommand parse_timed_command(std::string_view line) {
  const json j = parse_object(line);
  only_keys(j, {"tick", "cmd"});
  if (!j.contains("tick") || !j.at("tick").is_number_unsigned() || !j.contains("cmd")) {
    throw ProtocolError("command log entry needs 'tick' and 'cmd'");
  }
  return {j.at("tick").get<std::uint64_t>(), command_from_json(j.at("cmd"))};
}

void write_command_log(std::ostream& out, const std::vector<TimedCommand>& log) {
  for (const TimedCommand& tc : log) {
    out << serialize_timed_command(tc) << '\n';
  }
}

std::vector<TimedCommand> read_command_log(std::istream& in) {
  std::vector<TimedCommand> log;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) {
      continue;
    }
    try {
      log.push_back(parse_timed_command(line));
    } catch (const ProtocolError& e) {
      throw ProtocolError("command log line " + std::to_string(n) + ": " + e.what());
    }
    if (log.size() > 1 && log.back().tick < log[log.size() - 2].tick) {
      throw ProtocolError("command log line " + std::to_string(n) + ": ticks go backwards");
    }
  }
  return log;
}

std::string serialize_snapshot(const StateSnapshot& s) {
  const json j = {{"type", "snapshot"},
                  {"tick", s.tick},
                  {"t", s.t},
                  {"trial_t", s.trial_t},
                  {"trial_running", s.trial_running},
                  {"tip", vec(s.tip)},
                  {"q", vec(s.q)},
                  {"F_sx", s.F_sx},
                  {"F_sy", s.F_sy},
                  {"F_s_norm", s.F_s_norm},
                  {"f_dx", s.f_dx},
                  {"f_dy", s.f_dy},
                  {"alpha_x", s.alpha_x},
                  {"alpha_y", s.alpha_y},
                  {"active_x", s.active_x},
                  {"active_y", s.active_y},
                  {"mode", mode_name(s.mode)},
                  {"insertion_depth", s.insertion_depth},
                  {"color", s.color},
                  {"waypoint", s.waypoint},
                  {"complete", s.complete},
                  {"clutch", s.clutch},
                  {"scale", s.scale}};
  return j.dump();
}

StateSnapshot parse_snapshot(std::string_view line) {
  const json j = parse_object(line);
  try {
    if (j.at("type").get<std::string>() != "snapshot") {
      throw ProtocolError("not a snapshot message");
    }
    StateSnapshot s;
    s.tick = j.at("tick").get<std::uint64_t>();
    s.t = j.at("t").get<double>();
    s.trial_t = j.at("trial_t").get<double>();
    s.trial_running = j.at("trial_running").get<bool>();
    s.tip = read_vec<3>(j, "tip");
    s.q = read_vec<5>(j, "q");
    s.F_sx = j.at("F_sx").get<double>();
    s.F_sy = j.at("F_sy").get<double>();
    s.F_s_norm = j.at("F_s_norm").get<double>();
    s.f_dx = j.at("f_dx").get<double>();
    s.f_dy = j.at("f_dy").get<double>();
    s.alpha_x = j.at("alpha_x").get<double>();
    s.alpha_y = j.at("alpha_y").get<double>();
    s.active_x = j.at("active_x").get<bool>();
    s.active_y = j.at("active_y").get<bool>();
    s.mode = parse_mode(j.at("mode").get<std::string>());
    s.insertion_depth = j.at("insertion_depth").get<double>();
    s.color = j.at("color").get<std::string>();
    s.waypoint = j.at("waypoint").get<std::size_t>();
    s.complete = j.at("complete").get<bool>();
    s.clutch = j.at("clutch").get<bool>();
    s.scale = j.at("scale").get<double>();
    return s;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad snapshot: ") + e.what());
  }
}

std::string hello_message(bool interactive) {
  return json{{"type", "hello"},
              {"protocol_version", kProtocolVersion},
              {"role", interactive ? "interactive" : "observer"}}
      .dump();
}

std::string error_message(std::string_view what) {
  return json{{"type", "error"}, {"message", what}}.dump();
}

std::string ack_message(std::string_view type) {
  return json{{"type", "ack"}, {"command", type}}.dump();
}

std::string trial_complete_message(std::string_view file, bool completed, double completion_time,
                                   double max_fs) {
  json j = {{"type", "trial_complete"}, {"file", file}, {"completed", completed},
            {"max_fs", max_fs}};
  j["completion_time"] = completed ? json(completion_time) : json(nullptr);
  return j.dump();
}

}  // namespace sher
