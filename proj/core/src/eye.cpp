#include "sher/eye.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "sher/errors.hpp"

namespace sher {

char color_letter(VesselColor c) {
  switch (c) {
    case VesselColor::Red:
      return 'R';
    case VesselColor::Green:
      return 'G';
    case VesselColor::Blue:
      return 'B';
    case VesselColor::Yellow:
      return 'Y';
  }
  return '?';
}

VesselColor parse_color(std::string_view s) {
  if (s.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(s[0]))) {
      case 'R':
        return VesselColor::Red;
      case 'G':
        return VesselColor::Green;
      case 'B':
        return VesselColor::Blue;
      case 'Y':
        return VesselColor::Yellow;
      default:
        break;
    }
  }
  throw ConfigError("unknown vessel color '" + std::string(s) + "' (expected R, G, B or Y)");
}

bool is_permutation_of_colors(const ColorOrder& order) {
  std::array<bool, 4> seen{};
  for (VesselColor c : order) {
    const auto i = static_cast<std::size_t>(c);
    if (i >= 4 || seen[i]) {
      return false;
    }
    seen[i] = true;
  }
  return true;
}

std::string order_string(const ColorOrder& order) {
  std::string s;
  for (VesselColor c : order) {
    s.push_back(color_letter(c));
  }
  return s;
}

ColorOrder parse_color_order(std::string_view s) {
  if (s.size() != 4) {
    throw ConfigError("color_order must list the four colors, e.g. \"RGBY\"");
  }
  ColorOrder order{};
  for (std::size_t i = 0; i < 4; ++i) {
    order[i] = parse_color(s.substr(i, 1));
  }
  if (!is_permutation_of_colors(order)) {
    throw ConfigError("color_order must be a permutation of R, G, B, Y");
  }
  return order;
}

void EyePhantom::validate() const {
  if (!(radius > 0.0)) {
    throw ConfigError("phantom radius must be positive");
  }
  if (!(sclera_stiffness > 0.0)) {
    throw ConfigError("sclera stiffness must be positive");
  }
  if (std::abs((entry_point - center).norm() - radius) > 1e-6) {
    throw GeometryError("entry point is not on the phantom sphere");
  }
  for (const ColoredPath& p : vessels) {
    if (p.waypoints.size() < 2) {
      throw ConfigError(std::string("vessel ") + color_letter(p.color) + " needs >= 2 waypoints");
    }
    for (const Vec3& w : p.waypoints) {
      if (std::abs((w - center).norm() - radius) > 1e-3) {
        throw GeometryError(std::string("vessel ") + color_letter(p.color) +
                            " waypoint is off the retinal surface");
      }
    }
  }
}

std::array<ColoredPath, 4> generate_vessels(const EyePhantom& phantom, const VesselLayout& layout) {
  if (layout.waypoints < 2) {
    throw ConfigError("vessel layout needs >= 2 waypoints per path");
  }
  constexpr double deg = std::numbers::pi / 180.0;
  std::mt19937_64 rng(layout.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vec3 down = -Vec3::UnitZ();
  const double cos_cap = std::cos(layout.max_polar_deg * deg);

  std::array<ColoredPath, 4> paths{};
  for (std::size_t c = 0; c < 4; ++c) {
    ColoredPath& path = paths[c];
    path.color = kAllColors[c];
    path.capture_radius = layout.capture_radius;
    for (;;) {
      // Start direction uniform in azimuth, polar angle within the cap.
      const double polar = layout.max_polar_deg * deg * std::sqrt(unit(rng));
      const double azimuth = 2.0 * std::numbers::pi * unit(rng);
      const Vec3 start(std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth),
                       -std::cos(polar));
      // Random unit tangent at the start point.
      const Vec3 helper = std::abs(start.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
      const Vec3 e1 = start.cross(helper).normalized();
      const Vec3 e2 = start.cross(e1);
      const double heading = 2.0 * std::numbers::pi * unit(rng);
      const Vec3 tangent = std::cos(heading) * e1 + std::sin(heading) * e2;
      const double arc =
          (layout.min_arc_deg + (layout.max_arc_deg - layout.min_arc_deg) * unit(rng)) * deg;

      std::vector<Vec3> pts;
      bool inside = true;
      for (int k = 0; k < layout.waypoints; ++k) {
        const double beta = arc * static_cast<double>(k) / static_cast<double>(layout.waypoints - 1);
        const Vec3 dir = std::cos(beta) * start + std::sin(beta) * tangent;
        if (dir.dot(down) < cos_cap) {
          inside = false;
          break;
        }
        pts.push_back(phantom.center + phantom.radius * dir);
      }
      if (inside) {
        path.waypoints = std::move(pts);
        break;
      }
    }
  }
  return paths;
}

ScleraContact compute_contact(const EyePhantom& phantom, const RigidTransform& tool_pose,
                              const Vec3& tip) {
  const Vec3& handle = tool_pose.p();
  const Vec3 axis = tip - handle;
  const double length = axis.norm();
  if (!(length > 1e-12)) {
    throw GeometryError("tool axis has zero length (tip coincides with handle origin)");
  }
  const Vec3 u = axis / length;

  const double s_line = (phantom.entry_point - handle).dot(u);
  const double s_seg = std::clamp(s_line, 0.0, length);
  const Vec3 nearest = handle + s_seg * u;

  ScleraContact c;
  c.contact_point = nearest;
  c.deviation = nearest - phantom.entry_point;
  c.insertion_depth = std::max(0.0, length - s_line);

  const bool past_plane = (tip - phantom.entry_point).dot(phantom.port_normal()) < 0.0;
  c.active = c.insertion_depth > 0.0 && past_plane;
  if (c.active) {
    c.force_spatial = phantom.sclera_stiffness * c.deviation;
    const Vec3 body = tool_pose.R().transpose() * c.force_spatial;
    c.F_sx = body.x();
    c.F_sy = body.y();
    c.F_s_norm = std::hypot(c.F_sx, c.F_sy);
  }
  return c;
}

double SensedForce::norm() const { return std::hypot(F_sx, F_sy); }

SensedForce sense_sclera_force(const ScleraContact& contact, double noise_rms,
                               std::mt19937_64& rng) {
  SensedForce s{contact.F_sx, contact.F_sy};
  if (noise_rms > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_rms);
    s.F_sx += noise(rng);
    s.F_sy += noise(rng);
  }
  return s;
}

ProgressState task_progress(const std::array<ColoredPath, 4>& paths, const ColorOrder& order,
                            const Vec3& tip, ProgressState state) {
  while (!state.complete) {
    const ColoredPath& path = paths[static_cast<std::size_t>(order[state.color_index])];
    const Vec3& target = path.waypoints[state.waypoint_index];
    if ((tip - target).norm() > path.capture_radius) {
      break;
    }
    ++state.waypoint_index;
    if (state.waypoint_index == path.waypoints.size()) {
      state.waypoint_index = 0;
      ++state.color_index;
      if (state.color_index == order.size()) {
        state.complete = true;
      }
    }
  }
  return state;
}

const Vec3* current_waypoint(const std::array<ColoredPath, 4>& paths, const ColorOrder& order,
                             const ProgressState& state) {
  if (state.complete) {
    return nullptr;
  }
  return &paths[static_cast<std::size_t>(order[state.color_index])].waypoints[state.waypoint_index];
}

std::string cursor_label(const ColorOrder& order, const ProgressState& state) {
  if (state.complete) {
    return "done";
  }
  return std::string(1, color_letter(order[state.color_index])) + ":" +
         std::to_string(state.waypoint_index);
}

}  // namespace sher
