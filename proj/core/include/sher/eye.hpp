#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sher/se3.hpp"

namespace sher {

enum class VesselColor : std::uint8_t { Red = 0, Green = 1, Blue = 2, Yellow = 3 };

inline constexpr std::array<VesselColor, 4> kAllColors = {VesselColor::Red, VesselColor::Green,
                                                          VesselColor::Blue, VesselColor::Yellow};

[[nodiscard]] char color_letter(VesselColor c);
// Accepts R, G, B, Y (case-insensitive). Throws ConfigError otherwise.
[[nodiscard]] VesselColor parse_color(std::string_view s);

using ColorOrder = std::array<VesselColor, 4>;

[[nodiscard]] bool is_permutation_of_colors(const ColorOrder& order);
[[nodiscard]] std::string order_string(const ColorOrder& order);
// "RGBY"-style string to an order; throws ConfigError unless it is a permutation.
[[nodiscard]] ColorOrder parse_color_order(std::string_view s);

struct ColoredPath {
  VesselColor color = VesselColor::Red;
  std::vector<Vec3> waypoints;
  double capture_radius = 0.5;
};

struct EyePhantom {
  Vec3 center = Vec3(0.0, 0.0, 240.0);
  double radius = 16.0;
  Vec3 entry_point = Vec3(0.0, 0.0, 256.0);
  double sclera_stiffness = 100.0;  // mN/mm
  std::array<ColoredPath, 4> vessels{};

  // Outward unit normal of the sphere at the entry point.
  [[nodiscard]] Vec3 port_normal() const { return (entry_point - center).normalized(); }

  // Throws GeometryError / ConfigError when the invariants fail.
  void validate() const;

  [[nodiscard]] const ColoredPath& path(VesselColor c) const {
    return vessels[static_cast<std::size_t>(c)];
  }
};

struct VesselLayout {
  std::uint64_t seed = 2024;
  int waypoints = 8;
  double capture_radius = 0.5;
  double max_polar_deg = 38.0;  // measured from the bottom pole
  double min_arc_deg = 22.0;
  double max_arc_deg = 32.0;
};

// Four great-circle arcs on the lower hemisphere, one per color.
[[nodiscard]] std::array<ColoredPath, 4> generate_vessels(const EyePhantom& phantom,
                                                          const VesselLayout& layout);

struct ScleraContact {
  Vec3 deviation = Vec3::Zero();  // tool axis point nearest the port minus the port, spatial
  Vec3 force_spatial = Vec3::Zero();
  Vec3 contact_point = Vec3::Zero();
  double F_sx = 0.0;  // body frame
  double F_sy = 0.0;
  double F_s_norm = 0.0;
  double insertion_depth = 0.0;
  bool active = false;
};

/// Linear-spring port model. The tool axis runs from the handle origin
/// (`tool_pose.p()`) to `tip`. Once the tip is past the port, the sclera is
/// loaded with k * deviation, where deviation is the offset of the shaft from
/// the entry point; F_sx, F_sy are that load in the tool's body frame.
[[nodiscard]] ScleraContact compute_contact(const EyePhantom& phantom,
                                            const RigidTransform& tool_pose, const Vec3& tip);

struct SensedForce {
  double F_sx = 0.0;
  double F_sy = 0.0;
  [[nodiscard]] double norm() const;
};

// Ideal sensor plus independent zero-mean Gaussian noise on each axis.
[[nodiscard]] SensedForce sense_sclera_force(const ScleraContact& contact, double noise_rms,
                                             std::mt19937_64& rng);

struct ProgressState {
  std::size_t color_index = 0;  // position in the color order, 4 = done
  std::size_t waypoint_index = 0;
  bool complete = false;

  friend bool operator==(const ProgressState&, const ProgressState&) = default;
};

// Capture is a closed ball: |tip - waypoint| <= capture_radius advances the cursor.
[[nodiscard]] ProgressState task_progress(const std::array<ColoredPath, 4>& paths,
                                          const ColorOrder& order, const Vec3& tip,
                                          ProgressState state);

// Waypoint the cursor is waiting for; nullptr once complete.
[[nodiscard]] const Vec3* current_waypoint(const std::array<ColoredPath, 4>& paths,
                                           const ColorOrder& order, const ProgressState& state);

// "R:3" style cursor label, "done" once complete.
[[nodiscard]] std::string cursor_label(const ColorOrder& order, const ProgressState& state);

}  // namespace sher
