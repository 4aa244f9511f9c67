#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "roomenv/core.hpp"
#include "roomenv/envelope.hpp"

namespace roomenv {

// Faces of the room box in room coordinates [0,Lx]x[0,Ly]x[0,Lz] (z up).
enum class RoomFace { XMin, XMax, YMin, YMax, Floor, Ceiling };

const char* to_string(RoomFace f);
RoomFace room_face_from_string(const std::string& s);

// Labelled rectangle lying on a room face (doors, windows). Face-local
// coordinates: (y, z) on x walls, (x, z) on y walls, (x, y) on floor/ceiling.
struct Panel {
  std::uint16_t label = labels::kDoor;
  RoomFace face = RoomFace::XMin;
  std::array<double, 4> rect{};  // u0, v0, u1, v1
};

struct Cuboid {
  std::uint16_t label = labels::kCabinet;
  Vec3 center = Vec3::Zero();  // room frame
  Vec3 size = Vec3::Ones();
  double yaw = 0.0;  // radians about room z
};

struct SceneSpec {
  std::string id = "scene";
  Vec3 room_size{4.0, 3.0, 2.5};
  double room_yaw = 0.0;  // radians about world z
  Vec3 room_origin = Vec3::Zero();
  std::uint16_t wall_label = labels::kWall;
  std::uint16_t floor_label = labels::kFloor;
  std::uint16_t ceiling_label = labels::kCeiling;
  std::vector<Panel> panels;
  std::vector<Cuboid> furniture;
  std::vector<CameraModel> cameras;  // world frame
  std::uint64_t seed = 0;

  /// Throws Error(BadSpec) when the scene violates its invariants.
  void validate() const;

  Vec3 room_to_world(const Vec3& p) const;
  Vec3 world_to_room(const Vec3& p) const;
};

// Camera placed by eye/target in room coordinates.
CameraModel camera_in_room(const SceneSpec& spec, const Vec3& eye_room, const Vec3& target_room, int width,
                           int height, double fx, double fy, double cx, double cy,
                           AxisConvention convention = AxisConvention::YDownZForward);

/// SceneSpec JSON (see docs/formats.md). Parse errors throw Error(BadSpec).
SceneSpec scene_from_json(const std::string& text);
std::string scene_to_json(const SceneSpec& spec);

struct SceneHit {
  double t = 0.0;  // world ray parameter (unit direction)
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  std::uint16_t label = labels::kUnlabeled;
  int surface = -1;  // 0..5 room faces, 6+ furniture index + 6
};

/// Nearest hit of a world ray; `layout_only` ignores furniture.
std::optional<SceneHit> cast_ray(const SceneSpec& spec, const Vec3& origin_w, const Vec3& dir_w, bool layout_only);

/// True when the segment from camera `cam` to world point q is inside its
/// image and unobstructed by furniture.
bool point_visible_from(const SceneSpec& spec, const CameraModel& cam, const Vec3& q_world);

FrameBundle render_frame(const SceneSpec& spec, std::size_t cam_index, int threads = 1);

struct LayoutOracle {
  Pointmap pointmap;  // world
  Mask valid;
  LabelImage label;
  VisibilityMap visibility;  // analytic Seen/Unseen/NoLayout at eps_vis
};

// First hit on the bare room shell, valid only where some trajectory camera
// observes that point (the holes of the envelope). Visibility classes come
// from the analytic ray parameters: Unseen where a cuboid is hit more than
// eps_vis in front of the shell.
LayoutOracle layout_oracle(const SceneSpec& spec, std::size_t cam_index, double eps_vis = 0.05, int threads = 1);

/// Envelope whose visible side is render_frame and layout side layout_oracle.
EnvelopeSample oracle_envelope(const SceneSpec& spec, std::size_t cam_index, int threads = 1);

/// Builtin presets: "tiny" (unfurnished) and "furnished", 3 scenes x 4 views,
/// 64x48 pixels each.
std::vector<SceneSpec> make_preset(const std::string& name, std::uint64_t seed);

}  // namespace roomenv
