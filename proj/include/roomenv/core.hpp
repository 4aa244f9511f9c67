#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "roomenv/error.hpp"

namespace roomenv {

using Vec3 = Eigen::Vector3d;
using Vec3f = Eigen::Vector3f;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Semantic class ids (NYU40 numbering, as used by the source renders).
namespace labels {
inline constexpr std::uint16_t kUnlabeled = 0;
inline constexpr std::uint16_t kWall = 1;
inline constexpr std::uint16_t kFloor = 2;
inline constexpr std::uint16_t kCabinet = 3;
inline constexpr std::uint16_t kBed = 4;
inline constexpr std::uint16_t kChair = 5;
inline constexpr std::uint16_t kSofa = 6;
inline constexpr std::uint16_t kTable = 7;
inline constexpr std::uint16_t kDoor = 8;
inline constexpr std::uint16_t kWindow = 9;
inline constexpr std::uint16_t kBookshelf = 10;
inline constexpr std::uint16_t kCeiling = 22;
}  // namespace labels

// Axis convention of a camera's native frame. YDownZForward is the canonical
// frame (+x right, +y down, +z into the scene); YUpZBack is the OpenGL-style
// frame that differs by a 180 degree rotation about x.
enum class AxisConvention { YDownZForward, YUpZBack };

const char* to_string(AxisConvention c);
AxisConvention axis_convention_from_string(const std::string& s);

struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  Mat4 world_to_camera = Mat4::Identity();
  AxisConvention convention = AxisConvention::YDownZForward;

  /// Throws Error(InvalidArgument) when intrinsics or the pose are malformed.
  void validate() const;

  /// Rotation taking world directions into the canonical camera frame.
  Mat3 rotation_to_canonical() const;
  /// Camera centre in world coordinates.
  Vec3 center_world() const;
  /// 4x4 map from world points to canonical camera points.
  Mat4 world_to_canonical() const;
};

/// Change of basis from the given convention to the canonical frame.
Mat3 convention_basis(AxisConvention c);

// Builds a world-to-camera pose for a camera at `eye` looking at `target`,
// expressed in the requested native convention. `up` is a world direction.
Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
             AxisConvention convention = AxisConvention::YDownZForward);

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

struct PixelHit {
  int u;
  int v;
  double z;

  bool operator==(const PixelHit&) const = default;
};

Vec3 world_to_canonical_camera(const Vec3& p_world, const CameraModel& cam);

/// Floor-binned projection of a canonical camera-frame point. Returns
/// std::nullopt ("behind") when z <= 0. The pixel may lie outside the image.
std::optional<PixelHit> project(const Vec3& p_cam, const CameraModel& cam);

/// Ray through the centre of pixel (u, v), in the canonical camera frame.
Ray pixel_ray(int u, int v, const CameraModel& cam);

double point_to_ray_distance(const Vec3& p_cam, const Ray& ray);

// Interleaved row-major raster.
template <typename T, int Channels>
struct Raster {
  static constexpr int kChannels = Channels;
  using value_type = T;

  int width = 0;
  int height = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * Channels, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }

  T* at(int u, int v) { return data.data() + index(u, v) * Channels; }
  const T* at(int u, int v) const { return data.data() + index(u, v) * Channels; }
  T* at(std::size_t pixel) { return data.data() + pixel * Channels; }
  const T* at(std::size_t pixel) const { return data.data() + pixel * Channels; }

  bool same_shape(int w, int h) const { return width == w && height == h; }
  bool operator==(const Raster&) const = default;
};

using RgbImage = Raster<std::uint8_t, 3>;
using Pointmap = Raster<float, 3>;
using LabelImage = Raster<std::uint16_t, 1>;
using Mask = Raster<std::uint8_t, 1>;

inline Vec3 point_at(const Pointmap& pm, std::size_t pixel) {
  const float* p = pm.at(pixel);
  return Vec3(p[0], p[1], p[2]);
}

inline void set_point(Pointmap& pm, std::size_t pixel, const Vec3& p) {
  float* d = pm.at(pixel);
  d[0] = static_cast<float>(p.x());
  d[1] = static_cast<float>(p.y());
  d[2] = static_cast<float>(p.z());
}

/// Pointmap with every pixel set to NaN (the in-memory encoding of "invalid").
Pointmap nan_pointmap(int width, int height);

struct FrameBundle {
  std::string scene_id;
  std::string frame_id;
  CameraModel camera;
  RgbImage rgb;
  Pointmap pointmap;
  Pointmap normals;
  LabelImage labels;
  Mask valid;

  /// Throws Error(ShapeMismatch / InvalidArgument) when rasters disagree with
  /// the camera or valid pixels carry non-finite points or non-unit normals.
  void validate() const;
  std::size_t valid_count() const;
};

class LayoutClassSet {
 public:
  LayoutClassSet() = default;
  explicit LayoutClassSet(std::map<std::string, std::uint16_t> named);

  /// wall/floor/ceiling/door/window with NYU40 ids.
  static LayoutClassSet standard();

  bool contains(std::uint16_t id) const { return ids_.count(id) != 0; }
  const std::set<std::uint16_t>& ids() const { return ids_; }
  const std::map<std::string, std::uint16_t>& names() const { return names_; }

 private:
  std::map<std::string, std::uint16_t> names_;
  std::set<std::uint16_t> ids_;
};

}  // namespace roomenv
