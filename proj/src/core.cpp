#include "roomenv/core.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>

namespace roomenv {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::Io: return "Io";
    case Errc::MissingFile: return "MissingFile";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::BadChecksum: return "BadChecksum";
    case Errc::UnsupportedSchema: return "UnsupportedSchema";
    case Errc::BadSpec: return "BadSpec";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::VoxelRange: return "VoxelRange";
    case Errc::ScaleMismatch: return "ScaleMismatch";
    case Errc::EnvelopeViolation: return "EnvelopeViolation";
    case Errc::Degenerate: return "Degenerate";
    case Errc::EmptySet: return "EmptySet";
    case Errc::NonUnitInput: return "NonUnitInput";
    case Errc::NoValidRegions: return "NoValidRegions";
  }
  return "Unknown";
}

const char* to_string(AxisConvention c) {
  return c == AxisConvention::YDownZForward ? "y_down_z_forward" : "y_up_z_back";
}

AxisConvention axis_convention_from_string(const std::string& s) {
  if (s == "y_down_z_forward") return AxisConvention::YDownZForward;
  if (s == "y_up_z_back") return AxisConvention::YUpZBack;
  throw Error(Errc::InvalidArgument, "unknown axis convention '" + s + "'");
}

Mat3 convention_basis(AxisConvention c) {
  if (c == AxisConvention::YDownZForward) return Mat3::Identity();
  return Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();
}

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(Errc::InvalidArgument, "camera focal lengths must be positive");
  if (width < 1 || height < 1) throw Error(Errc::InvalidArgument, "camera resolution must be at least 1x1");
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw Error(Errc::InvalidArgument, "camera principal point not finite");
  if (!world_to_camera.allFinite()) throw Error(Errc::InvalidArgument, "world_to_camera not finite");
  const Eigen::RowVector4d bottom = world_to_camera.row(3);
  if ((bottom - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(Errc::InvalidArgument, "world_to_camera bottom row must be (0,0,0,1)");
  }
  const Mat3 r = world_to_camera.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
    throw Error(Errc::InvalidArgument, "world_to_camera rotation is not orthonormal");
  }
  if (std::abs(r.determinant() - 1.0) > 1e-6) {
    throw Error(Errc::InvalidArgument, "world_to_camera rotation determinant is not +1");
  }
}

Mat3 CameraModel::rotation_to_canonical() const {
  return convention_basis(convention) * world_to_camera.topLeftCorner<3, 3>();
}

Vec3 CameraModel::center_world() const {
  const Mat3 r = world_to_camera.topLeftCorner<3, 3>();
  return -(r.transpose() * world_to_camera.topRightCorner<3, 1>());
}

Mat4 CameraModel::world_to_canonical() const {
  Mat4 conv = Mat4::Identity();
  conv.topLeftCorner<3, 3>() = convention_basis(convention);
  return conv * world_to_camera;
}

Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up, AxisConvention convention) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  // canonical = B * native, B an involution.
  const Mat3 native = convention_basis(convention) * r;
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = native;
  m.topRightCorner<3, 1>() = -(native * eye);
  return m;
}

Vec3 world_to_canonical_camera(const Vec3& p_world, const CameraModel& cam) {
  const Vec3 native = cam.world_to_camera.topLeftCorner<3, 3>() * p_world + cam.world_to_camera.topRightCorner<3, 1>();
  if (cam.convention == AxisConvention::YDownZForward) return native;
  return Vec3(native.x(), -native.y(), -native.z());
}

namespace {

int floor_to_int(double x) {
  constexpr double kLimit = 1e9;
  if (!(x > -kLimit)) return -static_cast<int>(kLimit);
  if (!(x < kLimit)) return static_cast<int>(kLimit);
  return static_cast<int>(std::floor(x));
}

}  // namespace

std::optional<PixelHit> project(const Vec3& p_cam, const CameraModel& cam) {
  const double z = p_cam.z();
  if (!(z > 0.0)) return std::nullopt;
  return PixelHit{floor_to_int(cam.fx * p_cam.x() / z + cam.cx), floor_to_int(cam.fy * p_cam.y() / z + cam.cy), z};
}

Ray pixel_ray(int u, int v, const CameraModel& cam) {
  if (u < 0 || u >= cam.width || v < 0 || v >= cam.height) {
    throw Error(Errc::InvalidArgument,
                "pixel (" + std::to_string(u) + "," + std::to_string(v) + ") outside the image");
  }
  const Vec3 d((u + 0.5 - cam.cx) / cam.fx, (v + 0.5 - cam.cy) / cam.fy, 1.0);
  return Ray{Vec3::Zero(), d.normalized()};
}

double point_to_ray_distance(const Vec3& p_cam, const Ray& ray) {
  const Vec3 rel = p_cam - ray.origin;
  return (rel - rel.dot(ray.direction) * ray.direction).norm();
}

Pointmap nan_pointmap(int width, int height) {
  return Pointmap(width, height, std::numeric_limits<float>::quiet_NaN());
}

void FrameBundle::validate() const {
  camera.validate();
  const int w = camera.width;
  const int h = camera.height;
  auto check = [&](bool ok, const char* name) {
    if (!ok) {
      throw Error(Errc::ShapeMismatch, std::string(name) + " raster does not match camera " + std::to_string(w) +
                                           "x" + std::to_string(h));
    }
  };
  check(rgb.same_shape(w, h) && rgb.data.size() == rgb.pixel_count() * 3, "rgb");
  check(pointmap.same_shape(w, h) && pointmap.data.size() == pointmap.pixel_count() * 3, "pointmap");
  check(normals.same_shape(w, h) && normals.data.size() == normals.pixel_count() * 3, "normals");
  check(labels.same_shape(w, h) && labels.data.size() == labels.pixel_count(), "labels");
  check(valid.same_shape(w, h) && valid.data.size() == valid.pixel_count(), "valid");
  for (std::size_t i = 0; i < valid.pixel_count(); ++i) {
    if (!valid.data[i]) continue;
    const Vec3 p = point_at(pointmap, i);
    if (!p.allFinite()) {
      throw Error(Errc::InvalidArgument, "pointmap pixel " + std::to_string(i) + " is valid but not finite");
    }
    const Vec3 n = point_at(normals, i);
    if (!(std::abs(n.norm() - 1.0) <= 1e-3)) {
      throw Error(Errc::InvalidArgument, "normal at pixel " + std::to_string(i) + " is not unit length");
    }
  }
}

std::size_t FrameBundle::valid_count() const {
  std::size_t n = 0;
  for (auto m : valid.data) n += m ? 1 : 0;
  return n;
}

LayoutClassSet::LayoutClassSet(std::map<std::string, std::uint16_t> named) : names_(std::move(named)) {
  if (names_.empty()) throw Error(Errc::InvalidArgument, "layout class set must not be empty");
  for (const auto& [name, id] : names_) {
    if (!ids_.insert(id).second) {
      throw Error(Errc::InvalidArgument, "layout class id " + std::to_string(id) + " used twice");
    }
  }
}

LayoutClassSet LayoutClassSet::standard() {
  return LayoutClassSet({{"wall", labels::kWall},
                         {"floor", labels::kFloor},
                         {"ceiling", labels::kCeiling},
                         {"door", labels::kDoor},
                         {"window", labels::kWindow}});
}

}  // namespace roomenv
