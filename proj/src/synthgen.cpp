#include "roomenv/synthgen.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "json.hpp"
#include "roomenv/parallel.hpp"
#include "roomenv/random.hpp"

namespace roomenv {

using json = nlohmann::json;

namespace {

constexpr double kEps = 1e-9;

Mat3 yaw_rotation(double yaw) { return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix(); }

// Face-local 2D coordinates of a room-frame point.
std::array<double, 2> face_coords(RoomFace f, const Vec3& p) {
  switch (f) {
    case RoomFace::XMin:
    case RoomFace::XMax: return {p.y(), p.z()};
    case RoomFace::YMin:
    case RoomFace::YMax: return {p.x(), p.z()};
    case RoomFace::Floor:
    case RoomFace::Ceiling: return {p.x(), p.y()};
  }
  return {0.0, 0.0};
}

std::array<std::uint8_t, 3> surface_color(std::uint64_t seed, int surface, std::uint16_t label) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(surface) * 131 + label));
  return {static_cast<std::uint8_t>(64 + (h & 0x7f)), static_cast<std::uint8_t>(64 + ((h >> 8) & 0x7f)),
          static_cast<std::uint8_t>(64 + ((h >> 16) & 0x7f))};
}

struct SlabHit {
  double t_near;
  double t_far;
  int axis;  // axis of the entry face
};

// Ray/segment against an axis-aligned box [-half, half] in box coordinates.
std::optional<SlabHit> slab(const Vec3& o, const Vec3& d, const Vec3& half) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < -half[a] || o[a] > half[a]) return std::nullopt;
      continue;
    }
    double t1 = (-half[a] - o[a]) / d[a];
    double t2 = (half[a] - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    if (t1 > t_near) {
      t_near = t1;
      axis = a;
    }
    t_far = std::min(t_far, t2);
  }
  if (t_near > t_far) return std::nullopt;
  return SlabHit{t_near, t_far, axis};
}

bool inside_box(const Cuboid& c, const Vec3& p_room, double margin) {
  const Vec3 local = yaw_rotation(c.yaw).transpose() * (p_room - c.center);
  return (local.cwiseAbs() - (0.5 * c.size + Vec3::Constant(margin))).maxCoeff() < 0.0;
}

}  // namespace

const char* to_string(RoomFace f) {
  switch (f) {
    case RoomFace::XMin: return "x_min";
    case RoomFace::XMax: return "x_max";
    case RoomFace::YMin: return "y_min";
    case RoomFace::YMax: return "y_max";
    case RoomFace::Floor: return "floor";
    case RoomFace::Ceiling: return "ceiling";
  }
  return "?";
}

RoomFace room_face_from_string(const std::string& s) {
  for (RoomFace f : {RoomFace::XMin, RoomFace::XMax, RoomFace::YMin, RoomFace::YMax, RoomFace::Floor, RoomFace::Ceiling}) {
    if (s == to_string(f)) return f;
  }
  throw Error(Errc::BadSpec, "unknown room face '" + s + "'");
}

Vec3 SceneSpec::room_to_world(const Vec3& p) const { return yaw_rotation(room_yaw) * p + room_origin; }

Vec3 SceneSpec::world_to_room(const Vec3& p) const { return yaw_rotation(room_yaw).transpose() * (p - room_origin); }

void SceneSpec::validate() const {
  auto bad = [&](const std::string& msg) { throw Error(Errc::BadSpec, "scene '" + id + "': " + msg); };
  if (!(room_size.minCoeff() > 0.0) || !room_size.allFinite()) bad("room extents must be positive");
  if (cameras.empty()) bad("at least one camera is required");
  for (std::size_t i = 0; i < furniture.size(); ++i) {
    const Cuboid& c = furniture[i];
    if (!(c.size.minCoeff() > 0.0)) bad("furniture " + std::to_string(i) + " has non-positive size");
    const Mat3 r = yaw_rotation(c.yaw);
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 s((corner & 1) ? 0.5 : -0.5, (corner & 2) ? 0.5 : -0.5, (corner & 4) ? 0.5 : -0.5);
      const Vec3 p = c.center + r * s.cwiseProduct(c.size);
      if ((p.array() < -1e-9).any() || ((p - room_size).array() > 1e-9).any()) {
        bad("furniture " + std::to_string(i) + " is not fully inside the room");
      }
    }
  }
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    try {
      cameras[i].validate();
    } catch (const Error& e) {
      bad("camera " + std::to_string(i) + ": " + e.what());
    }
    const Vec3 c = world_to_room(cameras[i].center_world());
    if ((c.array() <= 0.0).any() || ((c - room_size).array() >= 0.0).any()) {
      bad("camera " + std::to_string(i) + " is not inside the room");
    }
    for (const auto& f : furniture) {
      if (inside_box(f, c, 1e-6)) bad("camera " + std::to_string(i) + " is inside a furniture cuboid");
    }
  }
}

CameraModel camera_in_room(const SceneSpec& spec, const Vec3& eye_room, const Vec3& target_room, int width,
                           int height, double fx, double fy, double cx, double cy, AxisConvention convention) {
  CameraModel cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  cam.width = width;
  cam.height = height;
  cam.convention = convention;
  cam.world_to_camera =
      look_at(spec.room_to_world(eye_room), spec.room_to_world(target_room), Vec3::UnitZ(), convention);
  return cam;
}

// ---------------------------------------------------------------- JSON

namespace {

Vec3 vec3_of(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::BadSpec, std::string(what) + " must be a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

double radians_of(const json& j, const char* deg_key, const char* rad_key) {
  if (j.contains(rad_key)) return j.at(rad_key).get<double>();
  if (j.contains(deg_key)) return j.at(deg_key).get<double>() * std::numbers::pi / 180.0;
  return 0.0;
}

}  // namespace

SceneSpec scene_from_json(const std::string& text) {
  SceneSpec spec;
  try {
    const json j = json::parse(text);
    spec.id = j.value("id", std::string("scene"));
    spec.seed = j.value("seed", std::uint64_t{0});
    const json& room = j.at("room");
    spec.room_size = vec3_of(room.at("size"), "room.size");
    spec.room_yaw = radians_of(room, "yaw_deg", "yaw");
    if (room.contains("origin")) spec.room_origin = vec3_of(room.at("origin"), "room.origin");
    if (j.contains("labels")) {
      const json& l = j.at("labels");
      spec.wall_label = l.value("wall", spec.wall_label);
      spec.floor_label = l.value("floor", spec.floor_label);
      spec.ceiling_label = l.value("ceiling", spec.ceiling_label);
    }
    for (const json& p : j.value("panels", json::array())) {
      Panel panel;
      panel.label = p.at("label").get<std::uint16_t>();
      panel.face = room_face_from_string(p.at("face").get<std::string>());
      const auto rect = p.at("rect").get<std::vector<double>>();
      if (rect.size() != 4) throw Error(Errc::BadSpec, "panel rect needs 4 values");
      panel.rect = {rect[0], rect[1], rect[2], rect[3]};
      spec.panels.push_back(panel);
    }
    for (const json& f : j.value("furniture", json::array())) {
      Cuboid c;
      c.label = f.at("label").get<std::uint16_t>();
      c.center = vec3_of(f.at("center"), "furniture.center");
      c.size = vec3_of(f.at("size"), "furniture.size");
      c.yaw = radians_of(f, "yaw_deg", "yaw");
      spec.furniture.push_back(c);
    }
    for (const json& c : j.at("cameras")) {
      const int w = c.at("width").get<int>();
      const int h = c.at("height").get<int>();
      const double fx = c.at("fx").get<double>();
      const double fy = c.value("fy", fx);
      const double cx = c.value("cx", w / 2.0);
      const double cy = c.value("cy", h / 2.0);
      const AxisConvention conv = axis_convention_from_string(c.value("convention", std::string("y_down_z_forward")));
      if (c.contains("world_to_camera")) {
        const auto m = c.at("world_to_camera").get<std::vector<double>>();
        if (m.size() != 16) throw Error(Errc::BadSpec, "world_to_camera needs 16 values");
        CameraModel cam;
        cam.fx = fx;
        cam.fy = fy;
        cam.cx = cx;
        cam.cy = cy;
        cam.width = w;
        cam.height = h;
        cam.convention = conv;
        for (int r = 0; r < 4; ++r)
          for (int k = 0; k < 4; ++k) cam.world_to_camera(r, k) = m[static_cast<std::size_t>(4 * r + k)];
        spec.cameras.push_back(cam);
      } else {
        spec.cameras.push_back(camera_in_room(spec, vec3_of(c.at("position"), "camera.position"),
                                              vec3_of(c.at("look_at"), "camera.look_at"), w, h, fx, fy, cx, cy, conv));
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::BadSpec, std::string("scene JSON: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::BadSpec) throw;
    throw Error(Errc::BadSpec, e.what());
  }
  spec.validate();
  return spec;
}

std::string scene_to_json(const SceneSpec& spec) {
  json j;
  j["id"] = spec.id;
  j["seed"] = spec.seed;
  j["room"] = {{"size", vec3_json(spec.room_size)}, {"yaw", spec.room_yaw}, {"origin", vec3_json(spec.room_origin)}};
  j["labels"] = {{"wall", spec.wall_label}, {"floor", spec.floor_label}, {"ceiling", spec.ceiling_label}};
  j["panels"] = json::array();
  for (const auto& p : spec.panels) {
    j["panels"].push_back({{"label", p.label}, {"face", to_string(p.face)}, {"rect", p.rect}});
  }
  j["furniture"] = json::array();
  for (const auto& c : spec.furniture) {
    j["furniture"].push_back(
        {{"label", c.label}, {"center", vec3_json(c.center)}, {"size", vec3_json(c.size)}, {"yaw", c.yaw}});
  }
  j["cameras"] = json::array();
  for (const auto& cam : spec.cameras) {
    json m = json::array();
    for (int r = 0; r < 4; ++r)
      for (int k = 0; k < 4; ++k) m.push_back(cam.world_to_camera(r, k));
    j["cameras"].push_back({{"width", cam.width},
                            {"height", cam.height},
                            {"fx", cam.fx},
                            {"fy", cam.fy},
                            {"cx", cam.cx},
                            {"cy", cam.cy},
                            {"convention", to_string(cam.convention)},
                            {"world_to_camera", m}});
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- ray casting

std::optional<SceneHit> cast_ray(const SceneSpec& spec, const Vec3& origin_w, const Vec3& dir_w, bool layout_only) {
  const Mat3 room_rot = yaw_rotation(spec.room_yaw);
  const Vec3 o = spec.world_to_room(origin_w);
  const Vec3 d = room_rot.transpose() * dir_w;
  const Vec3& size = spec.room_size;

  // Exit through the shell (camera is inside the room).
  double t_shell = std::numeric_limits<double>::infinity();
  int shell_axis = -1;
  bool shell_max = false;
  for (int a = 0; a < 3; ++a) {
    if (d[a] > 1e-15) {
      const double t = (size[a] - o[a]) / d[a];
      if (t < t_shell) {
        t_shell = t;
        shell_axis = a;
        shell_max = true;
      }
    } else if (d[a] < -1e-15) {
      const double t = -o[a] / d[a];
      if (t < t_shell) {
        t_shell = t;
        shell_axis = a;
        shell_max = false;
      }
    }
  }
  if (shell_axis < 0 || !(t_shell > 0.0)) return std::nullopt;

  SceneHit hit;
  hit.t = t_shell;
  Vec3 p_room = o + t_shell * d;
  p_room[shell_axis] = shell_max ? size[shell_axis] : 0.0;
  static constexpr RoomFace kFaces[3][2] = {
      {RoomFace::XMin, RoomFace::XMax}, {RoomFace::YMin, RoomFace::YMax}, {RoomFace::Floor, RoomFace::Ceiling}};
  const RoomFace face = kFaces[shell_axis][shell_max ? 1 : 0];
  hit.surface = static_cast<int>(face);
  hit.label = shell_axis == 2 ? (shell_max ? spec.ceiling_label : spec.floor_label) : spec.wall_label;
  const auto uv = face_coords(face, p_room);
  for (const auto& panel : spec.panels) {
    if (panel.face == face && uv[0] >= panel.rect[0] && uv[0] <= panel.rect[2] && uv[1] >= panel.rect[1] &&
        uv[1] <= panel.rect[3]) {
      hit.label = panel.label;
    }
  }
  Vec3 n_room = Vec3::Zero();
  n_room[shell_axis] = shell_max ? -1.0 : 1.0;

  if (!layout_only) {
    for (std::size_t i = 0; i < spec.furniture.size(); ++i) {
      const Cuboid& c = spec.furniture[i];
      const Mat3 r = yaw_rotation(c.yaw);
      const auto s = slab(r.transpose() * (o - c.center), r.transpose() * d, 0.5 * c.size);
      if (!s || !(s->t_near > kEps) || s->t_near >= hit.t) continue;
      hit.t = s->t_near;
      hit.label = c.label;
      hit.surface = 6 + static_cast<int>(i);
      p_room = o + s->t_near * d;
      Vec3 n_local = Vec3::Zero();
      n_local[s->axis] = (r.transpose() * d)[s->axis] > 0 ? -1.0 : 1.0;
      n_room = r * n_local;
    }
  }
  hit.point = spec.room_to_world(p_room);
  hit.normal = room_rot * n_room;
  return hit;
}

bool point_visible_from(const SceneSpec& spec, const CameraModel& cam, const Vec3& q_world) {
  const Vec3 pc = world_to_canonical_camera(q_world, cam);
  if (!(pc.z() > 0.0)) return false;
  const double x = cam.fx * pc.x() / pc.z() + cam.cx;
  const double y = cam.fy * pc.y() / pc.z() + cam.cy;
  if (!(x >= 0.0 && x < cam.width && y >= 0.0 && y < cam.height)) return false;
  const Vec3 o = spec.world_to_room(cam.center_world());
  const Vec3 d = spec.world_to_room(q_world) - o;  // segment parameter in [0, 1]
  for (const auto& c : spec.furniture) {
    const Mat3 r = yaw_rotation(c.yaw);
    const auto s = slab(r.transpose() * (o - c.center), r.transpose() * d, 0.5 * c.size);
    if (s && s->t_near < 1.0 - kEps && s->t_far > kEps) return false;
  }
  return true;
}

namespace {

Vec3 world_ray_direction(const CameraModel& cam, int u, int v) {
  return cam.rotation_to_canonical().transpose() * pixel_ray(u, v, cam).direction;
}

}  // namespace

FrameBundle render_frame(const SceneSpec& spec, std::size_t cam_index, int threads) {
  if (cam_index >= spec.cameras.size()) throw Error(Errc::InvalidArgument, "camera index out of range");
  const CameraModel& cam = spec.cameras[cam_index];
  const int w = cam.width;
  const int h = cam.height;
  FrameBundle f;
  f.scene_id = spec.id;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04zu", cam_index);
  f.frame_id = buf;
  f.camera = cam;
  f.rgb = RgbImage(w, h, 0);
  f.pointmap = nan_pointmap(w, h);
  f.normals = Pointmap(w, h, 0.0f);
  f.labels = LabelImage(w, h, labels::kUnlabeled);
  f.valid = Mask(w, h, 0);
  const Vec3 origin = cam.center_world();
  parallel_for(static_cast<std::size_t>(w) * h, threads, [&](std::size_t px) {
    const int u = static_cast<int>(px % w);
    const int v = static_cast<int>(px / w);
    const auto hit = cast_ray(spec, origin, world_ray_direction(cam, u, v), false);
    if (!hit) return;
    set_point(f.pointmap, px, hit->point);
    set_point(f.normals, px, hit->normal);
    f.labels.data[px] = hit->label;
    const auto c = surface_color(spec.seed, hit->surface, hit->label);
    std::copy(c.begin(), c.end(), f.rgb.at(px));
    f.valid.data[px] = 1;
  });
  return f;
}

LayoutOracle layout_oracle(const SceneSpec& spec, std::size_t cam_index, double eps_vis, int threads) {
  if (cam_index >= spec.cameras.size()) throw Error(Errc::InvalidArgument, "camera index out of range");
  const CameraModel& cam = spec.cameras[cam_index];
  const int w = cam.width;
  const int h = cam.height;
  LayoutOracle out;
  out.pointmap = nan_pointmap(w, h);
  out.valid = Mask(w, h, 0);
  out.label = LabelImage(w, h, labels::kUnlabeled);
  out.visibility = VisibilityMap(w, h, Visibility::NoLayout);
  const Vec3 origin = cam.center_world();
  parallel_for(static_cast<std::size_t>(w) * h, threads, [&](std::size_t px) {
    const int u = static_cast<int>(px % w);
    const int v = static_cast<int>(px / w);
    const Vec3 dir = world_ray_direction(cam, u, v);
    const auto shell = cast_ray(spec, origin, dir, true);
    if (!shell) return;
    bool observed = false;
    for (const auto& other : spec.cameras) {
      if (point_visible_from(spec, other, shell->point)) {
        observed = true;
        break;
      }
    }
    if (!observed) return;
    set_point(out.pointmap, px, shell->point);
    out.valid.data[px] = 1;
    out.label.data[px] = shell->label;
    const auto full = cast_ray(spec, origin, dir, false);
    const double depth_per_t = pixel_ray(u, v, cam).direction.z();
    const bool occluded = full && full->surface >= 6 && (shell->t - full->t) * depth_per_t > eps_vis;
    out.visibility.data[px] = occluded ? Visibility::Unseen : Visibility::Seen;
  });
  return out;
}

EnvelopeSample oracle_envelope(const SceneSpec& spec, std::size_t cam_index, int threads) {
  FrameBundle f = render_frame(spec, cam_index, threads);
  LayoutOracle o = layout_oracle(spec, cam_index, 0.05, threads);
  EnvelopeSample s;
  s.scene_id = f.scene_id;
  s.frame_id = f.frame_id;
  s.camera = f.camera;
  s.rgb = std::move(f.rgb);
  s.visible_pointmap = std::move(f.pointmap);
  s.visible_valid = std::move(f.valid);
  s.layout_pointmap = std::move(o.pointmap);
  s.layout_valid = std::move(o.valid);
  s.layout_label = std::move(o.label);
  return s;
}

// ---------------------------------------------------------------- presets

namespace {

constexpr int kPresetWidth = 64;
constexpr int kPresetHeight = 48;
constexpr double kPresetFocal = 70.0;

SceneSpec preset_scene(Rng& rng, int index, bool furnished, std::uint64_t seed) {
  SceneSpec s;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03d", furnished ? "furnished" : "tiny", index);
  s.id = buf;
  s.seed = splitmix64(seed + static_cast<std::uint64_t>(index));
  s.room_size = Vec3(rng.uniform(2.9, 3.5), rng.uniform(2.6, 3.0), rng.uniform(2.5, 2.8));
  s.room_yaw = rng.uniform(-0.5, 0.5);
  s.room_origin = Vec3(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), 0.0);
  const Vec3 L = s.room_size;

  s.panels.push_back({labels::kDoor, RoomFace::YMin, {0.8, 0.0, 1.7, 2.05}});
  s.panels.push_back({labels::kWindow, RoomFace::XMax, {1.0, 0.9, 2.2, 1.9}});

  if (furnished) {
    // Sofa flush against the far y wall, table mid-room, tall cabinet flush
    // against the x_min wall, rotated chair near the window.
    s.furniture.push_back({labels::kSofa, Vec3(L.x() * 0.5 + rng.uniform(-0.15, 0.15), L.y() - 0.4, 0.4),
                           Vec3(1.6, 0.8, 0.8), 0.0});
    s.furniture.push_back({labels::kTable, Vec3(L.x() * 0.5 + rng.uniform(-0.15, 0.15), L.y() * 0.45, 0.375),
                           Vec3(0.9, 0.6, 0.75), rng.uniform(-0.3, 0.3)});
    s.furniture.push_back({labels::kCabinet, Vec3(0.225, L.y() * 0.5 + rng.uniform(-0.15, 0.15), 0.9),
                           Vec3(0.45, 0.9, 1.8), 0.0});
    s.furniture.push_back({labels::kChair, Vec3(L.x() - 0.8, 1.0 + rng.uniform(-0.1, 0.1), 0.45),
                           Vec3(0.45, 0.45, 0.9), rng.uniform(0.3, 0.7)});
  }

  // Four corner views looking across the room and down at the floor. The
  // focal length keeps the floor's depth change per pixel well under tau at
  // the far wall, so a pixel's nearest projected point stays on its own ray.
  const double inset = 0.45;
  const std::array<Vec3, 4> eyes = {Vec3(inset, inset, 0.0), Vec3(L.x() - inset, inset, 0.0),
                                    Vec3(L.x() - inset, L.y() - inset, 0.0), Vec3(inset, L.y() - inset, 0.0)};
  for (int k = 0; k < 4; ++k) {
    Vec3 eye = eyes[static_cast<std::size_t>(k)];
    eye.z() = rng.uniform(1.5, 1.8);
    const Vec3 opposite = eyes[static_cast<std::size_t>((k + 2) % 4)];
    Vec3 target = 0.35 * eye + 0.65 * opposite;
    target.z() = rng.uniform(0.6, 0.9);
    const AxisConvention conv = k == 3 ? AxisConvention::YUpZBack : AxisConvention::YDownZForward;
    s.cameras.push_back(camera_in_room(s, eye, target, kPresetWidth, kPresetHeight, kPresetFocal, kPresetFocal,
                                       kPresetWidth / 2.0, kPresetHeight / 2.0, conv));
  }
  s.validate();
  return s;
}

}  // namespace

std::vector<SceneSpec> make_preset(const std::string& name, std::uint64_t seed) {
  bool furnished;
  if (name == "tiny") {
    furnished = false;
  } else if (name == "furnished") {
    furnished = true;
  } else {
    throw Error(Errc::BadSpec, "unknown preset '" + name + "' (known: tiny, furnished)");
  }
  Rng rng(seed, furnished ? 2 : 1);
  std::vector<SceneSpec> scenes;
  for (int i = 0; i < 3; ++i) scenes.push_back(preset_scene(rng, i, furnished, seed));
  return scenes;
}

}  // namespace roomenv
