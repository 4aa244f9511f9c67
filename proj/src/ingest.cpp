#include "roomenv/ingest.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "json.hpp"

namespace roomenv {

using json = nlohmann::json;

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::Io, "failed writing '" + path.string() + "'");
}

std::string read_text_file(const fs::path& path) {
  if (!fs::exists(path)) throw Error(Errc::MissingFile, "'" + path.string() + "' does not exist");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

template <typename T>
struct DtypeName;
template <>
struct DtypeName<std::uint8_t> {
  static constexpr const char* value = "u8";
};
template <>
struct DtypeName<std::uint16_t> {
  static constexpr const char* value = "u16";
};
template <>
struct DtypeName<float> {
  static constexpr const char* value = "f32";
};

template <typename T>
std::string to_le_bytes(const std::vector<T>& data) {
  std::string bytes(data.size() * sizeof(T), '\0');
  std::memcpy(bytes.data(), data.data(), bytes.size());
  if constexpr (sizeof(T) > 1 && std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < bytes.size(); i += sizeof(T)) std::reverse(bytes.begin() + i, bytes.begin() + i + sizeof(T));
  }
  return bytes;
}

std::uint32_t crc_of(const std::string& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class RasterWriter {
 public:
  explicit RasterWriter(fs::path dir) : dir_(std::move(dir)) {}

  template <typename T, int C>
  void add(const std::string& name, const std::string& file, const Raster<T, C>& raster) {
    const std::string bytes = to_le_bytes(raster.data);
    write_text_file(dir_ / file, bytes);
    decls_.push_back({{"name", name},
                      {"file", file},
                      {"dtype", DtypeName<T>::value},
                      {"shape", {raster.height, raster.width, C}},
                      {"byte_order", "little"},
                      {"crc32", crc_of(bytes)}});
  }

  const json& decls() const { return decls_; }

 private:
  fs::path dir_;
  json decls_ = json::array();
};

json camera_to_json(const CameraModel& cam) {
  json m = json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m.push_back(cam.world_to_camera(r, c));
  return {{"fx", cam.fx},
          {"fy", cam.fy},
          {"cx", cam.cx},
          {"cy", cam.cy},
          {"width", cam.width},
          {"height", cam.height},
          {"convention", to_string(cam.convention)},
          {"world_to_camera", m}};
}

struct Manifest {
  fs::path dir;
  json meta;
  double metres_per_unit = 1.0;
  CameraModel camera;
};

template <typename T>
T field(const json& j, const char* key, const fs::path& file) {
  if (!j.contains(key)) throw Error(Errc::UnsupportedSchema, file.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::UnsupportedSchema, file.string() + ": field '" + key + "' has the wrong type");
  }
}

Manifest read_manifest(const fs::path& dir, const char* expected_kind) {
  const fs::path meta_path = dir / "meta.json";
  Manifest m;
  m.dir = dir;
  try {
    m.meta = json::parse(read_text_file(meta_path));
  } catch (const json::parse_error& e) {
    throw Error(Errc::UnsupportedSchema, meta_path.string() + ": malformed JSON (" + e.what() + ")");
  }
  const int version = field<int>(m.meta, "schema_version", meta_path);
  if (version != kSchemaVersion) {
    throw Error(Errc::UnsupportedSchema, meta_path.string() + ": schema_version " + std::to_string(version) +
                                             " (supported: " + std::to_string(kSchemaVersion) + ")");
  }
  const std::string kind = m.meta.value("kind", std::string("frame"));
  if (kind != expected_kind) {
    throw Error(Errc::UnsupportedSchema, meta_path.string() + ": kind '" + kind + "', expected '" + expected_kind + "'");
  }
  m.metres_per_unit = field<double>(m.meta, "metres_per_unit", meta_path);
  if (!(m.metres_per_unit > 0.0) || !std::isfinite(m.metres_per_unit)) {
    throw Error(Errc::UnsupportedSchema, meta_path.string() + ": metres_per_unit must be positive");
  }
  const json cj = field<json>(m.meta, "camera", meta_path);
  CameraModel& cam = m.camera;
  cam.fx = field<double>(cj, "fx", meta_path);
  cam.fy = field<double>(cj, "fy", meta_path);
  cam.cx = field<double>(cj, "cx", meta_path);
  cam.cy = field<double>(cj, "cy", meta_path);
  cam.width = field<int>(cj, "width", meta_path);
  cam.height = field<int>(cj, "height", meta_path);
  try {
    cam.convention = axis_convention_from_string(field<std::string>(cj, "convention", meta_path));
  } catch (const Error& e) {
    throw Error(Errc::UnsupportedSchema, meta_path.string() + ": " + e.what());
  }
  const auto mat = field<std::vector<double>>(cj, "world_to_camera", meta_path);
  if (mat.size() != 16) throw Error(Errc::UnsupportedSchema, meta_path.string() + ": world_to_camera needs 16 values");
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) cam.world_to_camera(r, c) = mat[static_cast<std::size_t>(4 * r + c)];
  if (m.metres_per_unit != 1.0) cam.world_to_camera.topRightCorner<3, 1>() *= m.metres_per_unit;
  try {
    cam.validate();
  } catch (const Error& e) {
    throw Error(Errc::UnsupportedSchema, meta_path.string() + ": " + e.what());
  }
  return m;
}

template <typename T, int C>
Raster<T, C> read_raster(const Manifest& m, const std::string& name) {
  const fs::path meta_path = m.dir / "meta.json";
  const json rasters = field<json>(m.meta, "rasters", meta_path);
  const json* decl = nullptr;
  for (const auto& r : rasters) {
    if (r.value("name", std::string()) == name) decl = &r;
  }
  if (!decl) throw Error(Errc::MissingFile, meta_path.string() + ": no raster named '" + name + "'");
  const auto file = field<std::string>(*decl, "file", meta_path);
  const fs::path path = m.dir / file;
  const auto dtype = field<std::string>(*decl, "dtype", meta_path);
  if (dtype != DtypeName<T>::value) {
    throw Error(Errc::ShapeMismatch, path.string() + ": dtype '" + dtype + "', expected '" + DtypeName<T>::value + "'");
  }
  const auto shape = field<std::vector<long long>>(*decl, "shape", meta_path);
  const int w = m.camera.width;
  const int h = m.camera.height;
  if (shape.size() != 3 || shape[0] != h || shape[1] != w || shape[2] != C) {
    throw Error(Errc::ShapeMismatch, path.string() + ": declared shape does not match " + std::to_string(h) + "x" +
                                         std::to_string(w) + "x" + std::to_string(C));
  }
  const std::string order = decl->value("byte_order", std::string("little"));
  if (order != "little" && order != "big") {
    throw Error(Errc::UnsupportedSchema, path.string() + ": unknown byte_order '" + order + "'");
  }
  if (!fs::exists(path)) throw Error(Errc::MissingFile, "raster file '" + path.string() + "' does not exist");
  std::string bytes = read_text_file(path);
  Raster<T, C> raster(w, h);
  if (bytes.size() != raster.data.size() * sizeof(T)) {
    throw Error(Errc::ShapeMismatch, path.string() + ": " + std::to_string(bytes.size()) + " bytes, expected " +
                                         std::to_string(raster.data.size() * sizeof(T)));
  }
  if (decl->contains("crc32")) {
    const auto expected = field<std::uint32_t>(*decl, "crc32", meta_path);
    if (crc_of(bytes) != expected) throw Error(Errc::BadChecksum, path.string() + ": crc32 mismatch");
  }
  const bool file_big = order == "big";
  if constexpr (sizeof(T) > 1) {
    if (file_big != (std::endian::native == std::endian::big)) {
      for (std::size_t i = 0; i < bytes.size(); i += sizeof(T)) {
        std::reverse(bytes.begin() + static_cast<std::ptrdiff_t>(i),
                     bytes.begin() + static_cast<std::ptrdiff_t>(i + sizeof(T)));
      }
    }
  }
  std::memcpy(raster.data.data(), bytes.data(), bytes.size());
  return raster;
}

// Applies the unit scale and merges the NaN and mask encodings of invalid pixels.
void normalize_points(Pointmap& pm, Mask& valid, double metres_per_unit) {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  for (std::size_t i = 0; i < valid.pixel_count(); ++i) {
    float* p = pm.at(i);
    const bool finite = std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]);
    if (!valid.data[i] || !finite) {
      valid.data[i] = 0;
      p[0] = p[1] = p[2] = nan;
      continue;
    }
    valid.data[i] = 1;
    if (metres_per_unit != 1.0) {
      for (int c = 0; c < 3; ++c) p[c] = static_cast<float>(static_cast<double>(p[c]) * metres_per_unit);
    }
  }
}

Pointmap with_nan_invalid(const Pointmap& pm, const Mask& valid) {
  Pointmap out = pm;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  for (std::size_t i = 0; i < valid.pixel_count(); ++i) {
    if (!valid.data[i]) {
      float* p = out.at(i);
      p[0] = p[1] = p[2] = nan;
    }
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::Io, "cannot create directory '" + dir.string() + "': " + ec.message());
}

json base_meta(const std::string& kind, const std::string& scene_id, const std::string& frame_id,
               const CameraModel& cam) {
  return {{"schema_version", kSchemaVersion}, {"kind", kind},          {"scene_id", scene_id},
          {"frame_id", frame_id},           {"metres_per_unit", 1.0}, {"camera", camera_to_json(cam)}};
}

}  // namespace

FrameBundle read_frame(const fs::path& dir) {
  const Manifest m = read_manifest(dir, "frame");
  FrameBundle f;
  f.scene_id = m.meta.value("scene_id", std::string());
  f.frame_id = m.meta.value("frame_id", std::string());
  f.camera = m.camera;
  f.rgb = read_raster<std::uint8_t, 3>(m, "rgb");
  f.pointmap = read_raster<float, 3>(m, "pointmap");
  f.normals = read_raster<float, 3>(m, "normals");
  f.labels = read_raster<std::uint16_t, 1>(m, "labels");
  f.valid = read_raster<std::uint8_t, 1>(m, "valid");
  normalize_points(f.pointmap, f.valid, m.metres_per_unit);
  f.validate();
  return f;
}

void write_frame(const FrameBundle& frame, const fs::path& dir) {
  frame.validate();
  ensure_dir(dir);
  RasterWriter w(dir);
  w.add("rgb", "rgb.u8", frame.rgb);
  w.add("pointmap", "pointmap.f32", with_nan_invalid(frame.pointmap, frame.valid));
  w.add("normals", "normals.f32", frame.normals);
  w.add("labels", "labels.u16", frame.labels);
  w.add("valid", "valid.u8", frame.valid);
  json meta = base_meta("frame", frame.scene_id, frame.frame_id, frame.camera);
  meta["rasters"] = w.decls();
  write_text_file(dir / "meta.json", meta.dump(2) + "\n");
}

EnvelopeSample read_envelope(const fs::path& dir) {
  const Manifest m = read_manifest(dir, "envelope");
  EnvelopeSample s;
  s.scene_id = m.meta.value("scene_id", std::string());
  s.frame_id = m.meta.value("frame_id", std::string());
  s.camera = m.camera;
  s.rgb = read_raster<std::uint8_t, 3>(m, "rgb");
  s.visible_pointmap = read_raster<float, 3>(m, "pointmap");
  s.visible_valid = read_raster<std::uint8_t, 1>(m, "valid");
  s.layout_pointmap = read_raster<float, 3>(m, "layout_pointmap");
  s.layout_valid = read_raster<std::uint8_t, 1>(m, "layout_valid");
  s.layout_label = read_raster<std::uint16_t, 1>(m, "layout_labels");
  normalize_points(s.visible_pointmap, s.visible_valid, m.metres_per_unit);
  normalize_points(s.layout_pointmap, s.layout_valid, m.metres_per_unit);
  s.validate();
  return s;
}

void write_envelope(const EnvelopeSample& sample, const fs::path& dir) {
  sample.validate();
  ensure_dir(dir);
  RasterWriter w(dir);
  w.add("rgb", "rgb.u8", sample.rgb);
  w.add("pointmap", "pointmap.f32", with_nan_invalid(sample.visible_pointmap, sample.visible_valid));
  w.add("valid", "valid.u8", sample.visible_valid);
  w.add("layout_pointmap", "layout_pointmap.f32", with_nan_invalid(sample.layout_pointmap, sample.layout_valid));
  w.add("layout_valid", "layout_valid.u8", sample.layout_valid);
  w.add("layout_labels", "layout_labels.u16", sample.layout_label);
  json meta = base_meta("envelope", sample.scene_id, sample.frame_id, sample.camera);
  meta["rasters"] = w.decls();
  write_text_file(dir / "meta.json", meta.dump(2) + "\n");
}

std::string bundle_kind(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  try {
    return json::parse(read_text_file(meta_path)).value("kind", std::string("frame"));
  } catch (const json::exception& e) {
    throw Error(Errc::UnsupportedSchema, meta_path.string() + ": " + e.what());
  }
}

std::vector<fs::path> list_bundle_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(Errc::MissingFile, "directory '" + root.string() + "' does not exist");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

// ---------------------------------------------------------------- PLY

namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType ply_type(const std::string& s, const fs::path& path) {
  if (s == "char" || s == "int8") return PlyType::Int8;
  if (s == "uchar" || s == "uint8") return PlyType::UInt8;
  if (s == "short" || s == "int16") return PlyType::Int16;
  if (s == "ushort" || s == "uint16") return PlyType::UInt16;
  if (s == "int" || s == "int32") return PlyType::Int32;
  if (s == "uint" || s == "uint32") return PlyType::UInt32;
  if (s == "float" || s == "float32") return PlyType::Float32;
  if (s == "double" || s == "float64") return PlyType::Float64;
  throw Error(Errc::UnsupportedSchema, path.string() + ": unsupported PLY type '" + s + "'");
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (sizeof(T) > 1 && std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

double decode_binary(PlyType t, const char* p) {
  switch (t) {
    case PlyType::Int8: return load_le<std::int8_t>(p);
    case PlyType::UInt8: return load_le<std::uint8_t>(p);
    case PlyType::Int16: return load_le<std::int16_t>(p);
    case PlyType::UInt16: return load_le<std::uint16_t>(p);
    case PlyType::Int32: return load_le<std::int32_t>(p);
    case PlyType::UInt32: return load_le<std::uint32_t>(p);
    case PlyType::Float32: return load_le<float>(p);
    case PlyType::Float64: return load_le<double>(p);
  }
  return 0.0;
}

template <typename T>
void append_le(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (sizeof(T) > 1 && std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(b, sizeof(T));
}

}  // namespace

void write_ply(const AttributedPointCloud& cloud, const fs::path& path, PlyFormat format) {
  cloud.validate();
  std::string out;
  out += "ply\n";
  out += format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  for (const char* p : {"x", "y", "z", "nx", "ny", "nz"}) out += std::string("property float ") + p + "\n";
  out += "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty ushort label\nend_header\n";
  if (format == PlyFormat::Ascii) {
    char buf[256];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3f& p = cloud.positions[i];
      const Vec3f& n = cloud.normals[i];
      const auto& c = cloud.colors[i];
      const int len = std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g %u %u %u %u\n", p.x(), p.y(),
                                    p.z(), n.x(), n.y(), n.z(), c[0], c[1], c[2], cloud.labels[i]);
      out.append(buf, static_cast<std::size_t>(len));
    }
  } else {
    out.reserve(out.size() + cloud.size() * 29);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      for (int k = 0; k < 3; ++k) append_le<float>(out, cloud.positions[i][k]);
      for (int k = 0; k < 3; ++k) append_le<float>(out, cloud.normals[i][k]);
      for (int k = 0; k < 3; ++k) append_le<std::uint8_t>(out, cloud.colors[i][static_cast<std::size_t>(k)]);
      append_le<std::uint16_t>(out, cloud.labels[i]);
    }
  }
  write_text_file(path, out);
}

AttributedPointCloud read_ply(const fs::path& path) {
  const std::string data = read_text_file(path);
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) throw Error(Errc::UnsupportedSchema, path.string() + ": truncated PLY header");
    std::string line = data.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  if (next_line() != "ply") throw Error(Errc::UnsupportedSchema, path.string() + ": not a PLY file");

  struct Property {
    std::string name;
    PlyType type;
  };
  struct Element {
    std::string name;
    std::size_t count;
    std::vector<Property> props;
  };
  std::vector<Element> elements;
  bool ascii = false;
  for (;;) {
    const std::string line = next_line();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") {
        ascii = true;
      } else if (fmt != "binary_little_endian") {
        throw Error(Errc::UnsupportedSchema, path.string() + ": unsupported PLY format '" + fmt + "'");
      }
    } else if (word == "element") {
      Element e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty()) throw Error(Errc::UnsupportedSchema, path.string() + ": property before element");
      std::string type, name;
      ls >> type;
      if (type == "list") throw Error(Errc::UnsupportedSchema, path.string() + ": list properties are not supported");
      ls >> name;
      elements.back().props.push_back({name, ply_type(type, path)});
    }
  }
  if (elements.empty() || elements.front().name != "vertex") {
    throw Error(Errc::UnsupportedSchema, path.string() + ": first PLY element must be 'vertex'");
  }
  const Element& vert = elements.front();
  static const char* kNames[] = {"x", "y", "z", "nx", "ny", "nz", "red", "green", "blue", "label"};
  int slot[10];
  for (int k = 0; k < 10; ++k) {
    slot[k] = -1;
    for (std::size_t j = 0; j < vert.props.size(); ++j) {
      if (vert.props[j].name == kNames[k]) slot[k] = static_cast<int>(j);
    }
  }
  for (int k = 0; k < 3; ++k) {
    if (slot[k] < 0) throw Error(Errc::UnsupportedSchema, path.string() + ": missing vertex property " + kNames[k]);
  }

  AttributedPointCloud cloud;
  cloud.reserve(vert.count);
  std::vector<double> values(vert.props.size());
  std::size_t stride = 0;
  for (const auto& p : vert.props) stride += ply_size(p.type);
  std::istringstream text(ascii ? data.substr(pos) : std::string());
  for (std::size_t i = 0; i < vert.count; ++i) {
    if (ascii) {
      for (auto& v : values) {
        // strtod keeps float text exact after narrowing back to float.
        std::string tok;
        if (!(text >> tok)) throw Error(Errc::ShapeMismatch, path.string() + ": fewer vertices than declared");
        v = std::strtod(tok.c_str(), nullptr);
      }
    } else {
      if (pos + stride > data.size()) throw Error(Errc::ShapeMismatch, path.string() + ": fewer vertices than declared");
      std::size_t off = pos;
      for (std::size_t j = 0; j < vert.props.size(); ++j) {
        values[j] = decode_binary(vert.props[j].type, data.data() + off);
        off += ply_size(vert.props[j].type);
      }
      pos += stride;
    }
    auto get = [&](int k, double fallback) { return slot[k] >= 0 ? values[static_cast<std::size_t>(slot[k])] : fallback; };
    cloud.positions.emplace_back(static_cast<float>(get(0, 0)), static_cast<float>(get(1, 0)), static_cast<float>(get(2, 0)));
    cloud.normals.emplace_back(static_cast<float>(get(3, 0)), static_cast<float>(get(4, 0)), static_cast<float>(get(5, 1)));
    cloud.colors.push_back({static_cast<std::uint8_t>(get(6, 0)), static_cast<std::uint8_t>(get(7, 0)),
                            static_cast<std::uint8_t>(get(8, 0))});
    cloud.labels.push_back(static_cast<std::uint16_t>(get(9, 0)));
    cloud.sources.push_back({PointSource::kUnknownFrame, static_cast<std::uint32_t>(i)});
  }
  return cloud;
}

// ---------------------------------------------------------------- PNG

DepthImage depth_to_millimetres(const std::vector<double>& depth_m, int width, int height) {
  DepthImage img(width, height, 0);
  if (depth_m.size() != img.data.size()) throw Error(Errc::ShapeMismatch, "depth buffer does not match the image size");
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double d = depth_m[i];
    if (!std::isfinite(d) || d <= 0.0) continue;
    const double mm = std::round(d * 1000.0);
    img.data[i] = static_cast<std::uint16_t>(std::clamp(mm, 1.0, 65535.0));
  }
  return img;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

void write_depth_png(const DepthImage& depth, const fs::path& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::Io, "libpng initialisation failed");
  }
  std::vector<std::uint8_t> row(static_cast<std::size_t>(depth.width) * 2);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::Io, "failed writing PNG '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(depth.width), static_cast<png_uint_32>(depth.height), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const std::uint16_t d = *depth.at(u, v);
      row[static_cast<std::size_t>(2 * u)] = static_cast<std::uint8_t>(d >> 8);
      row[static_cast<std::size_t>(2 * u + 1)] = static_cast<std::uint8_t>(d & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

DepthImage read_depth_png(const fs::path& path) {
  if (!fs::exists(path)) throw Error(Errc::MissingFile, "'" + path.string() + "' does not exist");
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::Io, "libpng initialisation failed");
  }
  DepthImage img;
  std::vector<std::uint8_t> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::Io, "failed reading PNG '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  if (png_get_bit_depth(png, info) != 16 || png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::UnsupportedSchema, path.string() + ": expected a 16-bit grayscale PNG");
  }
  img = DepthImage(static_cast<int>(png_get_image_width(png, info)), static_cast<int>(png_get_image_height(png, info)));
  row.resize(static_cast<std::size_t>(img.width) * 2);
  for (int v = 0; v < img.height; ++v) {
    png_read_row(png, row.data(), nullptr);
    for (int u = 0; u < img.width; ++u) {
      *img.at(u, v) = static_cast<std::uint16_t>((row[static_cast<std::size_t>(2 * u)] << 8) |
                                                 row[static_cast<std::size_t>(2 * u + 1)]);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace roomenv
