#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "roomenv/aggregate.hpp"
#include "roomenv/core.hpp"
#include "roomenv/envelope.hpp"

namespace roomenv {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

// Frame bundle directory: meta.json plus flat little-endian rasters
// (rgb.u8, pointmap.f32, normals.f32, labels.u16, valid.u8), row-major with
// interleaved channels. Invalid pixels carry valid=0 and NaN points; the
// reader treats either marker as invalid. Coordinates are scaled by the
// manifest's metres_per_unit on read so in-memory data is always metres.
FrameBundle read_frame(const fs::path& dir);
void write_frame(const FrameBundle& frame, const fs::path& dir);

// Envelope directory: rgb.u8, pointmap.f32 and valid.u8 for the visible
// surface, plus layout_pointmap.f32, layout_valid.u8 and layout_labels.u16.
EnvelopeSample read_envelope(const fs::path& dir);
void write_envelope(const EnvelopeSample& sample, const fs::path& dir);

/// "frame" or "envelope", from meta.json's kind field.
std::string bundle_kind(const fs::path& dir);

/// Immediate subdirectories holding a meta.json, sorted by name.
std::vector<fs::path> list_bundle_dirs(const fs::path& root);

enum class PlyFormat { Ascii, BinaryLittleEndian };

// Vertex properties: x y z nx ny nz (float) red green blue (uchar) label
// (ushort). The reader accepts any property order and scalar types and
// ignores unknown properties; big-endian files are rejected.
void write_ply(const AttributedPointCloud& cloud, const fs::path& path,
               PlyFormat format = PlyFormat::BinaryLittleEndian);
AttributedPointCloud read_ply(const fs::path& path);

using DepthImage = Raster<std::uint16_t, 1>;

/// Millimetre depth with 0 = invalid; depths round to the nearest mm and
/// saturate to [1, 65535] when valid.
DepthImage depth_to_millimetres(const std::vector<double>& depth_m, int width, int height);
void write_depth_png(const DepthImage& depth, const fs::path& path);
DepthImage read_depth_png(const fs::path& path);

/// Whole-file helpers; failures throw Error(Io) / Error(MissingFile).
void write_text_file(const fs::path& path, const std::string& text);
std::string read_text_file(const fs::path& path);

}  // namespace roomenv
