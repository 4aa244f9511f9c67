#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "roomenv/core.hpp"

namespace roomenv {

struct PointSource {
  static constexpr std::uint32_t kUnknownFrame = 0xffffffffu;

  std::uint32_t frame = kUnknownFrame;
  std::uint32_t pixel = 0;

  bool operator==(const PointSource&) const = default;
};

// Columnar scene cloud. Positions and normals keep the float precision of the
// pointmaps they came from so that every tuple is a verbatim copy.
struct AttributedPointCloud {
  std::vector<Vec3f> positions;
  std::vector<std::array<std::uint8_t, 3>> colors;
  std::vector<Vec3f> normals;
  std::vector<std::uint16_t> labels;
  std::vector<PointSource> sources;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  void reserve(std::size_t n);
  void push_back_from(const AttributedPointCloud& other, std::size_t i);
  /// Throws Error(ShapeMismatch) if the columns disagree in length.
  void validate() const;
  /// Tuple equality of point i here and point j in `other` (sources ignored).
  bool same_tuple(std::size_t i, const AttributedPointCloud& other, std::size_t j) const;
};

struct VoxelParams {
  double rho = 0.02;
  Vec3 origin = Vec3::Zero();
};

/// Union of the valid pixels of every frame, frame-major then row-major.
/// Throws Error(EmptyInput) for an empty frame list.
AttributedPointCloud aggregate_frames(std::span<const FrameBundle> frames);

// Keeps one representative per occupied voxel: the input point nearest the
// centroid of that voxel's points, earliest index on ties. Output preserves
// input order. Voxel coordinates must fit in signed 21 bits per axis.
AttributedPointCloud voxel_downsample(const AttributedPointCloud& cloud, const VoxelParams& params);

/// Packed 63-bit voxel key; throws Error(VoxelRange) when an axis overflows.
std::uint64_t voxel_key(const Vec3& p, const VoxelParams& params);

}  // namespace roomenv
