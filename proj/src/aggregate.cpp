#include "roomenv/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace roomenv {

void AttributedPointCloud::reserve(std::size_t n) {
  positions.reserve(n);
  colors.reserve(n);
  normals.reserve(n);
  labels.reserve(n);
  sources.reserve(n);
}

void AttributedPointCloud::push_back_from(const AttributedPointCloud& other, std::size_t i) {
  positions.push_back(other.positions[i]);
  colors.push_back(other.colors[i]);
  normals.push_back(other.normals[i]);
  labels.push_back(other.labels[i]);
  sources.push_back(other.sources[i]);
}

void AttributedPointCloud::validate() const {
  const std::size_t n = positions.size();
  if (colors.size() != n || normals.size() != n || labels.size() != n || sources.size() != n) {
    throw Error(Errc::ShapeMismatch, "point cloud columns have different lengths");
  }
}

bool AttributedPointCloud::same_tuple(std::size_t i, const AttributedPointCloud& other, std::size_t j) const {
  return positions[i] == other.positions[j] && colors[i] == other.colors[j] && normals[i] == other.normals[j] &&
         labels[i] == other.labels[j];
}

AttributedPointCloud aggregate_frames(std::span<const FrameBundle> frames) {
  if (frames.empty()) throw Error(Errc::EmptyInput, "no frames to aggregate");
  std::size_t total = 0;
  for (const auto& f : frames) total += f.valid_count();

  AttributedPointCloud cloud;
  cloud.reserve(total);
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const FrameBundle& f = frames[fi];
    const std::size_t n = f.valid.pixel_count();
    for (std::size_t px = 0; px < n; ++px) {
      if (!f.valid.data[px]) continue;
      const float* p = f.pointmap.at(px);
      const float* nrm = f.normals.at(px);
      const std::uint8_t* c = f.rgb.at(px);
      cloud.positions.emplace_back(p[0], p[1], p[2]);
      cloud.normals.emplace_back(nrm[0], nrm[1], nrm[2]);
      cloud.colors.push_back({c[0], c[1], c[2]});
      cloud.labels.push_back(f.labels.data[px]);
      cloud.sources.push_back({static_cast<std::uint32_t>(fi), static_cast<std::uint32_t>(px)});
    }
  }
  return cloud;
}

std::uint64_t voxel_key(const Vec3& p, const VoxelParams& params) {
  constexpr std::int64_t kMin = -(std::int64_t{1} << 20);
  constexpr std::int64_t kMax = (std::int64_t{1} << 20) - 1;
  std::uint64_t key = 0;
  for (int axis = 0; axis < 3; ++axis) {
    const double cell = std::floor((p[axis] - params.origin[axis]) / params.rho);
    if (!(cell >= static_cast<double>(kMin) && cell <= static_cast<double>(kMax))) {
      throw Error(Errc::VoxelRange, "voxel coordinate out of 21-bit range on axis " + std::to_string(axis) +
                                        " (rho too small for the scene extent?)");
    }
    const auto biased = static_cast<std::uint64_t>(static_cast<std::int64_t>(cell) - kMin);
    key |= biased << (21 * axis);
  }
  return key;
}

AttributedPointCloud voxel_downsample(const AttributedPointCloud& cloud, const VoxelParams& params) {
  if (!(params.rho > 0.0)) throw Error(Errc::InvalidArgument, "voxel size rho must be positive");
  cloud.validate();
  const std::size_t n = cloud.size();

  std::unordered_map<std::uint64_t, std::uint32_t> voxel_of_key;
  voxel_of_key.reserve(n);
  std::vector<std::uint32_t> voxel(n);
  std::vector<Vec3> sums;
  std::vector<std::uint32_t> counts;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = cloud.positions[i].cast<double>();
    const auto [it, inserted] = voxel_of_key.try_emplace(voxel_key(p, params), static_cast<std::uint32_t>(sums.size()));
    if (inserted) {
      sums.push_back(Vec3::Zero());
      counts.push_back(0);
    }
    voxel[i] = it->second;
    sums[it->second] += p;
    ++counts[it->second];
  }

  constexpr double kTieTolerance = 1e-12;
  constexpr std::uint32_t kNone = 0xffffffffu;
  std::vector<std::uint32_t> best(sums.size(), kNone);
  std::vector<double> best_dist(sums.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t g = voxel[i];
    const Vec3 centroid = sums[g] / static_cast<double>(counts[g]);
    const double d = (cloud.positions[i].cast<double>() - centroid).norm();
    if (best[g] == kNone || d < best_dist[g] - kTieTolerance) {
      best[g] = static_cast<std::uint32_t>(i);
      best_dist[g] = d;
    }
  }
  std::sort(best.begin(), best.end());

  AttributedPointCloud out;
  out.reserve(best.size());
  for (std::uint32_t i : best) out.push_back_from(cloud, i);
  return out;
}

}  // namespace roomenv
