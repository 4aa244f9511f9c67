#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "roomenv/core.hpp"
#include "roomenv/envelope.hpp"

namespace roomenv {

struct AlignmentResult {
  double scale = 1.0;
  double z_shift = 0.0;
  double residual_rms = 0.0;
  std::size_t count = 0;
};

// Least-squares s, t minimising sum |s*p_i + t*e_z - g_i|^2 over the masked
// pixel correspondences (closed-form 2x2 normal equations). Throws
// Error(Degenerate) with fewer than two pixels, a singular system, or a
// non-positive optimal scale.
AlignmentResult align_scale_shift(const Pointmap& pred, const Pointmap& gt, const Mask& mask);
/// Same fit over paired points; pairs with a non-finite member are skipped.
AlignmentResult align_scale_shift(std::span<const Vec3> pred, std::span<const Vec3> gt);

/// s*p + t*e_z on masked pixels; other pixels become NaN.
Pointmap apply_alignment(const Pointmap& pred, const Mask& mask, const AlignmentResult& a);

// Exact nearest-neighbour queries over a fixed point set (k-d tree).
class NearestNeighbors {
 public:
  explicit NearestNeighbors(std::vector<Vec3> points);
  double nearest_distance(const Vec3& q) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int axis;  // -1 for leaves
    double split;
    std::uint32_t begin;
    std::uint32_t end;
    std::uint32_t left;
    std::uint32_t right;
  };
  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::uint32_t node, const Vec3& q, double& best_sq) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
};

enum class ChamferMode { Bidirectional, AtoB, BtoA };

/// Mean over a in A of the distance to the nearest b in B.
double mean_nearest_distance(std::span<const Vec3> a, const NearestNeighbors& b);

/// Throws Error(EmptySet) if either set is empty.
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b, ChamferMode mode = ChamferMode::Bidirectional);
/// min(d(A->B), d(B->A)).
double chamfer_best_one_directional(std::span<const Vec3> a, std::span<const Vec3> b);

struct FScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

/// Precision/recall count points strictly closer than `threshold`.
FScore f_score(std::span<const Vec3> pred, std::span<const Vec3> gt, double threshold);

enum class ChamferPolicy { Bidirectional, BestOneDirectional };

enum class Region { Seen = 0, Unseen = 1, Overall = 2 };
inline constexpr std::array<Region, 3> kRegions = {Region::Seen, Region::Unseen, Region::Overall};
const char* to_string(Region r);

struct RegionMetrics {
  bool evaluated = false;
  std::size_t gt_points = 0;
  std::size_t pred_points = 0;
  double chamfer = 0.0;
  std::vector<double> f;  // one per threshold
};

struct ImageReport {
  std::string scene_id;
  std::string frame_id;
  AlignmentResult alignment;
  VisibilityCounts visibility;
  std::array<RegionMetrics, 3> regions;
};

struct EvalOptions {
  double eps_vis = 0.05;
  std::vector<double> thresholds{0.1, 0.05};
  ChamferPolicy chamfer = ChamferPolicy::Bidirectional;
};

// Scores a predicted layout pointmap (canonical camera frame, pixel-aligned
// with the sample) after scale/z-shift alignment on the pixels where both
// prediction and ground-truth layout are valid.
ImageReport evaluate_sample(const Pointmap& pred_cam, const Mask& pred_valid, const EnvelopeSample& sample,
                            const EvalOptions& options);
/// Double-precision prediction, one point per pixel in row-major order.
ImageReport evaluate_sample(std::span<const Vec3> pred_cam, const Mask& pred_valid, const EnvelopeSample& sample,
                            const EvalOptions& options);

struct EvalSummary {
  std::size_t images = 0;
  double unseen_fraction_mean = 0.0;
  double unseen_fraction_pooled = 0.0;  // unseen pixels / layout pixels over all images
  std::array<std::size_t, 3> images_evaluated{};
  std::array<double, 3> chamfer{};
  std::array<std::vector<double>, 3> f;
};

/// Unweighted means over images (regions that were not evaluated are skipped).
EvalSummary summarize(const std::vector<ImageReport>& images, std::size_t n_thresholds);

std::string report_csv(const std::vector<ImageReport>& images, const std::vector<double>& thresholds);
std::string summary_json(const EvalSummary& summary, const std::vector<double>& thresholds);

}  // namespace roomenv
