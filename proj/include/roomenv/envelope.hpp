#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roomenv/aggregate.hpp"
#include "roomenv/core.hpp"

namespace roomenv {

struct RasterConfig {
  double tau = 0.04;     // depth slab kept behind the nearest projected point (m)
  int splat_radius = 0;  // square footprint half-width in pixels

  void validate() const;
};

struct LayoutView {
  Pointmap pointmap;  // world coordinates of the selected point
  Mask valid;
  LabelImage label;
  std::vector<std::int64_t> selected;  // cloud index per pixel, -1 for holes
};

struct EnvelopeSample {
  std::string scene_id;
  std::string frame_id;
  CameraModel camera;
  RgbImage rgb;
  Pointmap visible_pointmap;
  Mask visible_valid;
  Pointmap layout_pointmap;
  Mask layout_valid;
  LabelImage layout_label;

  void validate() const;
};

/// Points whose label belongs to `classes`, in input order.
AttributedPointCloud filter_layout(const AttributedPointCloud& cloud, const LayoutClassSet& classes);

// Per pixel: gather the points projecting into it (footprint widened by
// splat_radius), keep those within tau of the nearest depth, and select the
// one closest to the pixel's centre ray. Ties go to the lower cloud index.
LayoutView render_layout_view(const AttributedPointCloud& layout_cloud, const CameraModel& cam,
                              const RasterConfig& cfg, int threads = 1);

enum class ViolationPolicy { Error, Warn };

struct EnvelopeChecks {
  double eps_vis = 0.05;
  ViolationPolicy policy = ViolationPolicy::Warn;
  std::optional<LayoutClassSet> classes;  // also check layout labels when set
};

struct EnvelopeDiagnostics {
  std::size_t mutually_valid = 0;
  std::size_t layout_in_front = 0;  // layout depth < visible depth - eps_vis
  std::size_t label_violations = 0;
};

// Pairs the frame's visible surface with the rendered layout surface.
// Throws Error(ScaleMismatch) when the layout lies in front of the visible
// surface on more than half of the mutually valid pixels, which indicates the
// frame and cloud disagree on frame or scale. Smaller violation counts throw
// Error(EnvelopeViolation) only under ViolationPolicy::Error.
EnvelopeSample build_envelope(const FrameBundle& frame, const AttributedPointCloud& layout_cloud,
                              const RasterConfig& cfg, const EnvelopeChecks& checks = {},
                              EnvelopeDiagnostics* diagnostics = nullptr, int threads = 1);

enum class Visibility : std::uint8_t { NoLayout = 0, Seen = 1, Unseen = 2 };

using VisibilityMap = Raster<Visibility, 1>;

struct VisibilityCounts {
  std::size_t seen = 0;
  std::size_t unseen = 0;
  std::size_t no_layout = 0;

  std::size_t layout() const { return seen + unseen; }
  std::size_t total() const { return seen + unseen + no_layout; }
  /// Unseen share of layout pixels; 0 when there are none.
  double unseen_fraction() const;
};

// A layout pixel is Seen when its depth is within eps_vis of the visible
// depth and Unseen when it lies farther behind (or nothing visible there).
// Layout depth in front of the visible surface by more than eps_vis is an
// envelope violation; such pixels count as Seen.
VisibilityMap classify_visibility(const EnvelopeSample& sample, double eps_vis);
VisibilityCounts count_visibility(const VisibilityMap& map);

/// Canonical camera depth (z) of every valid pixel; NaN elsewhere.
std::vector<double> camera_depth(const Pointmap& world_points, const Mask& valid, const CameraModel& cam);

/// Pointmap re-expressed in the canonical camera frame (invalid pixels NaN).
Pointmap to_camera_frame(const Pointmap& world_points, const Mask& valid, const CameraModel& cam);

}  // namespace roomenv
