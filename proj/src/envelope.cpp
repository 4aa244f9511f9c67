#include "roomenv/envelope.hpp"

#include <cmath>
#include <limits>

#include "roomenv/parallel.hpp"

namespace roomenv {

void RasterConfig::validate() const {
  if (!(tau > 0.0)) throw Error(Errc::InvalidArgument, "depth threshold tau must be positive");
  if (splat_radius < 0) throw Error(Errc::InvalidArgument, "splat_radius must be >= 0");
}

void EnvelopeSample::validate() const {
  camera.validate();
  const int w = camera.width;
  const int h = camera.height;
  auto check = [&](bool ok, const char* name) {
    if (!ok) throw Error(Errc::ShapeMismatch, std::string(name) + " raster does not match camera resolution");
  };
  check(rgb.same_shape(w, h) && rgb.data.size() == rgb.pixel_count() * 3, "rgb");
  check(visible_pointmap.same_shape(w, h) && visible_pointmap.data.size() == visible_pointmap.pixel_count() * 3,
        "visible_pointmap");
  check(visible_valid.same_shape(w, h) && visible_valid.data.size() == visible_valid.pixel_count(), "visible_valid");
  check(layout_pointmap.same_shape(w, h) && layout_pointmap.data.size() == layout_pointmap.pixel_count() * 3,
        "layout_pointmap");
  check(layout_valid.same_shape(w, h) && layout_valid.data.size() == layout_valid.pixel_count(), "layout_valid");
  check(layout_label.same_shape(w, h) && layout_label.data.size() == layout_label.pixel_count(), "layout_label");
  for (std::size_t i = 0; i < layout_valid.pixel_count(); ++i) {
    if (visible_valid.data[i] && !point_at(visible_pointmap, i).allFinite()) {
      throw Error(Errc::InvalidArgument, "visible pointmap pixel " + std::to_string(i) + " valid but not finite");
    }
    if (layout_valid.data[i] && !point_at(layout_pointmap, i).allFinite()) {
      throw Error(Errc::InvalidArgument, "layout pointmap pixel " + std::to_string(i) + " valid but not finite");
    }
  }
}

AttributedPointCloud filter_layout(const AttributedPointCloud& cloud, const LayoutClassSet& classes) {
  cloud.validate();
  AttributedPointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (classes.contains(cloud.labels[i])) out.push_back_from(cloud, i);
  }
  return out;
}

LayoutView render_layout_view(const AttributedPointCloud& layout_cloud, const CameraModel& cam,
                              const RasterConfig& cfg, int threads) {
  cfg.validate();
  cam.validate();
  layout_cloud.validate();
  const int w = cam.width;
  const int h = cam.height;
  const int r = cfg.splat_radius;
  const std::size_t n = layout_cloud.size();
  const std::size_t pixels = static_cast<std::size_t>(w) * h;

  struct Projected {
    Vec3 p_cam;
    int u;
    int v;
    bool hit;
  };
  std::vector<Projected> proj(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const Vec3 pc = world_to_canonical_camera(layout_cloud.positions[i].cast<double>(), cam);
    const auto px = project(pc, cam);
    Projected& out = proj[i];
    out.p_cam = pc;
    out.hit = px && px->u + r >= 0 && px->u - r < w && px->v + r >= 0 && px->v - r < h;
    if (out.hit) {
      out.u = px->u;
      out.v = px->v;
    }
  });

  // Bucket point indices per pixel (CSR), ascending index within a bucket.
  std::vector<std::uint32_t> offsets(pixels + 1, 0);
  auto for_footprint = [&](const Projected& p, auto&& fn) {
    for (int v = std::max(0, p.v - r); v <= std::min(h - 1, p.v + r); ++v) {
      for (int u = std::max(0, p.u - r); u <= std::min(w - 1, p.u + r); ++u) {
        fn(static_cast<std::size_t>(v) * w + u);
      }
    }
  };
  for (const auto& p : proj) {
    if (p.hit) for_footprint(p, [&](std::size_t px) { ++offsets[px + 1]; });
  }
  for (std::size_t i = 0; i < pixels; ++i) offsets[i + 1] += offsets[i];
  std::vector<std::uint32_t> members(offsets.back());
  {
    std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (proj[i].hit) for_footprint(proj[i], [&](std::size_t px) { members[cursor[px]++] = static_cast<std::uint32_t>(i); });
    }
  }

  LayoutView view;
  view.pointmap = nan_pointmap(w, h);
  view.valid = Mask(w, h, 0);
  view.label = LabelImage(w, h, labels::kUnlabeled);
  view.selected.assign(pixels, -1);

  parallel_for(pixels, threads, [&](std::size_t px) {
    const std::uint32_t begin = offsets[px];
    const std::uint32_t end = offsets[px + 1];
    if (begin == end) return;
    double z_min = std::numeric_limits<double>::infinity();
    for (std::uint32_t k = begin; k < end; ++k) z_min = std::min(z_min, proj[members[k]].p_cam.z());

    const int u = static_cast<int>(px % w);
    const int v = static_cast<int>(px / w);
    const Ray ray = pixel_ray(u, v, cam);
    std::int64_t best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::uint32_t k = begin; k < end; ++k) {
      const Vec3& pc = proj[members[k]].p_cam;
      if (std::abs(pc.z() - z_min) > cfg.tau) continue;
      const double d = point_to_ray_distance(pc, ray);
      if (d < best_dist) {
        best_dist = d;
        best = members[k];
      }
    }
    view.selected[px] = best;
    const Vec3f& p = layout_cloud.positions[static_cast<std::size_t>(best)];
    float* dst = view.pointmap.at(px);
    dst[0] = p.x();
    dst[1] = p.y();
    dst[2] = p.z();
    view.valid.data[px] = 1;
    view.label.data[px] = layout_cloud.labels[static_cast<std::size_t>(best)];
  });
  return view;
}

EnvelopeSample build_envelope(const FrameBundle& frame, const AttributedPointCloud& layout_cloud,
                              const RasterConfig& cfg, const EnvelopeChecks& checks,
                              EnvelopeDiagnostics* diagnostics, int threads) {
  frame.validate();
  LayoutView view = render_layout_view(layout_cloud, frame.camera, cfg, threads);

  EnvelopeSample s;
  s.scene_id = frame.scene_id;
  s.frame_id = frame.frame_id;
  s.camera = frame.camera;
  s.rgb = frame.rgb;
  s.visible_pointmap = frame.pointmap;
  s.visible_valid = frame.valid;
  s.layout_pointmap = std::move(view.pointmap);
  s.layout_valid = std::move(view.valid);
  s.layout_label = std::move(view.label);

  EnvelopeDiagnostics diag;
  const auto vis_depth = camera_depth(s.visible_pointmap, s.visible_valid, s.camera);
  const auto lay_depth = camera_depth(s.layout_pointmap, s.layout_valid, s.camera);
  for (std::size_t i = 0; i < vis_depth.size(); ++i) {
    if (s.layout_valid.data[i] && checks.classes && !checks.classes->contains(s.layout_label.data[i])) {
      ++diag.label_violations;
    }
    if (!s.layout_valid.data[i] || !s.visible_valid.data[i]) continue;
    ++diag.mutually_valid;
    if (lay_depth[i] < vis_depth[i] - checks.eps_vis) ++diag.layout_in_front;
  }
  if (diagnostics) *diagnostics = diag;

  if (diag.mutually_valid > 0 && 2 * diag.layout_in_front > diag.mutually_valid) {
    throw Error(Errc::ScaleMismatch, "layout surface lies in front of the visible surface on " +
                                         std::to_string(diag.layout_in_front) + " of " +
                                         std::to_string(diag.mutually_valid) + " pixels of frame '" +
                                         frame.frame_id + "'");
  }
  if (checks.policy == ViolationPolicy::Error && (diag.layout_in_front > 0 || diag.label_violations > 0)) {
    throw Error(Errc::EnvelopeViolation, std::to_string(diag.layout_in_front) + " depth and " +
                                             std::to_string(diag.label_violations) +
                                             " label violations in frame '" + frame.frame_id + "'");
  }
  return s;
}

double VisibilityCounts::unseen_fraction() const {
  const std::size_t n = layout();
  return n == 0 ? 0.0 : static_cast<double>(unseen) / static_cast<double>(n);
}

VisibilityMap classify_visibility(const EnvelopeSample& sample, double eps_vis) {
  if (!(eps_vis > 0.0)) throw Error(Errc::InvalidArgument, "eps_vis must be positive");
  const auto vis_depth = camera_depth(sample.visible_pointmap, sample.visible_valid, sample.camera);
  const auto lay_depth = camera_depth(sample.layout_pointmap, sample.layout_valid, sample.camera);
  VisibilityMap map(sample.camera.width, sample.camera.height, Visibility::NoLayout);
  for (std::size_t i = 0; i < map.data.size(); ++i) {
    if (!sample.layout_valid.data[i]) continue;
    if (!sample.visible_valid.data[i] || lay_depth[i] > vis_depth[i] + eps_vis) {
      map.data[i] = Visibility::Unseen;
    } else {
      map.data[i] = Visibility::Seen;
    }
  }
  return map;
}

VisibilityCounts count_visibility(const VisibilityMap& map) {
  VisibilityCounts c;
  for (auto v : map.data) {
    switch (v) {
      case Visibility::Seen: ++c.seen; break;
      case Visibility::Unseen: ++c.unseen; break;
      case Visibility::NoLayout: ++c.no_layout; break;
    }
  }
  return c;
}

std::vector<double> camera_depth(const Pointmap& world_points, const Mask& valid, const CameraModel& cam) {
  std::vector<double> depth(valid.pixel_count(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (valid.data[i]) depth[i] = world_to_canonical_camera(point_at(world_points, i), cam).z();
  }
  return depth;
}

Pointmap to_camera_frame(const Pointmap& world_points, const Mask& valid, const CameraModel& cam) {
  Pointmap out = nan_pointmap(world_points.width, world_points.height);
  for (std::size_t i = 0; i < valid.pixel_count(); ++i) {
    if (valid.data[i]) set_point(out, i, world_to_canonical_camera(point_at(world_points, i), cam));
  }
  return out;
}

}  // namespace roomenv
