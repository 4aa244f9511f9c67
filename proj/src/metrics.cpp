#include "roomenv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace roomenv {

AlignmentResult align_scale_shift(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  if (pred.size() != gt.size()) throw Error(Errc::ShapeMismatch, "alignment needs paired points");
  // Sums for the 2x2 normal equations:
  //   [sum|p|^2  sum p_z] [s]   [sum p.g ]
  //   [sum p_z   n      ] [t] = [sum g_z ]
  double spp = 0.0, spz = 0.0, spg = 0.0, sgz = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Vec3& p = pred[i];
    const Vec3& g = gt[i];
    if (!p.allFinite() || !g.allFinite()) continue;
    spp += p.squaredNorm();
    spz += p.z();
    spg += p.dot(g);
    sgz += g.z();
    ++n;
  }
  if (n < 2) throw Error(Errc::Degenerate, "alignment needs at least two valid pixels, got " + std::to_string(n));
  const double nn = static_cast<double>(n);
  const double det = nn * spp - spz * spz;
  if (!(det > 1e-12 * nn * std::max(spp, 1e-300))) {
    throw Error(Errc::Degenerate, "alignment normal equations are singular");
  }
  AlignmentResult r;
  r.count = n;
  r.scale = (nn * spg - spz * sgz) / det;
  r.z_shift = (spp * sgz - spz * spg) / det;
  if (!(r.scale > 0.0) || !std::isfinite(r.z_shift)) {
    throw Error(Errc::Degenerate, "alignment produced a non-positive scale");
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred[i].allFinite() || !gt[i].allFinite()) continue;
    sq += (r.scale * pred[i] + r.z_shift * Vec3::UnitZ() - gt[i]).squaredNorm();
  }
  r.residual_rms = std::sqrt(sq / nn);
  return r;
}

AlignmentResult align_scale_shift(const Pointmap& pred, const Pointmap& gt, const Mask& mask) {
  if (!pred.same_shape(gt.width, gt.height) || !mask.same_shape(gt.width, gt.height)) {
    throw Error(Errc::ShapeMismatch, "prediction, ground truth and mask must share a resolution");
  }
  std::vector<Vec3> p, g;
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    if (!mask.data[i]) continue;
    p.push_back(point_at(pred, i));
    g.push_back(point_at(gt, i));
  }
  return align_scale_shift(std::span<const Vec3>(p), std::span<const Vec3>(g));
}

Pointmap apply_alignment(const Pointmap& pred, const Mask& mask, const AlignmentResult& a) {
  Pointmap out = nan_pointmap(pred.width, pred.height);
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    if (mask.data[i]) set_point(out, i, a.scale * point_at(pred, i) + a.z_shift * Vec3::UnitZ());
  }
  return out;
}

// ---------------------------------------------------------------- nearest neighbours

NearestNeighbors::NearestNeighbors(std::vector<Vec3> points) : points_(std::move(points)) {
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / 8 + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::uint32_t NearestNeighbors::build(std::uint32_t begin, std::uint32_t end) {
  constexpr std::uint32_t kLeafSize = 8;
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({-1, 0.0, begin, end, 0, 0});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[begin], hi = points_[begin];
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[i]);
    hi = hi.cwiseMax(points_[i]);
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                   [axis](const Vec3& a, const Vec3& b) { return a[axis] < b[axis]; });
  const double split = points_[mid][axis];
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[id] = {axis, split, begin, end, left, right};
  return id;
}

// Left subtree holds coordinates <= split, right subtree >= split.
void NearestNeighbors::search(std::uint32_t node_id, const Vec3& q, double& best_sq) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) best_sq = std::min(best_sq, (q - points_[i]).squaredNorm());
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::uint32_t near = diff < 0.0 ? node.left : node.right;
  const std::uint32_t far = diff < 0.0 ? node.right : node.left;
  search(near, q, best_sq);
  if (diff * diff <= best_sq) search(far, q, best_sq);
}

double NearestNeighbors::nearest_distance(const Vec3& q) const {
  if (points_.empty()) throw Error(Errc::EmptySet, "nearest-neighbour query on an empty set");
  double best_sq = std::numeric_limits<double>::infinity();
  search(0, q, best_sq);
  return std::sqrt(best_sq);
}

double mean_nearest_distance(std::span<const Vec3> a, const NearestNeighbors& b) {
  if (a.empty() || b.size() == 0) throw Error(Errc::EmptySet, "chamfer distance needs non-empty point sets");
  double sum = 0.0;
  for (const Vec3& p : a) sum += b.nearest_distance(p);
  return sum / static_cast<double>(a.size());
}

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b, ChamferMode mode) {
  if (a.empty() || b.empty()) throw Error(Errc::EmptySet, "chamfer distance needs non-empty point sets");
  switch (mode) {
    case ChamferMode::AtoB: return mean_nearest_distance(a, NearestNeighbors({b.begin(), b.end()}));
    case ChamferMode::BtoA: return mean_nearest_distance(b, NearestNeighbors({a.begin(), a.end()}));
    case ChamferMode::Bidirectional:
      break;
  }
  const double ab = mean_nearest_distance(a, NearestNeighbors({b.begin(), b.end()}));
  const double ba = mean_nearest_distance(b, NearestNeighbors({a.begin(), a.end()}));
  return 0.5 * (ab + ba);
}

double chamfer_best_one_directional(std::span<const Vec3> a, std::span<const Vec3> b) {
  return std::min(chamfer(a, b, ChamferMode::AtoB), chamfer(a, b, ChamferMode::BtoA));
}

FScore f_score(std::span<const Vec3> pred, std::span<const Vec3> gt, double threshold) {
  if (pred.empty() || gt.empty()) throw Error(Errc::EmptySet, "f-score needs non-empty point sets");
  if (!(threshold > 0.0)) throw Error(Errc::InvalidArgument, "f-score threshold must be positive");
  const NearestNeighbors gt_index({gt.begin(), gt.end()});
  const NearestNeighbors pred_index({pred.begin(), pred.end()});
  std::size_t close_pred = 0, close_gt = 0;
  for (const Vec3& p : pred) close_pred += gt_index.nearest_distance(p) < threshold ? 1 : 0;
  for (const Vec3& g : gt) close_gt += pred_index.nearest_distance(g) < threshold ? 1 : 0;
  FScore s;
  s.precision = static_cast<double>(close_pred) / static_cast<double>(pred.size());
  s.recall = static_cast<double>(close_gt) / static_cast<double>(gt.size());
  s.f = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

// ---------------------------------------------------------------- per-image evaluation

const char* to_string(Region r) {
  switch (r) {
    case Region::Seen: return "seen";
    case Region::Unseen: return "unseen";
    case Region::Overall: return "overall";
  }
  return "?";
}

ImageReport evaluate_sample(const Pointmap& pred_cam, const Mask& pred_valid, const EnvelopeSample& sample,
                            const EvalOptions& options) {
  const int w = sample.camera.width;
  const int h = sample.camera.height;
  if (!pred_cam.same_shape(w, h)) {
    throw Error(Errc::ShapeMismatch, "prediction is " + std::to_string(pred_cam.width) + "x" +
                                         std::to_string(pred_cam.height) + ", ground truth is " + std::to_string(w) +
                                         "x" + std::to_string(h));
  }
  std::vector<Vec3> pred(pred_cam.pixel_count());
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = point_at(pred_cam, i);
  return evaluate_sample(std::span<const Vec3>(pred), pred_valid, sample, options);
}

ImageReport evaluate_sample(std::span<const Vec3> pred_cam, const Mask& pred_valid, const EnvelopeSample& sample,
                            const EvalOptions& options) {
  const int w = sample.camera.width;
  const int h = sample.camera.height;
  const std::size_t pixels = static_cast<std::size_t>(w) * h;
  if (pred_cam.size() != pixels || !pred_valid.same_shape(w, h)) {
    throw Error(Errc::ShapeMismatch, "prediction does not match the " + std::to_string(w) + "x" + std::to_string(h) +
                                         " ground truth");
  }
  if (options.thresholds.empty()) throw Error(Errc::InvalidArgument, "at least one f-score threshold is required");

  ImageReport report;
  report.scene_id = sample.scene_id;
  report.frame_id = sample.frame_id;

  const Pointmap gt_cam = to_camera_frame(sample.layout_pointmap, sample.layout_valid, sample.camera);
  std::vector<Vec3> pa, ga;
  for (std::size_t i = 0; i < pixels; ++i) {
    if (!pred_valid.data[i] || !sample.layout_valid.data[i]) continue;
    pa.push_back(pred_cam[i]);
    ga.push_back(point_at(gt_cam, i));
  }
  report.alignment = align_scale_shift(std::span<const Vec3>(pa), std::span<const Vec3>(ga));
  const AlignmentResult& a = report.alignment;

  const VisibilityMap vis = classify_visibility(sample, options.eps_vis);
  report.visibility = count_visibility(vis);

  for (Region region : kRegions) {
    std::vector<Vec3> gt_pts, pred_pts;
    for (std::size_t i = 0; i < pixels; ++i) {
      const Visibility v = vis.data[i];
      const bool in_region = region == Region::Overall ? v != Visibility::NoLayout
                             : region == Region::Seen  ? v == Visibility::Seen
                                                       : v == Visibility::Unseen;
      if (!in_region) continue;
      gt_pts.push_back(point_at(gt_cam, i));
      if (pred_valid.data[i] && pred_cam[i].allFinite()) {
        pred_pts.push_back(a.scale * pred_cam[i] + a.z_shift * Vec3::UnitZ());
      }
    }
    RegionMetrics& m = report.regions[static_cast<std::size_t>(region)];
    m.gt_points = gt_pts.size();
    m.pred_points = pred_pts.size();
    if (gt_pts.empty() || pred_pts.empty()) continue;
    m.evaluated = true;
    m.chamfer = options.chamfer == ChamferPolicy::Bidirectional ? chamfer(pred_pts, gt_pts)
                                                                : chamfer_best_one_directional(pred_pts, gt_pts);
    for (double thr : options.thresholds) m.f.push_back(f_score(pred_pts, gt_pts, thr).f);
  }
  return report;
}

EvalSummary summarize(const std::vector<ImageReport>& images, std::size_t n_thresholds) {
  EvalSummary s;
  s.images = images.size();
  std::size_t unseen = 0, layout = 0;
  for (auto& f : s.f) f.assign(n_thresholds, 0.0);
  for (const auto& img : images) {
    s.unseen_fraction_mean += img.visibility.unseen_fraction();
    unseen += img.visibility.unseen;
    layout += img.visibility.layout();
    for (std::size_t r = 0; r < 3; ++r) {
      const RegionMetrics& m = img.regions[r];
      if (!m.evaluated) continue;
      ++s.images_evaluated[r];
      s.chamfer[r] += m.chamfer;
      for (std::size_t k = 0; k < n_thresholds && k < m.f.size(); ++k) s.f[r][k] += m.f[k];
    }
  }
  if (!images.empty()) s.unseen_fraction_mean /= static_cast<double>(images.size());
  s.unseen_fraction_pooled = layout ? static_cast<double>(unseen) / static_cast<double>(layout) : 0.0;
  for (std::size_t r = 0; r < 3; ++r) {
    const double n = static_cast<double>(s.images_evaluated[r]);
    if (n == 0.0) {
      s.chamfer[r] = std::numeric_limits<double>::quiet_NaN();
      for (auto& f : s.f[r]) f = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    s.chamfer[r] /= n;
    for (auto& f : s.f[r]) f /= n;
  }
  return s;
}

namespace {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string threshold_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", t);
  return buf;
}

nlohmann::json json_number(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

}  // namespace

std::string report_csv(const std::vector<ImageReport>& images, const std::vector<double>& thresholds) {
  std::string out = "scene_id,frame_id,scale,z_shift,residual_rms,seen_pixels,unseen_pixels,no_layout_pixels,unseen_fraction";
  for (Region r : kRegions) {
    out += std::string(",") + to_string(r) + "_cd";
    for (double t : thresholds) out += std::string(",") + to_string(r) + "_f@" + threshold_label(t);
  }
  out += "\n";
  for (const auto& img : images) {
    out += img.scene_id + "," + img.frame_id + "," + fmt_double(img.alignment.scale) + "," +
           fmt_double(img.alignment.z_shift) + "," + fmt_double(img.alignment.residual_rms) + "," +
           std::to_string(img.visibility.seen) + "," + std::to_string(img.visibility.unseen) + "," +
           std::to_string(img.visibility.no_layout) + "," + fmt_double(img.visibility.unseen_fraction());
    for (const auto& m : img.regions) {
      out += "," + (m.evaluated ? fmt_double(m.chamfer) : std::string());
      for (std::size_t k = 0; k < thresholds.size(); ++k) {
        out += "," + (m.evaluated && k < m.f.size() ? fmt_double(m.f[k]) : std::string());
      }
    }
    out += "\n";
  }
  return out;
}

std::string summary_json(const EvalSummary& s, const std::vector<double>& thresholds) {
  nlohmann::ordered_json j;
  j["images"] = s.images;
  j["thresholds"] = thresholds;
  j["unseen_fraction_mean"] = s.unseen_fraction_mean;
  j["unseen_fraction_pooled"] = s.unseen_fraction_pooled;
  for (Region r : kRegions) {
    const auto idx = static_cast<std::size_t>(r);
    nlohmann::ordered_json region;
    region["images_evaluated"] = s.images_evaluated[idx];
    region["cd"] = json_number(s.chamfer[idx]);
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      region["f@" + threshold_label(thresholds[k])] = json_number(s.f[idx][k]);
    }
    j[to_string(r)] = region;
  }
  return j.dump(2) + "\n";
}

}  // namespace roomenv
