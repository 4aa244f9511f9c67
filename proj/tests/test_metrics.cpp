#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "roomenv/metrics.hpp"
#include "roomenv/random.hpp"
#include "roomenv/synthgen.hpp"

using namespace roomenv;

namespace {

std::vector<Vec3> random_points(Rng& rng, std::size_t n, double extent) {
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) {
    pts.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-extent, extent));
  }
  return pts;
}

double brute_directed(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double sum = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, (p - q).norm());
    sum += best;
  }
  return sum / double(a.size());
}

double brute_fraction_within(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double thr) {
  std::size_t hit = 0;
  for (const auto& p : a) {
    for (const auto& q : b) {
      if ((p - q).norm() < thr) {
        ++hit;
        break;
      }
    }
  }
  return double(hit) / double(a.size());
}

// Layout side of an oracle envelope expressed in the camera frame.
Pointmap layout_in_camera(const EnvelopeSample& s) {
  Pointmap out = nan_pointmap(s.camera.width, s.camera.height);
  for (std::size_t px = 0; px < s.layout_valid.data.size(); ++px) {
    if (s.layout_valid.data[px]) set_point(out, px, world_to_canonical_camera(point_at(s.layout_pointmap, px), s.camera));
  }
  return out;
}

void check_perfect(const ImageReport& r) {
  CHECK(r.alignment.scale == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(r.alignment.z_shift) < 1e-9);
  for (Region g : kRegions) {
    const RegionMetrics& m = r.regions[static_cast<std::size_t>(g)];
    if (!m.evaluated) continue;
    CHECK(m.chamfer < 1e-9);
    for (double f : m.f) CHECK(f == 1.0);
  }
}

}  // namespace

TEST_CASE("align_scale_shift examples") {
  Rng rng(2);
  const std::vector<Vec3> gt = random_points(rng, 50, 3.0);
  const AlignmentResult id = align_scale_shift(gt, gt);
  CHECK(id.scale == doctest::Approx(1.0));
  CHECK(std::abs(id.z_shift) < 1e-12);
  CHECK(id.residual_rms < 1e-12);
  CHECK(id.count == 50);

  std::vector<Vec3> pred;
  for (const auto& g : gt) pred.push_back(0.5 * g - 0.2 * Vec3::UnitZ());
  const AlignmentResult a = align_scale_shift(pred, gt);
  CHECK(a.scale == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(a.z_shift == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(a.residual_rms < 1e-9);
  for (std::size_t i = 0; i < gt.size(); ++i) CHECK((a.scale * pred[i] + a.z_shift * Vec3::UnitZ() - gt[i]).norm() < 1e-9);

  const std::vector<Vec3> one = {Vec3(1, 2, 3)};
  CHECK_THROWS_WITH_AS(align_scale_shift(one, one), doctest::Contains("Degenerate"), Error);
  const std::vector<Vec3> zeros(gt.size(), Vec3::Zero());
  CHECK_THROWS_WITH_AS(align_scale_shift(zeros, gt), doctest::Contains("Degenerate"), Error);
  // Points differing only in z: the z column cannot be separated from the shift.
  std::vector<Vec3> col;
  for (int i = 0; i < 10; ++i) col.emplace_back(0, 0, 1.0 + i);
  CHECK_NOTHROW(align_scale_shift(col, col));
  const std::vector<Vec3> same(10, Vec3(0, 0, 2));
  CHECK_THROWS_AS(align_scale_shift(same, same), Error);

  // Pointmap form uses only masked pixels.
  Pointmap p = nan_pointmap(3, 1), g = nan_pointmap(3, 1);
  Mask m(3, 1, 0);
  set_point(p, 0, Vec3(1, 0, 1));
  set_point(g, 0, Vec3(2, 0, 2));
  set_point(p, 1, Vec3(0, 1, 2));
  set_point(g, 1, Vec3(0, 2, 4));
  set_point(p, 2, Vec3(5, 5, 5));
  set_point(g, 2, Vec3(0, 0, 0));
  m.data = {1, 1, 0};
  const AlignmentResult pm = align_scale_shift(p, g, m);
  CHECK(pm.scale == doctest::Approx(2.0));
  CHECK(pm.count == 2);
  CHECK_THROWS_AS(align_scale_shift(p, nan_pointmap(2, 1), m), Error);
}

TEST_CASE("chamfer examples") {
  const std::vector<Vec3> a = {Vec3(0, 0, 0)};
  const std::vector<Vec3> b = {Vec3(1, 0, 0), Vec3(3, 0, 0)};
  CHECK(chamfer(a, b, ChamferMode::AtoB) == doctest::Approx(1.0));
  CHECK(chamfer(a, b, ChamferMode::BtoA) == doctest::Approx(2.0));
  CHECK(chamfer(a, b) == doctest::Approx(1.5));
  CHECK(chamfer_best_one_directional(a, b) == doctest::Approx(1.0));
  for (auto mode : {ChamferMode::Bidirectional, ChamferMode::AtoB, ChamferMode::BtoA}) CHECK(chamfer(b, b, mode) == 0.0);
  CHECK_THROWS_WITH_AS(chamfer(a, {}), doctest::Contains("EmptySet"), Error);
  CHECK_THROWS_AS(chamfer({}, b), Error);
}

TEST_CASE("f_score examples") {
  const std::vector<Vec3> a = {Vec3(0, 0, 0)};
  const std::vector<Vec3> b = {Vec3(0.04, 0, 0)};
  const FScore hi = f_score(a, b, 0.05);
  CHECK(hi.precision == 1.0);
  CHECK(hi.recall == 1.0);
  CHECK(hi.f == 1.0);
  CHECK(f_score(a, b, 0.01).f == 0.0);
  CHECK(f_score(a, a, 1e-9).f == 1.0);
  const std::vector<Vec3> far = {Vec3(100, 0, 0), Vec3(0, 100, 0)};
  CHECK(f_score(a, far, 0.1).f == 0.0);
  CHECK_THROWS_AS(f_score(a, {}, 0.1), Error);
  CHECK_THROWS_AS(f_score(a, b, 0.0), Error);

  // P = 1/2, R = 1 -> F = 2/3.
  const std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(5, 0, 0)};
  const FScore mixed = f_score(two, a, 0.1);
  CHECK(mixed.precision == doctest::Approx(0.5));
  CHECK(mixed.recall == doctest::Approx(1.0));
  CHECK(mixed.f == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("property: nearest-neighbour metrics match brute force") {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const std::vector<Vec3> a = random_points(rng, 1 + rng.below(1000), rng.uniform(0.1, 3));
    std::vector<Vec3> b = random_points(rng, 1 + rng.below(1000), rng.uniform(0.1, 3));
    // Exact duplicates and collinear runs stress the tree splits.
    for (std::size_t k = 0; k < b.size() / 10; ++k) b[rng.below(b.size())] = a[rng.below(a.size())];
    const double ab = brute_directed(a, b), ba = brute_directed(b, a);
    CHECK(std::abs(chamfer(a, b, ChamferMode::AtoB) - ab) <= 1e-9);
    CHECK(std::abs(chamfer(a, b, ChamferMode::BtoA) - ba) <= 1e-9);
    CHECK(std::abs(chamfer(a, b) - (ab + ba) / 2) <= 1e-9);
    CHECK(chamfer(a, b) == doctest::Approx(chamfer(b, a)).epsilon(1e-12));
    CHECK(chamfer(a, a) == 0.0);

    double prev = 0.0;
    for (double thr : {0.01, 0.05, 0.1, 0.3, 1.0}) {
      const FScore f = f_score(a, b, thr);
      CHECK(std::abs(f.precision - brute_fraction_within(a, b, thr)) <= 1e-12);
      CHECK(std::abs(f.recall - brute_fraction_within(b, a, thr)) <= 1e-12);
      CHECK(f.f >= prev);
      CHECK(f.f >= 0.0);
      CHECK(f.f <= 1.0);
      CHECK(f_score(a, a, thr).f == 1.0);
      prev = f.f;
    }
  }
}

TEST_CASE("evaluate_sample on oracle envelopes") {
  const EvalOptions opts;
  std::vector<ImageReport> reports;
  for (const auto& spec : make_preset("furnished", 1)) {
    for (std::size_t i = 0; i < spec.cameras.size(); ++i) {
      const EnvelopeSample s = oracle_envelope(spec, i);
      const Pointmap pred = layout_in_camera(s);
      const ImageReport r = evaluate_sample(pred, s.layout_valid, s, opts);
      check_perfect(r);
      CHECK(r.regions[static_cast<std::size_t>(Region::Overall)].evaluated);
      CHECK(r.visibility.total() == count_visibility(classify_visibility(s, opts.eps_vis)).total());

      // 0.7 scale and a z shift give the same metrics after alignment.
      std::vector<Vec3> moved(s.layout_valid.data.size());
      for (std::size_t px = 0; px < moved.size(); ++px) moved[px] = 0.7 * point_at(pred, px) + 0.3 * Vec3::UnitZ();
      const ImageReport q = evaluate_sample(moved, s.layout_valid, s, opts);
      CHECK(q.alignment.scale == doctest::Approx(1.0 / 0.7).epsilon(1e-9));
      for (Region g : kRegions) {
        const auto& x = r.regions[static_cast<std::size_t>(g)];
        const auto& y = q.regions[static_cast<std::size_t>(g)];
        CHECK(x.evaluated == y.evaluated);
        CHECK(std::abs(x.chamfer - y.chamfer) <= 1e-9);
        CHECK(x.f == y.f);
      }
      reports.push_back(r);
    }
  }
  const EvalSummary sum = summarize(reports, opts.thresholds.size());
  CHECK(sum.images == 12);
  CHECK(sum.unseen_fraction_pooled > 0.0);
  CHECK(sum.unseen_fraction_pooled < 1.0);
  CHECK(sum.chamfer[static_cast<std::size_t>(Region::Overall)] < 1e-9);
  const std::string csv = report_csv(reports, opts.thresholds);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  CHECK(summary_json(sum, opts.thresholds).find("\"images\"") != std::string::npos);

  const EnvelopeSample s = oracle_envelope(make_preset("tiny", 1)[0], 0);
  CHECK_THROWS_WITH_AS(evaluate_sample(nan_pointmap(10, 10), Mask(10, 10, 1), s, opts),
                       doctest::Contains("ShapeMismatch"), Error);
}
