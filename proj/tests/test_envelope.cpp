#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "roomenv/aggregate.hpp"
#include "roomenv/envelope.hpp"
#include "roomenv/random.hpp"
#include "roomenv/synthgen.hpp"

using namespace roomenv;

namespace {

CameraModel small_camera(int w, int h, double f) {
  CameraModel c;
  c.width = w;
  c.height = h;
  c.fx = c.fy = f;
  c.cx = w / 2.0;
  c.cy = h / 2.0;
  return c;
}

void push(AttributedPointCloud& c, const Vec3& p, std::uint16_t label) {
  c.positions.push_back(p.cast<float>());
  c.colors.push_back({1, 2, 3});
  c.normals.push_back(Vec3f(0, 0, -1));
  c.labels.push_back(label);
  c.sources.push_back({0, static_cast<std::uint32_t>(c.size() - 1)});
}

// Sample whose visible and layout surfaces lie at the given depths along each
// pixel ray (identity pose). NaN depth marks an invalid pixel.
EnvelopeSample depth_sample(const CameraModel& cam, const std::vector<double>& visible,
                            const std::vector<double>& layout) {
  EnvelopeSample s;
  s.camera = cam;
  s.rgb = RgbImage(cam.width, cam.height, 0);
  s.visible_pointmap = nan_pointmap(cam.width, cam.height);
  s.visible_valid = Mask(cam.width, cam.height, 0);
  s.layout_pointmap = nan_pointmap(cam.width, cam.height);
  s.layout_valid = Mask(cam.width, cam.height, 0);
  s.layout_label = LabelImage(cam.width, cam.height, 0);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const std::size_t px = s.rgb.index(u, v);
      const Vec3 d = pixel_ray(u, v, cam).direction;
      if (std::isfinite(visible[px])) {
        set_point(s.visible_pointmap, px, d * (visible[px] / d.z()));
        s.visible_valid.data[px] = 1;
      }
      if (std::isfinite(layout[px])) {
        set_point(s.layout_pointmap, px, d * (layout[px] / d.z()));
        s.layout_valid.data[px] = 1;
        s.layout_label.data[px] = labels::kWall;
      }
    }
  }
  return s;
}

}  // namespace

TEST_CASE("filter_layout examples") {
  AttributedPointCloud none;
  for (int i = 0; i < 5; ++i) push(none, Vec3(i, 0, 1), labels::kSofa);
  CHECK(filter_layout(none, LayoutClassSet::standard()).empty());

  AttributedPointCloud ten;
  const std::vector<std::uint16_t> labs = {labels::kSofa,  labels::kWall,  labels::kChair, labels::kFloor,
                                           labels::kTable, labels::kTable, labels::kDoor,  labels::kBed,
                                           labels::kWindow, labels::kCabinet};
  for (std::size_t i = 0; i < labs.size(); ++i) push(ten, Vec3(double(i), 0, 1), labs[i]);
  const AttributedPointCloud kept = filter_layout(ten, LayoutClassSet::standard());
  REQUIRE(kept.size() == 4);
  const std::vector<std::size_t> expect = {1, 3, 6, 8};
  for (std::size_t k = 0; k < 4; ++k) CHECK(kept.same_tuple(k, ten, expect[k]));
  const AttributedPointCloud twice = filter_layout(kept, LayoutClassSet::standard());
  REQUIRE(twice.size() == kept.size());
  for (std::size_t k = 0; k < 4; ++k) CHECK(twice.same_tuple(k, kept, k));
}

TEST_CASE("render_layout_view examples") {
  const CameraModel cam = small_camera(8, 6, 10);
  const RasterConfig cfg{0.05, 0};

  AttributedPointCloud one;
  push(one, Vec3(0.01, 0.01, 2.0), labels::kWall);
  const LayoutView a = render_layout_view(one, cam, cfg);
  const auto hit = project(Vec3(0.01, 0.01, 2.0), cam);
  REQUIRE(hit);
  for (int v = 0; v < 6; ++v) {
    for (int u = 0; u < 8; ++u) {
      const bool expected = u == hit->u && v == hit->v;
      CHECK(bool(a.valid.data[a.valid.index(u, v)]) == expected);
      CHECK(a.selected[a.valid.index(u, v)] == (expected ? 0 : -1));
    }
  }

  // Pixel (4,3) centre ray is (0.05, 0.05, 1) in normalised coordinates.
  AttributedPointCloud two;
  push(two, Vec3(0.02, 0.02, 2.00), labels::kWall);  // farther from the ray
  push(two, Vec3(0.10, 0.10, 2.02), labels::kWall);  // on the ray
  const LayoutView b = render_layout_view(two, cam, cfg);
  CHECK(b.selected[b.valid.index(4, 3)] == 1);

  AttributedPointCloud slab;
  push(slab, Vec3(0.02, 0.02, 2.0), labels::kWall);
  push(slab, Vec3(0.15, 0.15, 3.0), labels::kWall);  // on the ray but outside tau
  const LayoutView c = render_layout_view(slab, cam, cfg);
  CHECK(c.selected[c.valid.index(4, 3)] == 0);
  CHECK(c.label.data[c.valid.index(4, 3)] == labels::kWall);
  CHECK(c.pointmap.at(c.valid.index(4, 3))[2] == 2.0f);

  AttributedPointCloud behind;
  push(behind, Vec3(0, 0, -1), labels::kWall);
  CHECK(render_layout_view(behind, cam, cfg).valid.data == std::vector<std::uint8_t>(48, 0));

  CHECK_THROWS_AS(render_layout_view(one, cam, RasterConfig{0.0, 0}), Error);
  CHECK_THROWS_AS(render_layout_view(one, cam, RasterConfig{0.1, -1}), Error);
}

TEST_CASE("property: occlusion ordering, splat monotonicity, thread independence") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const CameraModel cam = small_camera(4 + int(rng.below(20)), 4 + int(rng.below(20)), rng.uniform(5, 30));
    AttributedPointCloud cloud;
    const std::size_t n = 1 + rng.below(2000);
    for (std::size_t i = 0; i < n; ++i) {
      push(cloud, Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-0.5, 4)), labels::kWall);
    }
    const double tau = rng.uniform(0.01, 0.5);
    std::size_t prev_valid = 0;
    for (int r = 0; r <= 3; ++r) {
      const RasterConfig cfg{tau, r};
      const LayoutView view = render_layout_view(cloud, cam, cfg);
      const LayoutView threaded = render_layout_view(cloud, cam, cfg, 5);
      CHECK(view.selected == threaded.selected);
      std::size_t valid = 0;
      for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
          const std::size_t px = view.valid.index(u, v);
          if (!view.valid.data[px]) continue;
          ++valid;
          double z_min = std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i < n; ++i) {
            const auto h = project(cloud.positions[i].cast<double>(), cam);
            if (h && std::abs(h->u - u) <= r && std::abs(h->v - v) <= r) z_min = std::min(z_min, h->z);
          }
          const double z_sel = cloud.positions[static_cast<std::size_t>(view.selected[px])].cast<double>().z();
          CHECK(z_sel >= z_min);
          CHECK(z_sel - z_min <= tau);
        }
      }
      CHECK(valid >= prev_valid);
      prev_valid = valid;
    }
  }
}

TEST_CASE("build_envelope") {
  const SceneSpec spec = make_preset("tiny", 0).at(0);
  std::vector<FrameBundle> frames;
  for (std::size_t i = 0; i < spec.cameras.size(); ++i) frames.push_back(render_frame(spec, i));
  const AttributedPointCloud layout =
      filter_layout(voxel_downsample(aggregate_frames(frames), VoxelParams{0.02, Vec3::Zero()}), LayoutClassSet::standard());
  const RasterConfig cfg{0.04, 0};

  SUBCASE("empty layout cloud leaves every layout pixel invalid") {
    const EnvelopeSample s = build_envelope(frames[0], AttributedPointCloud{}, cfg);
    CHECK(std::count(s.layout_valid.data.begin(), s.layout_valid.data.end(), 1) == 0);
    CHECK(s.visible_pointmap == frames[0].pointmap);
    CHECK(s.visible_valid == frames[0].valid);
    CHECK(s.rgb == frames[0].rgb);
  }

  SUBCASE("unfurnished room: layout equals visible within 2 rho") {
    for (const auto& f : frames) {
      EnvelopeDiagnostics diag;
      const EnvelopeSample s = build_envelope(f, layout, cfg, EnvelopeChecks{}, &diag);
      const auto lv = camera_depth(s.layout_pointmap, s.layout_valid, s.camera);
      const auto vv = camera_depth(s.visible_pointmap, s.visible_valid, s.camera);
      std::size_t both = 0, close = 0;
      for (std::size_t i = 0; i < lv.size(); ++i) {
        if (!s.layout_valid.data[i] || !s.visible_valid.data[i]) continue;
        ++both;
        close += std::abs(lv[i] - vv[i]) <= 0.04;
        CHECK(LayoutClassSet::standard().contains(s.layout_label.data[i]));
      }
      CHECK(both > 0);
      CHECK(double(close) / double(both) >= 0.995);
      CHECK(diag.label_violations == 0);
    }
  }

  SUBCASE("scale mismatch and violation policy") {
    AttributedPointCloud shrunk = layout;
    const Vec3 c = frames[0].camera.center_world();
    for (auto& p : shrunk.positions) p = (c + 0.5 * (p.cast<double>() - c)).cast<float>();
    CHECK_THROWS_WITH_AS(build_envelope(frames[0], shrunk, cfg), doctest::Contains("ScaleMismatch"), Error);

    // A single stray point in front of the wall is a violation but not a scale error.
    AttributedPointCloud stray = layout;
    const Vec3 mid = frames[0].camera.rotation_to_canonical().transpose() * Vec3(0, 0, 0.5) + c;
    push(stray, mid, labels::kWall);
    EnvelopeChecks strict;
    strict.policy = ViolationPolicy::Error;
    CHECK_NOTHROW(build_envelope(frames[0], stray, cfg));
    CHECK_THROWS_AS(build_envelope(frames[0], stray, cfg, strict), Error);
  }
}

TEST_CASE("classify_visibility examples and partition") {
  const CameraModel cam = small_camera(3, 1, 2);
  const double nan = std::nan("");
  const EnvelopeSample s = depth_sample(cam, {1.0, 3.0, 2.0}, {3.0, 3.02, nan});
  const VisibilityMap m = classify_visibility(s, 0.05);
  CHECK(m.data[0] == Visibility::Unseen);  // wall at 3 m behind a cuboid at 1 m
  CHECK(m.data[1] == Visibility::Seen);
  CHECK(m.data[2] == Visibility::NoLayout);

  const EnvelopeSample t = depth_sample(cam, {nan, 2.0, 2.0}, {4.0, 1.0, 2.06});
  const VisibilityMap n = classify_visibility(t, 0.05);
  CHECK(n.data[0] == Visibility::Unseen);  // nothing visible there
  CHECK(n.data[1] == Visibility::Seen);    // layout in front: envelope violation, counted as Seen
  CHECK(n.data[2] == Visibility::Unseen);

  const VisibilityCounts c = count_visibility(m);
  CHECK(c.seen == 1);
  CHECK(c.unseen == 1);
  CHECK(c.no_layout == 1);
  CHECK(c.total() == 3);
  CHECK(c.unseen_fraction() == doctest::Approx(0.5));
  CHECK(VisibilityCounts{}.unseen_fraction() == 0.0);
  CHECK_THROWS_AS(classify_visibility(s, 0.0), Error);

  for (const auto& spec : make_preset("tiny", 0)) {
    for (std::size_t i = 0; i < spec.cameras.size(); ++i) {
      const VisibilityCounts k = count_visibility(classify_visibility(oracle_envelope(spec, i), 0.05));
      CHECK(k.unseen == 0);
      CHECK(k.total() == 64u * 48u);
    }
  }
}
