#include <cmath>

#include "doctest.h"
#include "roomenv/core.hpp"
#include "roomenv/random.hpp"
#include "roomenv/synthgen.hpp"

using namespace roomenv;

namespace {

CameraModel intrinsics(double fx, double fy, double cx, double cy, int w, int h) {
  CameraModel c;
  c.fx = fx;
  c.fy = fy;
  c.cx = cx;
  c.cy = cy;
  c.width = w;
  c.height = h;
  return c;
}

}  // namespace

TEST_CASE("world_to_canonical_camera examples") {
  CameraModel cam = intrinsics(100, 100, 50, 50, 100, 100);
  CHECK(world_to_canonical_camera(Vec3(0, 0, 1), cam).isApprox(Vec3(0, 0, 1)));

  cam.convention = AxisConvention::YUpZBack;
  const Vec3 flipped = world_to_canonical_camera(Vec3(0, 0, -1), cam);
  CHECK(flipped.isApprox(Vec3(0, 0, 1)));

  // Translation-only pose: T = [I | (1,2,3)], so p=(1,2,3) maps to (2,4,6).
  cam.convention = AxisConvention::YDownZForward;
  cam.world_to_camera(0, 3) = 1;
  cam.world_to_camera(1, 3) = 2;
  cam.world_to_camera(2, 3) = 3;
  CHECK(world_to_canonical_camera(Vec3(1, 2, 3), cam).isApprox(Vec3(2, 4, 6)));
  // Inverse translation brings the point to the camera centre.
  cam.world_to_camera.block<3, 1>(0, 3) = -Vec3(1, 2, 3);
  CHECK(world_to_canonical_camera(Vec3(1, 2, 3), cam).norm() == doctest::Approx(0.0));
  CHECK(cam.center_world().isApprox(Vec3(1, 2, 3)));
}

TEST_CASE("project examples") {
  const CameraModel a = intrinsics(500, 500, 320.0, 240.0, 640, 480);
  const auto h = project(Vec3(0, 0, 2), a);
  REQUIRE(h);
  CHECK(*h == PixelHit{320, 240, 2.0});

  const CameraModel b = intrinsics(100, 100, 50, 50, 100, 100);
  const auto g = project(Vec3(0.5, 0, 1), b);
  REQUIRE(g);
  CHECK(*g == PixelHit{100, 50, 1.0});  // outside the image; the caller culls

  CHECK_FALSE(project(Vec3(0, 0, -1), b));
  CHECK_FALSE(project(Vec3(1, 1, 0), b));
}

TEST_CASE("pixel_ray examples") {
  const CameraModel a = intrinsics(100, 100, 50.5, 40.5, 100, 100);
  CHECK(pixel_ray(50, 40, a).direction.isApprox(Vec3(0, 0, 1)));

  const CameraModel b = intrinsics(1, 1, 0.5, 0.5, 1, 1);
  CHECK(pixel_ray(0, 0, b).direction.isApprox(Vec3(0, 0, 1)));

  const CameraModel c = intrinsics(100, 100, 50, 50, 100, 100);
  const Ray r = pixel_ray(99, 49, c);
  // Pixel centre (99.5, 49.5): x/z = 0.495 and y/z = -0.005.
  CHECK(r.direction.isApprox(Vec3(0.495, -0.005, 1.0).normalized(), 1e-12));
  CHECK(r.direction.x() / r.direction.z() == doctest::Approx(0.495).epsilon(1e-12));
  CHECK(r.direction.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.origin == Vec3::Zero());

  CHECK_THROWS_AS(pixel_ray(100, 0, c), Error);
  CHECK_THROWS_AS(pixel_ray(0, -1, c), Error);
}

TEST_CASE("point_to_ray_distance examples") {
  const Ray r{Vec3::Zero(), Vec3(0, 0, 1)};
  CHECK(point_to_ray_distance(Vec3(0, 0, 5), r) == 0.0);
  CHECK(point_to_ray_distance(Vec3(1, 0, 0), r) == doctest::Approx(1.0));
  CHECK(point_to_ray_distance(Vec3(1, 1, 1), r) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("camera validation") {
  CameraModel c = intrinsics(100, 100, 50, 50, 100, 100);
  CHECK_NOTHROW(c.validate());
  c.fx = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.fx = 100;
  c.world_to_camera(0, 0) = 1.1;
  CHECK_THROWS_AS(c.validate(), Error);
  c.world_to_camera = Mat4::Identity();
  c.world_to_camera(2, 2) = -1;  // reflection, det = -1
  CHECK_THROWS_AS(c.validate(), Error);
  c.world_to_camera = Mat4::Identity();
  c.height = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("property: projecting points along a pixel ray lands on that pixel") {
  Rng rng(11);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 1 + static_cast<int>(rng.below(200));
    const int h = 1 + static_cast<int>(rng.below(200));
    const CameraModel cam =
        intrinsics(rng.uniform(10, 500), rng.uniform(10, 500), rng.uniform(0, w), rng.uniform(0, h), w, h);
    for (int k = 0; k < 50; ++k) {
      const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(w)));
      const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
      const double t = std::exp(rng.uniform(-3, 4));
      const auto hit = project(t * pixel_ray(u, v, cam).direction, cam);
      REQUIRE(hit);
      CHECK(hit->u == u);
      CHECK(hit->v == v);
      ++checked;
    }
  }
  CHECK(checked == 10000);
}

TEST_CASE("property: convention change of basis is an involution") {
  const Mat3 b = convention_basis(AxisConvention::YUpZBack);
  CHECK((b * b - Mat3::Identity()).norm() < 1e-12);
  CHECK(convention_basis(AxisConvention::YDownZForward) == Mat3::Identity());
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const Vec3 p(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    CHECK((b * (b * p) - p).norm() < 1e-12);
  }
}

TEST_CASE("property: look_at places the target on the optical axis in both conventions") {
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const Vec3 eye(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const Vec3 target = eye + Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.5, 0.5)) + Vec3(0.1, 0, 0);
    for (auto conv : {AxisConvention::YDownZForward, AxisConvention::YUpZBack}) {
      CameraModel cam = intrinsics(100, 100, 50, 50, 100, 100);
      cam.convention = conv;
      cam.world_to_camera = look_at(eye, target, Vec3(0, 0, 1), conv);
      CHECK_NOTHROW(cam.validate());
      const Vec3 pc = world_to_canonical_camera(target, cam);
      CHECK(pc.z() == doctest::Approx((target - eye).norm()).epsilon(1e-9));
      CHECK(std::abs(pc.x()) < 1e-9);
      CHECK(std::abs(pc.y()) < 1e-9);
      // World up points towards -y (image up) in the canonical frame.
      const Vec3 up = cam.rotation_to_canonical() * Vec3(0, 0, 1);
      CHECK(up.y() <= 1e-9);
    }
  }
}

TEST_CASE("property: synthetic frames reproject onto their own pixels") {
  std::size_t valid = 0, same = 0;
  for (const auto& spec : make_preset("furnished", 0)) {
    for (std::size_t i = 0; i < spec.cameras.size(); ++i) {
      const FrameBundle f = render_frame(spec, i);
      for (int v = 0; v < f.camera.height; ++v) {
        for (int u = 0; u < f.camera.width; ++u) {
          const std::size_t px = f.valid.index(u, v);
          if (!f.valid.data[px]) continue;
          ++valid;
          const auto hit = project(world_to_canonical_camera(point_at(f.pointmap, px), f.camera), f.camera);
          if (hit && hit->u == u && hit->v == v) ++same;
        }
      }
    }
  }
  REQUIRE(valid > 0);
  CHECK(double(same) / double(valid) >= 0.999);
}

TEST_CASE("LayoutClassSet") {
  const LayoutClassSet s = LayoutClassSet::standard();
  CHECK(s.contains(labels::kWall));
  CHECK(s.contains(labels::kFloor));
  CHECK(s.contains(labels::kCeiling));
  CHECK(s.contains(labels::kDoor));
  CHECK(s.contains(labels::kWindow));
  CHECK_FALSE(s.contains(labels::kSofa));
  CHECK(s.ids().size() == 5);
  CHECK_THROWS_AS(LayoutClassSet(std::map<std::string, std::uint16_t>{}), Error);
  CHECK_THROWS_AS(LayoutClassSet(std::map<std::string, std::uint16_t>{{"wall", 1}, {"partition", 1}}), Error);
}

TEST_CASE("axis convention names") {
  CHECK(axis_convention_from_string(to_string(AxisConvention::YUpZBack)) == AxisConvention::YUpZBack);
  CHECK(axis_convention_from_string(to_string(AxisConvention::YDownZForward)) == AxisConvention::YDownZForward);
  CHECK_THROWS_AS(axis_convention_from_string("z_up"), Error);
}
