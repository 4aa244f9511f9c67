#include <cmath>

#include "doctest.h"
#include "roomenv/envelope.hpp"
#include "roomenv/synthgen.hpp"

using namespace roomenv;

namespace {

// 4 x 3 x 2.5 room, camera in the middle of the y=0 side looking at the far wall
// y=3. Odd image size puts the optical axis through the centre of pixel (16,12).
SceneSpec box_room() {
  SceneSpec s;
  s.id = "box";
  s.room_size = Vec3(4.0, 3.0, 2.5);
  s.cameras.push_back(camera_in_room(s, Vec3(2, 0.5, 1.25), Vec3(2, 3, 1.25), 33, 25, 20, 20, 16.5, 12.5));
  return s;
}

double centre_depth(const FrameBundle& f) {
  const std::size_t px = f.valid.index(16, 12);
  REQUIRE(f.valid.data[px]);
  return world_to_canonical_camera(point_at(f.pointmap, px), f.camera).z();
}

}  // namespace

TEST_CASE("empty room renders every pixel") {
  const SceneSpec s = box_room();
  const FrameBundle f = render_frame(s, 0);
  CHECK(std::count(f.valid.data.begin(), f.valid.data.end(), 1) == 33 * 25);
  for (std::size_t px = 0; px < f.labels.data.size(); ++px) {
    CHECK(LayoutClassSet::standard().contains(f.labels.data[px]));
    CHECK(std::abs(point_at(f.normals, px).norm() - 1.0) < 1e-6);
  }
  CHECK(centre_depth(f) == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(f.labels.data[f.valid.index(16, 12)] == labels::kWall);
  CHECK(f.labels.data[f.valid.index(16, 24)] == labels::kFloor);
  CHECK(f.labels.data[f.valid.index(16, 0)] == labels::kCeiling);
}

TEST_CASE("facing a wall at distance d") {
  for (double d : {0.5, 1.0, 2.0, 2.9}) {
    SceneSpec s = box_room();
    s.cameras[0] =
        camera_in_room(s, Vec3(2, 3.0 - d, 1.25), Vec3(2, 3, 1.25), 33, 25, 20, 20, 16.5, 12.5);
    CHECK(centre_depth(render_frame(s, 0)) == doctest::Approx(d).epsilon(1e-6));
  }
}

TEST_CASE("cuboid on the optical axis") {
  SceneSpec s = box_room();
  s.furniture.push_back(Cuboid{labels::kCabinet, Vec3(2, 2, 1.25), Vec3(0.6, 0.6, 0.6), 0.0});
  const FrameBundle f = render_frame(s, 0);
  CHECK(centre_depth(f) == doctest::Approx(1.2).epsilon(1e-6));
  CHECK(f.labels.data[f.valid.index(16, 12)] == labels::kCabinet);
  const Vec3 n = point_at(f.normals, f.valid.index(16, 12));
  CHECK((n - Vec3(0, -1, 0)).norm() < 1e-6);

  // Rotated about z by 90 degrees the same cuboid has the same footprint.
  s.furniture[0].yaw = std::numbers::pi / 2;
  CHECK(centre_depth(render_frame(s, 0)) == doctest::Approx(1.2).epsilon(1e-6));
}

TEST_CASE("panels carry their label on the wall") {
  SceneSpec s = box_room();
  s.panels.push_back(Panel{labels::kDoor, RoomFace::YMax, {1.5, 0.8, 2.5, 1.8}});
  const FrameBundle f = render_frame(s, 0);
  CHECK(f.labels.data[f.valid.index(16, 12)] == labels::kDoor);
  CHECK(centre_depth(f) == doctest::Approx(2.5).epsilon(1e-6));
}

TEST_CASE("layout oracle in an empty room equals the render") {
  SceneSpec s = box_room();
  s.cameras.push_back(camera_in_room(s, Vec3(3.5, 2.5, 1.6), Vec3(0.5, 0.5, 0.8), 33, 25, 20, 20, 16.5, 12.5,
                                     AxisConvention::YUpZBack));
  for (std::size_t i = 0; i < s.cameras.size(); ++i) {
    const FrameBundle f = render_frame(s, i);
    const LayoutOracle o = layout_oracle(s, i);
    CHECK(o.valid == f.valid);
    CHECK(o.label == f.labels);
    for (std::size_t px = 0; px < f.valid.data.size(); ++px) {
      CHECK((point_at(o.pointmap, px) - point_at(f.pointmap, px)).norm() < 1e-6);
      CHECK(o.visibility.data[px] == Visibility::Seen);
    }
  }
}

TEST_CASE("hidden wall becomes valid only when another camera sees it") {
  SceneSpec s = box_room();
  // 0.6 m gap between the cuboid and the far wall.
  s.furniture.push_back(Cuboid{labels::kCabinet, Vec3(2, 2.3, 1.25), Vec3(0.6, 0.2, 0.6), 0.0});
  const std::size_t centre = 12 * 33 + 16;

  const LayoutOracle alone = layout_oracle(s, 0);
  CHECK_FALSE(alone.valid.data[centre]);
  CHECK(alone.visibility.data[centre] == Visibility::NoLayout);

  s.cameras.push_back(camera_in_room(s, Vec3(0.4, 1.0, 1.25), Vec3(2, 3, 1.25), 33, 25, 20, 20, 16.5, 12.5));
  CHECK(point_visible_from(s, s.cameras[1], s.room_to_world(Vec3(2, 3, 1.25))));
  CHECK_FALSE(point_visible_from(s, s.cameras[0], s.room_to_world(Vec3(2, 3, 1.25))));
  const LayoutOracle both = layout_oracle(s, 0);
  REQUIRE(both.valid.data[centre]);
  CHECK(world_to_canonical_camera(point_at(both.pointmap, centre), s.cameras[0]).z() ==
        doctest::Approx(2.5).epsilon(1e-6));
  CHECK(both.visibility.data[centre] == Visibility::Unseen);

  // Flush against the wall: nothing behind it is observable from either camera.
  s.furniture[0] = Cuboid{labels::kCabinet, Vec3(2, 2.8, 1.25), Vec3(0.6, 0.4, 0.6), 0.0};
  CHECK_FALSE(layout_oracle(s, 0).valid.data[centre]);
}

TEST_CASE("scene JSON round trip and validation") {
  for (const auto& spec : make_preset("furnished", 4)) {
    const std::string text = scene_to_json(spec);
    const SceneSpec back = scene_from_json(text);
    CHECK(scene_to_json(back) == text);
    CHECK(render_frame(back, 1).pointmap == render_frame(spec, 1).pointmap);
  }

  const std::string ok = R"({"id":"r","room":{"size":[4,3,2.5]},
    "cameras":[{"width":8,"height":6,"fx":10,"position":[1,1,1],"look_at":[3,2,1]}]})";
  CHECK(scene_from_json(ok).cameras.size() == 1);

  auto bad = [](const std::string& text) {
    CHECK_THROWS_WITH_AS(scene_from_json(text), doctest::Contains("BadSpec"), Error);
  };
  bad("{not json");
  bad(R"({"cameras":[]})");
  bad(R"({"room":{"size":[4,3,2.5]},"cameras":[]})");
  bad(R"({"room":{"size":[4,-3,2.5]},"cameras":[{"width":8,"height":6,"fx":10,"position":[1,1,1],"look_at":[3,2,1]}]})");
  bad(R"({"room":{"size":[4,3,2.5]},"cameras":[{"width":8,"height":6,"fx":10,"position":[5,1,1],"look_at":[3,2,1]}]})");
  bad(R"({"room":{"size":[4,3,2.5]},"furniture":[{"label":7,"center":[3.9,1,0.5],"size":[1,1,1]}],
    "cameras":[{"width":8,"height":6,"fx":10,"position":[1,1,1],"look_at":[3,2,1]}]})");
  bad(R"({"room":{"size":[4,3,2.5]},"furniture":[{"label":7,"center":[1,1,1],"size":[1,1,1]}],
    "cameras":[{"width":8,"height":6,"fx":10,"position":[1,1,1],"look_at":[3,2,1]}]})");
  bad(R"({"room":{"size":[4,3,2.5]},"cameras":[{"width":8,"height":6,"fx":10,"position":[1,1,1],"look_at":[3,2,1],
    "convention":"z_up"}]})");
}

TEST_CASE("determinism") {
  for (const char* name : {"tiny", "furnished"}) {
    const auto a = make_preset(name, 9);
    const auto b = make_preset(name, 9);
    const auto c = make_preset(name, 10);
    REQUIRE(a.size() == 3);
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(scene_to_json(a[k]) == scene_to_json(b[k]));
      CHECK(scene_to_json(a[k]) != scene_to_json(c[k]));
      REQUIRE(a[k].cameras.size() == 4);
      const FrameBundle one = render_frame(a[k], 2, 1);
      const FrameBundle four = render_frame(a[k], 2, 4);
      CHECK(one.pointmap == four.pointmap);
      CHECK(one.valid == four.valid);
      CHECK(one.labels == four.labels);
      CHECK(one.rgb == four.rgb);
    }
  }
  CHECK(make_preset("tiny", 0)[0].furniture.empty());
  CHECK_FALSE(make_preset("furnished", 0)[0].furniture.empty());
  CHECK_THROWS_AS(make_preset("huge", 0), Error);
}
