#include "rgbdseg/synth.hpp"

#include "test_util.hpp"

#include <doctest.h>

using namespace rgbdseg;
using namespace rgbdseg::synth;

namespace {

SynthParams scene(Scenario s) {
  SynthParams p;
  p.scenario = s;
  p.width = 64;
  p.height = 40;
  p.frames = 60;
  p.entry_frame = 5;
  p.object_width = 12;
  p.object_height = 10;
  p.speed = 3;
  return p.resolved();
}

} // namespace

TEST_CASE("scenario names") {
  for (auto name : kScenarioNames) {
    CHECK(to_string(parse_scenario(name)) == name);
  }
  try {
    parse_scenario("fog");
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("illumination_ramp") != std::string::npos);
  }
}

TEST_CASE("scenario defaults") {
  CHECK(*scene(Scenario::colour_camouflage).depth_offset == 80);
  CHECK(*scene(Scenario::depth_camouflage).depth_offset == 2);
  CHECK(*scene(Scenario::static_scene).colour_noise == 0);
  CHECK(*scene(Scenario::shadow).colour_noise == 2);
  SynthParams bad;
  bad.object_width = 500;
  CHECK_THROWS_AS(bad.resolved(), std::invalid_argument);
}

TEST_CASE("object stays inside the frame and ground truth marks exactly it") {
  for (auto s : {Scenario::colour_camouflage, Scenario::shadow, Scenario::depth_camouflage}) {
    const auto p = scene(s);
    for (int t = 0; t < p.frames; ++t) {
      const auto rect = object_rect(p, t);
      REQUIRE(rect.has_value() == (t >= p.entry_frame));
      const auto f = render_frame(p, t);
      std::size_t fg = 0;
      for (int y = 0; y < p.height; ++y) {
        for (int x = 0; x < p.width; ++x) {
          const bool inside = rect && rect->contains(x, y);
          REQUIRE((f.gt.labels[f.depth.index(x, y)] == GtLabel::foreground) == inside);
          fg += inside ? 1 : 0;
        }
      }
      if (rect) {
        REQUIRE(rect->x >= 0);
        REQUIRE(rect->x + rect->width <= p.width);
        REQUIRE(fg == static_cast<std::size_t>(p.object_width * p.object_height));
      }
    }
  }
}

TEST_CASE("colour camouflage hides the object in colour only") {
  const auto p = scene(Scenario::colour_camouflage);
  const auto f = render_frame(p, 20);
  const auto rect = *object_rect(p, 20);
  const int x = rect.x + 1;
  const int y = rect.y + 1;
  const auto bg = background_at(x, y, p.width, p.height);
  const std::size_t i = f.depth.index(x, y);
  for (int c = 0; c < 3; ++c) {
    const int expected = c == 0 ? bg.r : c == 1 ? bg.g : bg.b;
    CHECK(std::abs(f.rgb.data[3 * i + static_cast<std::size_t>(c)] - expected) <= *p.colour_noise);
  }
  CHECK(std::abs(scale_depth_16_to_8(f.depth.values[i]) - (bg.d - 80)) <= *p.depth_noise);
}

TEST_CASE("static scene is constant and noise-free") {
  const auto p = scene(Scenario::static_scene);
  const auto a = render_frame(p, 0);
  const auto b = render_frame(p, 59);
  CHECK(a.rgb.data == b.rgb.data);
  CHECK(a.depth.values == b.depth.values);
  for (auto l : b.gt.labels) {
    REQUIRE(l == GtLabel::background);
  }
}

TEST_CASE("invalid depth fraction") {
  auto p = scene(Scenario::shadow);
  p.invalid_fraction = 0.25;
  const auto f = render_frame(p, 3);
  std::size_t zeros = 0;
  for (auto v : f.depth.values) {
    zeros += v == 0 ? 1 : 0;
  }
  const double share = static_cast<double>(zeros) / static_cast<double>(f.depth.values.size());
  CHECK(share > 0.2);
  CHECK(share < 0.3);
}

TEST_CASE("write_sequence round-trips through the loaders") {
  test::TempDir dir("synth");
  auto p = scene(Scenario::shadow);
  p.frames = 4;
  write_sequence(dir.path(), p);
  const SequenceSource source(dir.path() / "rgb", dir.path() / "depth", dir.path() / "gt");
  REQUIRE(source.size() == 4);
  const auto f = render_frame(p, 3);
  CHECK(load_rgb(source.entry(3).rgb).data == f.rgb.data);
  CHECK(load_depth(source.entry(3).depth).values == f.depth.values);
  CHECK(load_ground_truth(*source.ground_truth_for(3)) == f.gt);
}
