#include "rgbdseg/engine.hpp"
#include "rgbdseg/synth.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace rgbdseg;
namespace fs = std::filesystem;

namespace {

PipelineConfig config_for(Algorithm a, Mode m, std::size_t workers = 1) {
  PipelineConfig c;
  c.algorithm = a;
  c.mode = m;
  c.worker_count = workers;
  c.pbas.n = 8;
  return c;
}

synth::SynthParams small_scene(synth::Scenario s, int frames) {
  synth::SynthParams p;
  p.scenario = s;
  p.width = 40;
  p.height = 30;
  p.frames = frames;
  p.entry_frame = 10;
  p.object_width = 10;
  p.object_height = 12;
  return p.resolved();
}

} // namespace

TEST_CASE("algorithm and mode names") {
  CHECK(parse_algorithm("gmm") == Algorithm::gmm);
  CHECK(parse_algorithm("pbas") == Algorithm::pbas);
  CHECK(parse_mode("rgb_only") == Mode::rgb_only);
  CHECK(parse_mode("rgbd") == Mode::rgbd);
  CHECK(to_string(Algorithm::pbas) == "pbas");
  CHECK(to_string(Mode::rgb_only) == "rgb_only");
  CHECK_THROWS_AS(parse_algorithm("vibe"), std::invalid_argument);
  CHECK_THROWS_AS(parse_mode("depth"), std::invalid_argument);
}

TEST_CASE("rgb_only equals rgbd on all-invalid depth") {
  std::mt19937 rng(31);
  for (Algorithm a : {Algorithm::gmm, Algorithm::pbas}) {
    Pipeline rgb_only(config_for(a, Mode::rgb_only));
    Pipeline zero_depth(config_for(a, Mode::rgbd));
    for (int t = 0; t < 40; ++t) {
      auto f = test::random_frame(17, 13, rng, 20);
      const ForegroundMask m1 = rgb_only.process(f);
      for (auto& p : f.pixels) {
        p.d = 0;
      }
      REQUIRE(m1 == zero_depth.process(f));
    }
    CHECK(rgb_only.segmenter()->state_equals(*zero_depth.segmenter()));
  }
}

TEST_CASE("raw inputs are resampled and packed") {
  std::mt19937 rng(37);
  std::uniform_int_distribution<int> byte(0, 255);
  RgbImage rgb(16, 12);
  for (auto& v : rgb.data) {
    v = static_cast<std::uint8_t>(byte(rng));
  }
  DepthMap16 depth(8, 6);
  for (auto& v : depth.values) {
    v = static_cast<std::uint16_t>(byte(rng) * 257);
  }
  for (Algorithm a : {Algorithm::gmm, Algorithm::pbas}) {
    Pipeline raw(config_for(a, Mode::rgbd));
    Pipeline packed(config_for(a, Mode::rgbd));
    const auto frame = pack_frame(rgb, resample_depth(depth, 16, 12));
    for (int t = 0; t < 12; ++t) {
      REQUIRE(raw.process(rgb, &depth) == packed.process(frame));
    }
    CHECK(raw.stats().frames_processed == 12);
    CHECK(raw.stats().frame_seconds.size() == 12);
    CHECK(raw.stats().resample_seconds > 0.0);
    CHECK(raw.stats().resample_seconds <= raw.stats().total_seconds);
    CHECK(packed.stats().resample_seconds == 0.0);
  }
}

TEST_CASE("frame size may not change mid-sequence") {
  Pipeline p(config_for(Algorithm::gmm, Mode::rgbd));
  p.process(RgbdFrame(8, 8));
  CHECK_THROWS_AS(p.process(RgbdFrame(8, 9)), DimensionError);
}

TEST_CASE("worker count leaves masks unchanged") {
  std::mt19937 rng(41);
  for (Algorithm a : {Algorithm::gmm, Algorithm::pbas}) {
    Pipeline one(config_for(a, Mode::rgbd, 1));
    Pipeline four(config_for(a, Mode::rgbd, 4));
    for (int t = 0; t < 30; ++t) {
      const auto f = test::random_frame(21, 11, rng, 10);
      REQUIRE(one.process(f) == four.process(f));
    }
    CHECK(one.segmenter()->state_equals(*four.segmenter()));
  }
}

TEST_CASE("process_sequence") {
  test::TempDir dir("engine");
  const auto params = small_scene(synth::Scenario::colour_camouflage, 24);
  synth::write_sequence(dir.path(), params);

  SUBCASE("disk run matches in-memory run and writes masks") {
    for (Algorithm a : {Algorithm::gmm, Algorithm::pbas}) {
      auto config = config_for(a, Mode::rgbd);
      config.emit_masks = true;
      config.out_dir = dir.path() / ("masks_" + std::string(to_string(a)));
      const SequenceSource source(dir.path() / "rgb", dir.path() / "depth", dir.path() / "gt");

      Pipeline reference(config_for(a, Mode::rgbd));
      std::size_t calls = 0;
      const auto stats = process_sequence(source, config, [&](std::size_t i, const std::string& stem,
                                                              const ForegroundMask& m) {
        REQUIRE(i == calls++);
        REQUIRE(stem == source.entry(i).stem);
        const auto f = synth::render_frame(params, static_cast<int>(i));
        REQUIRE(m == reference.process(f.rgb, &f.depth));
      });
      CHECK(calls == 24);
      CHECK(stats.frames_processed == 24);
      CHECK(list_images(config.out_dir, {".png"}).size() == 24);
      CHECK(load_mask(config.out_dir / (source.entry(23).stem + ".png")) == reference.last_mask());
    }
  }

  SUBCASE("rgbd mode without depth is rejected") {
    const SequenceSource source(dir.path() / "rgb", std::nullopt);
    CHECK_THROWS_AS(process_sequence(source, config_for(Algorithm::gmm, Mode::rgbd)), std::invalid_argument);
    CHECK_NOTHROW(process_sequence(source, config_for(Algorithm::gmm, Mode::rgb_only)));
  }

  SUBCASE("a missing depth frame fails at pairing") {
    fs::remove(list_images(dir.path() / "depth", {".png"}).at(5));
    CHECK_THROWS_AS(SequenceSource(dir.path() / "rgb", dir.path() / "depth"), FormatError);
  }

  SUBCASE("an unreadable frame names its index") {
    const auto victim = list_images(dir.path() / "rgb", {".png"}).at(7);
    std::ofstream(victim, std::ios::binary | std::ios::trunc) << "not a png";
    const SequenceSource source(dir.path() / "rgb", dir.path() / "depth");
    try {
      process_sequence(source, config_for(Algorithm::pbas, Mode::rgbd));
      FAIL("expected SequenceError");
    } catch (const SequenceError& e) {
      CHECK(e.index() == 7);
      CHECK(std::string(e.what()).find("frame 7") != std::string::npos);
    }
  }
}
