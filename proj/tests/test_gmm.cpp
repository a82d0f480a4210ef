#include "rgbdseg/gmm_rgbd.hpp"
#include "rgbdseg/worker_pool.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace rgbdseg;

namespace {

// Written out independently of the library's density().
double density_reference(double d2, double v, double s) {
  return s * std::exp(-d2 / (2.0 * v)) / (2.0 * std::numbers::pi * v);
}

GmmParams defaults() { return GmmParams{}; }

} // namespace

TEST_CASE("density") {
  CHECK(density(0.0, 100.0, 10000.0) == doctest::Approx(15.915494309189533).epsilon(1e-14));
  for (double v : {1.0, 7.5, 225.0, 2500.0}) {
    CHECK(density(0.0, v, 10000.0) == doctest::Approx(10000.0 / (2.0 * std::numbers::pi * v)).epsilon(1e-15));
    CHECK(density(100.0 * v, v, 10000.0) < 10000.0 / (2.0 * std::numbers::pi * v) * std::exp(-49.9));
  }
  SUBCASE("strictly decreasing in distance, peak at the mean") {
    for (double v : {1.0, 50.0, 900.0}) {
      double prev = density(0.0, v, 10000.0);
      for (double d = 0.5; d < 60.0; d += 0.5) {
        const double cur = density(d * d, v, 10000.0);
        if (prev > 0.0) {
          CHECK(cur < prev);
        }
        prev = cur;
      }
    }
  }
  SUBCASE("vector form uses the Euclidean distance over channels") {
    const RgbGaussian g{1.0, {10.0, 20.0, 30.0}, 50.0};
    const std::array<double, 3> x{13.0, 24.0, 30.0}; // distance 5
    CHECK(density(x, g, 10000.0) == doctest::Approx(density_reference(25.0, 50.0, 10000.0)).epsilon(1e-15));
  }
}

TEST_CASE("match_component") {
  const double lambda = 2.5;
  SUBCASE("single component at the mean") {
    const std::vector<RgbGaussian> m{{1.0, {5, 5, 5}, 100.0}};
    CHECK(match_component<3>({5, 5, 5}, m, lambda) == std::optional<std::size_t>(0));
  }
  SUBCASE("outside the gate everywhere") {
    const std::vector<RgbGaussian> m{{0.5, {0, 0, 0}, 100.0}, {0.5, {200, 200, 200}, 100.0}};
    // lambda * sigma = 25, so a distance of 25 is already outside.
    CHECK_FALSE(match_component<3>({25, 0, 0}, m, lambda).has_value());
    CHECK(match_component<3>({24.9, 0, 0}, m, lambda) == std::optional<std::size_t>(0));
  }
  SUBCASE("two matching components: weight decides, ties go to the lower index") {
    for (int order = 0; order < 2; ++order) {
      std::vector<DepthGaussian> m{{0.7, {10}, 100.0}, {0.3, {12}, 100.0}};
      if (order == 1) {
        std::swap(m[0], m[1]);
      }
      const std::size_t heavy = order == 0 ? 0 : 1;
      CHECK(match_component<1>({11}, m, lambda) == std::optional<std::size_t>(heavy));
    }
    const std::vector<DepthGaussian> tie{{0.5, {10}, 100.0}, {0.5, {12}, 100.0}};
    CHECK(match_component<1>({11}, tie, lambda) == std::optional<std::size_t>(0));
  }
  SUBCASE("zero-weight slots never match") {
    const std::vector<DepthGaussian> m{{0.0, {10}, 100.0}, {1.0, {80}, 100.0}};
    CHECK_FALSE(match_component<1>({10}, m, lambda).has_value());
  }
}

TEST_CASE("mixture_score") {
  GmmParams p = defaults();
  const std::vector<DepthGaussian> m{{0.6, {10}, 100.0}, {0.3, {40}, 400.0}, {0.1, {90}, 25.0}};
  const std::array<double, 1> x{20};
  SUBCASE("full mixture when background_ratio >= 1") {
    p.background_ratio = 1.0;
    double expected = 0.0;
    for (const auto& g : m) {
      expected += g.weight * density_reference((x[0] - g.mean[0]) * (x[0] - g.mean[0]), g.variance, p.s);
    }
    CHECK(mixture_score<1>(x, m, p) == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("background subset by weight / stddev") {
    // Fitness: 0.6/10 = 0.06, 0.3/20 = 0.015, 0.1/5 = 0.02. Ranked 0, 2, 1.
    p.background_ratio = 0.65; // 0.6 does not exceed it, 0.6 + 0.1 does
    const double expected = 0.6 * density_reference(100.0, 100.0, p.s) + 0.1 * density_reference(4900.0, 25.0, p.s);
    CHECK(mixture_score<1>(x, m, p) == doctest::Approx(expected).epsilon(1e-14));
    p.background_ratio = 0.5;
    CHECK(mixture_score<1>(x, m, p) == doctest::Approx(0.6 * density_reference(100.0, 100.0, p.s)).epsilon(1e-14));
  }
}

TEST_CASE("classify_pixel") {
  const GmmParams p = defaults();

  SUBCASE("dominant component, invalid depth: background") {
    GmmPixelModel m(p);
    seed_mixture<3>({100, 120, 140}, m.rgb, p);
    const auto d = classify_pixel(RgbdPixel{100, 120, 140, 0}, m.view(), p);
    CHECK_FALSE(d.foreground);
    CHECK_FALSE(d.depth_used);
    CHECK(d.score == doctest::Approx(density_reference(0.0, p.var_init, p.s)));
  }

  SUBCASE("colour matches, depth far away: product below tau") {
    GmmParams q = p;
    q.var_init = 100.0;
    GmmPixelModel m(q);
    seed_mixture<3>({100, 100, 100}, m.rgb, q);
    seed_mixture<1>({50}, m.depth, q);
    const RgbdPixel x{100, 100, 100, 150};
    const double expected = density_reference(0.0, 100.0, 10000.0) * density_reference(100.0 * 100.0, 100.0, 10000.0);
    const auto d = classify_pixel(x, m.view(), q);
    CHECK(d.depth_used);
    CHECK(d.score == doctest::Approx(expected).epsilon(1e-12));
    CHECK(d.score < q.tau);
    CHECK(d.foreground);

    // Same colour with matching depth is background.
    CHECK_FALSE(classify_pixel(RgbdPixel{100, 100, 100, 50}, m.view(), q).foreground);
  }

  SUBCASE("invalid depth equals the colour-only classifier on the same state") {
    std::mt19937 rng(5);
    GmmPixelModel m(p);
    for (int i = 0; i < 200; ++i) {
      const auto f = test::random_frame(1, 1, rng, 30);
      update_pixel(f.pixels[0], m.view(), p);
    }
    for (int i = 0; i < 200; ++i) {
      auto x = test::random_frame(1, 1, rng).pixels[0];
      x.d = 0;
      const double rgb_only = mixture_score<3>(rgb_vector(x), m.rgb, p);
      const auto d = classify_pixel(x, m.view(), p);
      CHECK(d.score == rgb_only);
      CHECK(d.foreground == !(rgb_only >= p.tau));
    }
  }

  SUBCASE("unseeded depth sub-model falls back to colour") {
    GmmPixelModel m(p);
    seed_mixture<3>({1, 2, 3}, m.rgb, p);
    const auto d = classify_pixel(RgbdPixel{1, 2, 3, 99}, m.view(), p);
    CHECK_FALSE(d.depth_used);
    CHECK_FALSE(d.foreground);
  }

  SUBCASE("unseeded model reports background") {
    const GmmPixelModel m(p);
    CHECK_FALSE(classify_pixel(RgbdPixel{9, 9, 9, 9}, m.view(), p).foreground);
  }
}

TEST_CASE("update_mixture") {
  GmmParams p = defaults();

  SUBCASE("one matched step from (0.5, 0.5)") {
    std::vector<DepthGaussian> m{{0.5, {10}, 100.0}, {0.5, {200}, 100.0}};
    update_mixture<1>({10}, m, p);
    CHECK(m[0].weight == doctest::Approx(0.5005).epsilon(1e-15));
    CHECK(m[1].weight == doctest::Approx(0.4995).epsilon(1e-15));
    CHECK(m[0].mean[0] == doctest::Approx(10.0));
    // d = 0, so the variance shrinks by (1 - alpha).
    CHECK(m[0].variance == doctest::Approx(99.9));
    CHECK(m[1].variance == 100.0);
  }

  SUBCASE("mean and variance blend at rate alpha") {
    p.alpha = 0.1;
    std::vector<DepthGaussian> m{{1.0, {10}, 100.0}};
    update_mixture<1>({16}, m, p);
    CHECK(m[0].mean[0] == doctest::Approx(0.9 * 10 + 0.1 * 16));
    CHECK(m[0].variance == doctest::Approx(0.9 * 100 + 0.1 * 36));
    CHECK(m[0].weight == doctest::Approx(1.0));
  }

  SUBCASE("no match replaces the weakest component") {
    std::vector<DepthGaussian> m{{0.6, {10}, 100.0}, {0.3, {60}, 100.0}, {0.1, {110}, 100.0}};
    update_mixture<1>({220}, m, p);
    const double a = p.alpha;
    const double w0 = 0.6 * (1 - a);
    const double w1 = 0.3 * (1 - a);
    const double total = w0 + w1 + p.w_init;
    CHECK(m[2].mean[0] == 220.0);
    CHECK(m[2].variance == p.var_init);
    CHECK(m[2].weight == doctest::Approx(p.w_init / total).epsilon(1e-14));
    CHECK(m[0].weight == doctest::Approx(w0 / total).epsilon(1e-14));
    CHECK(m[1].weight == doctest::Approx(w1 / total).epsilon(1e-14));
  }

  SUBCASE("variance floor") {
    p.alpha = 0.5;
    std::vector<DepthGaussian> m{{1.0, {10}, 1.5}};
    update_mixture<1>({10}, m, p);
    CHECK(m[0].variance == p.var_floor);
  }

  SUBCASE("constant input drives the matched weight monotonically to 1") {
    std::vector<RgbGaussian> m(7);
    seed_mixture<3>({50, 60, 70}, m, p);
    update_mixture<3>({250, 0, 0}, m, p); // second component appears
    double prev = m[0].weight;
    REQUIRE(prev < 1.0);
    for (int i = 0; i < 3000; ++i) {
      update_mixture<3>({50, 60, 70}, m, p);
      CHECK(m[0].weight > prev);
      prev = m[0].weight;
    }
    CHECK(prev > 0.99);
  }
}

TEST_CASE("weights stay normalised and variances floored under random input") {
  const GmmParams p = defaults();
  std::mt19937 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    GmmPixelModel m(p);
    for (int t = 0; t < 400; ++t) {
      const auto x = test::random_frame(1, 1, rng, 25).pixels[0];
      update_pixel(x, m.view(), p);
      double rgb_sum = 0.0;
      for (const auto& g : m.rgb) {
        rgb_sum += g.weight;
        REQUIRE(g.variance >= p.var_floor);
        REQUIRE(g.weight >= 0.0);
      }
      REQUIRE(std::abs(rgb_sum - 1.0) <= 1e-9);
      if (is_seeded<1>(m.depth)) {
        double d_sum = 0.0;
        for (const auto& g : m.depth) {
          d_sum += g.weight;
          REQUIRE(g.variance >= p.var_floor);
        }
        REQUIRE(std::abs(d_sum - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("update_pixel leaves the depth mixture alone on invalid depth") {
  const GmmParams p = defaults();
  GmmPixelModel m(p);
  update_pixel(RgbdPixel{1, 2, 3, 40}, m.view(), p);
  const auto depth_before = m.depth;
  update_pixel(RgbdPixel{1, 2, 3, 0}, m.view(), p);
  CHECK(m.depth == depth_before);
  CHECK(m.rgb[0].weight == doctest::Approx(1.0));
}

TEST_CASE("segment_frame_gmm") {
  const GmmParams p = defaults();

  SUBCASE("1x1 frame equals scalar classify + update") {
    std::mt19937 rng(9);
    GmmGrid grid(1, 1, p);
    GmmPixelModel scalar(p);
    WorkerPool pool(1);
    ForegroundMask mask;
    for (int t = 0; t < 300; ++t) {
      const auto f = test::random_frame(1, 1, rng, 10);
      segment_frame_gmm(f, grid, mask, pool);
      const auto d = classify_pixel(f.pixels[0], scalar.view(), p);
      update_pixel(f.pixels[0], scalar.view(), p);
      REQUIRE(mask.is_foreground(0) == d.foreground);
      const auto g = grid.pixel(0);
      REQUIRE(std::equal(g.rgb.begin(), g.rgb.end(), scalar.rgb.begin()));
      REQUIRE(std::equal(g.depth.begin(), g.depth.end(), scalar.depth.begin()));
    }
  }

  SUBCASE("thread counts 1 and 8 give identical masks and models") {
    std::mt19937 rng(21);
    GmmGrid a(33, 17, p);
    GmmGrid b(33, 17, p);
    WorkerPool one(1);
    WorkerPool eight(8);
    ForegroundMask ma;
    ForegroundMask mb;
    for (int t = 0; t < 40; ++t) {
      const auto f = test::random_frame(33, 17, rng, 15);
      segment_frame_gmm(f, a, ma, one);
      segment_frame_gmm(f, b, mb, eight);
      REQUIRE(ma == mb);
    }
    CHECK(a == b);
  }

  SUBCASE("burn-in on a constant frame gives an empty mask") {
    std::mt19937 rng(2);
    const auto f = test::random_frame(16, 12, rng, 20);
    GmmGrid grid(16, 12, p);
    WorkerPool pool(2);
    ForegroundMask mask;
    for (int t = 0; t < 100; ++t) {
      segment_frame_gmm(f, grid, mask, pool);
    }
    segment_frame_gmm(f, grid, mask, pool);
    CHECK(mask.foreground_count() == 0);
  }

  SUBCASE("dimension mismatch") {
    GmmGrid grid(4, 4, p);
    WorkerPool pool(1);
    ForegroundMask mask;
    CHECK_THROWS_AS(segment_frame_gmm(RgbdFrame(4, 3), grid, mask, pool), DimensionError);
  }
}

TEST_CASE("GmmParams validation") {
  GmmParams p;
  CHECK_NOTHROW(p.validate());
  p.k_rgb = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = GmmParams{};
  p.alpha = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = GmmParams{};
  p.var_init = -1.0;
  CHECK_THROWS_AS(GmmGrid(2, 2, p), std::invalid_argument);
}
