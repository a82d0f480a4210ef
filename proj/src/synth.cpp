#include "rgbdseg/synth.hpp"

#include "rgbdseg/pixel_rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace rgbdseg::synth {

namespace {

constexpr int kMargin = 8;
constexpr RgbdPixel kObjectColour{210, 70, 60, 0};
constexpr double kShadowGain = 0.55;

// Draw indices for the per-pixel noise generator.
constexpr std::uint32_t kDrawDepthNoise = 3;
constexpr std::uint32_t kDrawInvalid = 4;

std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

int noise(const SynthParams& p, int x, int y, int t, std::uint32_t draw, int amplitude) {
  if (amplitude <= 0) {
    return 0;
  }
  const double u = pixel_rng(p.seed, static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                             static_cast<std::uint32_t>(t), draw);
  return static_cast<int>(u * (2 * amplitude + 1)) - amplitude;
}

} // namespace

std::string_view to_string(Scenario s) { return kScenarioNames[static_cast<std::size_t>(s)]; }

Scenario parse_scenario(std::string_view name) {
  for (std::size_t i = 0; i < kScenarioNames.size(); ++i) {
    if (kScenarioNames[i] == name) {
      return static_cast<Scenario>(i);
    }
  }
  std::string valid;
  for (auto n : kScenarioNames) {
    valid += valid.empty() ? "" : ", ";
    valid += n;
  }
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'; valid scenarios: " + valid);
}

SynthParams SynthParams::resolved() const {
  SynthParams p = *this;
  const bool is_static = scenario == Scenario::static_scene;
  if (!p.colour_noise) p.colour_noise = is_static ? 0 : 2;
  if (!p.depth_noise) p.depth_noise = is_static ? 0 : 1;
  if (!p.depth_offset) {
    switch (scenario) {
    case Scenario::colour_camouflage: p.depth_offset = 80; break;
    case Scenario::depth_camouflage: p.depth_offset = 2; break;
    default: p.depth_offset = 60; break;
    }
  }
  auto fail = [](const std::string& what) { throw std::invalid_argument("synth: " + what); };
  if (p.width <= 0 || p.height <= 0) fail("width and height must be positive");
  if (p.frames <= 0) fail("frames must be positive");
  if (p.entry_frame < 0) fail("entry_frame must be >= 0");
  if (p.object_width <= 0 || p.object_height <= 0 || p.object_width > p.width || p.object_height > p.height)
    fail("object must fit inside the frame");
  if (p.speed < 0) fail("speed must be >= 0");
  if (*p.depth_offset < 0 || *p.depth_offset > 150) fail("depth_offset must be in [0, 150]");
  if (*p.colour_noise < 0 || *p.depth_noise < 0) fail("noise amplitudes must be >= 0");
  if (p.invalid_fraction < 0.0 || p.invalid_fraction > 1.0) fail("invalid_fraction must be in [0, 1]");
  return p;
}

std::optional<Rect> object_rect(const SynthParams& params, int t) {
  if (params.scenario == Scenario::static_scene || t < params.entry_frame) {
    return std::nullopt;
  }
  const int travel = std::max(params.width - params.object_width - 2 * kMargin, 0);
  const int left_limit = std::min(kMargin, params.width - params.object_width);
  int offset = 0;
  if (travel > 0) {
    const long long s = static_cast<long long>(params.speed) * (t - params.entry_frame) % (2LL * travel);
    offset = static_cast<int>(s <= travel ? s : 2LL * travel - s);
  }
  return Rect{left_limit + offset, (params.height - params.object_height) / 2, params.object_width,
              params.object_height};
}

std::optional<Rect> shadow_rect(const SynthParams& params, int t) {
  if (params.scenario != Scenario::shadow) {
    return std::nullopt;
  }
  const auto obj = object_rect(params, t);
  if (!obj) {
    return std::nullopt;
  }
  const int x0 = obj->x + obj->width;
  const int x1 = std::min(x0 + std::max(obj->width / 2, 1), params.width);
  if (x1 <= x0) {
    return std::nullopt;
  }
  return Rect{x0, obj->y, x1 - x0, obj->height};
}

RgbdPixel background_at(int x, int y, int width, int height) {
  (void)width;
  const double fx = x;
  const double fy = y;
  return RgbdPixel{clamp8(90.0 + 50.0 * std::sin(fx * 0.11)), clamp8(110.0 + 40.0 * std::cos(fy * 0.13)),
                   clamp8(130.0 + 35.0 * std::sin((fx + fy) * 0.07)),
                   clamp8(200.0 - 40.0 * fy / static_cast<double>(height))};
}

SynthFrame render_frame(const SynthParams& p, int t) {
  SynthFrame f{RgbImage(p.width, p.height), DepthMap16(p.width, p.height), GroundTruthMask(p.width, p.height)};
  const auto obj = object_rect(p, t);
  const auto shadow = shadow_rect(p, t);
  const double gain = p.scenario == Scenario::illumination_ramp ? p.ramp_slope * t : 0.0;
  const int cn = *p.colour_noise;
  const int dn = *p.depth_noise;

  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      const std::size_t i = f.depth.index(x, y);
      const RgbdPixel bg = background_at(x, y, p.width, p.height);
      double r = bg.r;
      double g = bg.g;
      double b = bg.b;
      int d = bg.d;

      const bool in_object = obj && obj->contains(x, y);
      if (in_object) {
        if (p.scenario != Scenario::colour_camouflage) {
          r = kObjectColour.r;
          g = kObjectColour.g;
          b = kObjectColour.b;
        }
        d = bg.d - *p.depth_offset;
        f.gt.labels[i] = GtLabel::foreground;
      } else if (shadow && shadow->contains(x, y)) {
        r *= kShadowGain;
        g *= kShadowGain;
        b *= kShadowGain;
      }

      f.rgb.data[3 * i] = clamp8(r + gain + noise(p, x, y, t, 0, cn));
      f.rgb.data[3 * i + 1] = clamp8(g + gain + noise(p, x, y, t, 1, cn));
      f.rgb.data[3 * i + 2] = clamp8(b + gain + noise(p, x, y, t, 2, cn));

      const int d8 = std::clamp(d + noise(p, x, y, t, kDrawDepthNoise, dn), 1, 255);
      const bool invalid =
          p.invalid_fraction > 0.0 &&
          pixel_rng(p.seed, static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                    static_cast<std::uint32_t>(t), kDrawInvalid) < p.invalid_fraction;
      f.depth.values[i] = invalid ? 0 : static_cast<std::uint16_t>(d8 * 257);
    }
  }
  return f;
}

void write_sequence(const std::filesystem::path& root, const SynthParams& params) {
  const SynthParams p = params.resolved();
  const auto rgb_dir = root / "rgb";
  const auto depth_dir = root / "depth";
  const auto gt_dir = root / "gt";
  std::filesystem::create_directories(rgb_dir);
  std::filesystem::create_directories(depth_dir);
  std::filesystem::create_directories(gt_dir);

  for (int t = 0; t < p.frames; ++t) {
    char stem[16];
    std::snprintf(stem, sizeof(stem), "%06d", t);
    const std::string name = std::string(stem) + ".png";
    const SynthFrame f = render_frame(p, t);
    write_png_rgb8(rgb_dir / name, p.width, p.height, f.rgb.data);
    write_png_gray16(depth_dir / name, p.width, p.height, f.depth.values);
    std::vector<std::uint8_t> gt(f.gt.labels.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
      gt[i] = f.gt.labels[i] == GtLabel::foreground ? 255 : 0;
    }
    write_png_gray8(gt_dir / name, p.width, p.height, gt);
  }
}

} // namespace rgbdseg::synth
