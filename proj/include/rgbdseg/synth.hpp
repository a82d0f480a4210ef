#pragma once

#include "rgbdseg/frame_io.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

namespace rgbdseg::synth {

enum class Scenario { static_scene, colour_camouflage, depth_camouflage, illumination_ramp, shadow };

inline constexpr std::array<std::string_view, 5> kScenarioNames = {
    "static", "colour_camouflage", "depth_camouflage", "illumination_ramp", "shadow"};

std::string_view to_string(Scenario s);
/// Throws std::invalid_argument listing the valid names.
Scenario parse_scenario(std::string_view name);

/// Scene description. Unset optionals take the scenario's default (see
/// resolved()).
struct SynthParams {
  Scenario scenario = Scenario::static_scene;
  int width = 160;
  int height = 120;
  int frames = 150;
  int entry_frame = 40;      // first frame showing the object
  int object_width = 32;
  int object_height = 48;
  int speed = 1;             // horizontal motion, pixels per frame
  std::optional<int> depth_offset; // object is this much closer, 8-bit depth units
  std::optional<int> colour_noise; // uniform +-n per colour channel
  std::optional<int> depth_noise;  // uniform +-n, 8-bit depth units
  double ramp_slope = 0.25;  // illumination_ramp brightness gain, intensity units per frame
  double invalid_fraction = 0.0;
  std::uint64_t seed = 7;

  /// Fills scenario defaults and validates. Throws std::invalid_argument.
  SynthParams resolved() const;
};

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool contains(int px, int py) const { return px >= x && py >= y && px < x + width && py < y + height; }
};

/// Object placement at frame t, or nullopt when no object is visible. The
/// object bounces horizontally inside an 8-pixel margin.
std::optional<Rect> object_rect(const SynthParams& params, int t);

/// Darkened strip cast to the right of the object (shadow scenario only),
/// clipped to the frame.
std::optional<Rect> shadow_rect(const SynthParams& params, int t);

/// Background colour and 8-bit depth at (x, y), before noise and illumination.
RgbdPixel background_at(int x, int y, int width, int height);

struct SynthFrame {
  RgbImage rgb;
  DepthMap16 depth;
  GroundTruthMask gt;
};

/// Renders frame t. `params` must already be resolved.
SynthFrame render_frame(const SynthParams& params, int t);

/// Writes <root>/rgb, <root>/depth (16-bit PNG) and <root>/gt with six-digit
/// zero-padded stems.
void write_sequence(const std::filesystem::path& root, const SynthParams& params);

} // namespace rgbdseg::synth
