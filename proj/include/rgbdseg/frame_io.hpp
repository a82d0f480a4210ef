#pragma once

#include "rgbdseg/image_file.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rgbdseg {

class DimensionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raw 16-bit depth. 0 means the sensor had no reading; larger is farther.
struct DepthMap16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;

  DepthMap16() = default;
  DepthMap16(int w, int h, std::uint16_t fill = 0);

  std::uint16_t at(int x, int y) const { return values[index(x, y)]; }
  std::uint16_t& at(int x, int y) { return values[index(x, y)]; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  bool operator==(const DepthMap16&) const = default;
};

/// 8-bit interleaved RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data; // r,g,b per pixel, row-major

  RgbImage() = default;
  RgbImage(int w, int h);
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool operator==(const RgbImage&) const = default;
};

/// One 32-bit observation: three colour channels and rescaled depth.
/// d == 0 marks invalid depth.
struct RgbdPixel {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t d = 0;

  bool depth_valid() const { return d != 0; }
  bool operator==(const RgbdPixel&) const = default;
};
static_assert(sizeof(RgbdPixel) == 4);

struct RgbdFrame {
  int width = 0;
  int height = 0;
  std::vector<RgbdPixel> pixels;

  RgbdFrame() = default;
  RgbdFrame(int w, int h, RgbdPixel fill = {});

  std::size_t pixel_count() const { return pixels.size(); }
  const RgbdPixel& at(int x, int y) const { return pixels[index(x, y)]; }
  RgbdPixel& at(int x, int y) { return pixels[index(x, y)]; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  bool operator==(const RgbdFrame&) const = default;
};

/// Binary segmentation output; each value is 0 (background) or 255 (foreground).
struct ForegroundMask {
  static constexpr std::uint8_t kBackground = 0;
  static constexpr std::uint8_t kForeground = 255;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  ForegroundMask() = default;
  ForegroundMask(int w, int h, std::uint8_t fill = kBackground);

  std::size_t pixel_count() const { return values.size(); }
  bool is_foreground(std::size_t i) const { return values[i] != kBackground; }
  std::size_t foreground_count() const;
  bool operator==(const ForegroundMask&) const = default;
};

enum class GtLabel : std::uint8_t { background, foreground, ignore };

struct GroundTruthMask {
  int width = 0;
  int height = 0;
  std::vector<GtLabel> labels;

  GroundTruthMask() = default;
  GroundTruthMask(int w, int h, GtLabel fill = GtLabel::background);
  bool operator==(const GroundTruthMask&) const = default;
};

// --- pixel and raster conversions -------------------------------------------

/// Maps 0..65535 onto 0..255 by floor(d * 255 / 65535), except that a valid
/// (nonzero) reading never lands on the invalid code 0.
constexpr std::uint8_t scale_depth_16_to_8(std::uint16_t d16) {
  if (d16 == 0) {
    return 0;
  }
  const std::uint32_t scaled = static_cast<std::uint32_t>(d16) * 255u / 65535u;
  return static_cast<std::uint8_t>(scaled == 0 ? 1 : scaled);
}

/// Combines colour and depth into one frame. Throws DimensionError when the
/// rasters disagree in size.
RgbdFrame pack_frame(const RgbImage& rgb, const DepthMap16& depth);

/// Splits a frame back into its colour raster and its 8-bit depth plane.
RgbImage unpack_rgb(const RgbdFrame& frame);
std::vector<std::uint8_t> unpack_depth8(const RgbdFrame& frame);

/// Nearest-neighbour resize. Output pixel (x, y) samples the source pixel whose
/// centre is nearest to the mapped output centre, so invalid readings are never
/// blended into valid ones.
DepthMap16 resample_depth(const DepthMap16& depth, int target_width, int target_height);

// --- file loading ------------------------------------------------------------

RgbImage load_rgb(const std::filesystem::path& path);

/// Accepts single-channel 16-bit PNG, single-channel 8-bit PNG (widened by
/// 257 so the 8-bit value survives rescaling) and binary PGM.
DepthMap16 load_depth(const std::filesystem::path& path);

/// 0 -> background, 255 -> foreground, anything else -> ignore.
GroundTruthMask load_ground_truth(const std::filesystem::path& path);
GtLabel ground_truth_label(std::uint8_t value);

void save_mask(const std::filesystem::path& path, const ForegroundMask& mask);
ForegroundMask load_mask(const std::filesystem::path& path);

// --- sequences ---------------------------------------------------------------

struct FrameEntry {
  std::string stem;
  std::filesystem::path rgb;
  std::filesystem::path depth; // empty when the sequence has no depth stream
};

/// Sorted-filename pairing of an RGB directory with an optional depth and
/// ground-truth directory.
class SequenceSource {
public:
  SequenceSource(std::filesystem::path rgb_dir, std::optional<std::filesystem::path> depth_dir,
                 std::optional<std::filesystem::path> gt_dir = std::nullopt);

  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const FrameEntry& entry(std::size_t i) const { return frames_.at(i); }
  const std::vector<FrameEntry>& entries() const { return frames_; }
  bool has_depth() const { return depth_dir_.has_value(); }
  const std::optional<std::filesystem::path>& gt_dir() const { return gt_dir_; }

  /// Ground-truth file matching the frame stem, if present.
  std::optional<std::filesystem::path> ground_truth_for(std::size_t i) const;

private:
  std::filesystem::path rgb_dir_;
  std::optional<std::filesystem::path> depth_dir_;
  std::optional<std::filesystem::path> gt_dir_;
  std::vector<FrameEntry> frames_;
  std::vector<std::filesystem::path> gt_files_;
};

/// Regular files in `dir` whose extension is one of `extensions`
/// (lowercase, with dot), sorted by filename.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir,
                                               const std::vector<std::string>& extensions);

/// Key used to align frames from differently-prefixed directories
/// ("in000012" and "gt000012" both map to "12"). Stems without trailing
/// digits are returned unchanged.
std::string frame_key(const std::string& stem);

} // namespace rgbdseg
