#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace rgbdseg {

/// Raised when an image file cannot be decoded or has an unexpected layout.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Decoded raster with interleaved channels. Samples are stored widened to
/// 16 bits so 8- and 16-bit sources share one representation; `bit_depth`
/// records what the file carried.
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;
};

// PNG (libpng). Palette images are expanded to RGB; bit depths below 8 are
// expanded to 8.
RawImage read_png(const std::filesystem::path& path);

void write_png_gray8(const std::filesystem::path& path, int width, int height,
                     const std::vector<std::uint8_t>& values);
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& interleaved);
void write_png_gray16(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint16_t>& values);

// Binary PGM (P5). maxval > 255 means big-endian 16-bit samples.
RawImage read_pgm(const std::filesystem::path& path);
void write_pgm16(const std::filesystem::path& path, int width, int height,
                 const std::vector<std::uint16_t>& values);

} // namespace rgbdseg
