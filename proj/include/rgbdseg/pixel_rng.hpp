#pragma once

#include <array>
#include <cstdint>

namespace rgbdseg {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123). A block
/// is a pure function of (counter, key), so any pixel can draw its numbers
/// without sharing generator state with other pixels.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
};

/// Uniform double in [0, 1) determined only by its arguments.
constexpr double pixel_rng(std::uint64_t seed, std::uint32_t x, std::uint32_t y, std::uint32_t frame_idx,
                           std::uint32_t draw_idx) {
  const auto out = Philox4x32::block({x, y, frame_idx, draw_idx},
                                     {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  // 53 random bits from the first two output words.
  const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 21) ^ (static_cast<std::uint64_t>(out[1]) >> 11);
  return static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) * 0x1.0p-53;
}

} // namespace rgbdseg
