#pragma once

#include "rgbdseg/frame_io.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rgbdseg {

class WorkerPool;

struct PbasParams {
  int n = 20;            // samples per pixel
  int min_matches = 2;   // #min
  float r_init = 18.0f;
  float r_lower = 18.0f;
  float r_scale = 5.0f;
  float r_inc_dec = 0.05f;
  float t_init = 18.0f;
  float t_lower = 2.0f;
  float t_upper = 200.0f;
  float t_inc = 1.0f;
  float t_dec = 0.05f;

  void validate() const;
};

/// Scalar per-pixel adaptive state. The sample and distance histories live
/// alongside it (see PbasPixelView).
struct PbasPixelState {
  float r_rgb = 0.0f;
  float r_d = 0.0f;
  float t = 0.0f;
  std::uint8_t dmin_pos_rgb = 0;
  std::uint8_t dmin_count_rgb = 0;
  std::uint8_t dmin_pos_d = 0;
  std::uint8_t dmin_count_d = 0;

  bool operator==(const PbasPixelState&) const = default;
};

struct PbasPixelView {
  std::span<RgbdPixel> samples;
  std::span<float> dmin_rgb;
  std::span<float> dmin_d;
  PbasPixelState* state;
};

struct ConstPbasPixelView {
  std::span<const RgbdPixel> samples;
  std::span<const float> dmin_rgb;
  std::span<const float> dmin_d;
  const PbasPixelState* state = nullptr;

  ConstPbasPixelView() = default;
  ConstPbasPixelView(std::span<const RgbdPixel> s, std::span<const float> r, std::span<const float> d,
                     const PbasPixelState* st)
      : samples(s), dmin_rgb(r), dmin_d(d), state(st) {}
  ConstPbasPixelView(PbasPixelView v) : samples(v.samples), dmin_rgb(v.dmin_rgb), dmin_d(v.dmin_d), state(v.state) {}
};

/// Owning single-pixel model, used for unit work and scalar reference runs.
struct PbasPixelModel {
  std::vector<RgbdPixel> samples;
  std::vector<float> dmin_rgb;
  std::vector<float> dmin_d;
  PbasPixelState state;

  explicit PbasPixelModel(const PbasParams& params);

  PbasPixelView view() { return {samples, dmin_rgb, dmin_d, &state}; }
  ConstPbasPixelView view() const { return {samples, dmin_rgb, dmin_d, &state}; }
  bool operator==(const PbasPixelModel&) const = default;
};

/// Per-channel absolute difference.
constexpr int pbas_distance(std::uint8_t x, std::uint8_t s) { return x > s ? x - s : s - x; }

/// Colour group distance: the largest per-channel difference.
constexpr int rgb_group_distance(const RgbdPixel& x, const RgbdPixel& s) {
  const int dr = pbas_distance(x.r, s.r);
  const int dg = pbas_distance(x.g, s.g);
  const int db = pbas_distance(x.b, s.b);
  return dr > dg ? (dr > db ? dr : db) : (dg > db ? dg : db);
}

struct PbasDecision {
  bool rgb_foreground = false;
  std::optional<bool> depth_foreground; // nullopt when the depth group abstained
  bool foreground = false;              // OR over evaluated groups
  float dmin_rgb = 0.0f;
  std::optional<float> dmin_d;
};

/// Colour group votes background when at least min_matches samples lie within
/// R_rgb. The depth group only votes when the observation has valid depth and
/// at least min_matches samples do too.
PbasDecision classify_pixel_pbas(const RgbdPixel& x, ConstPbasPixelView model, const PbasParams& params);

/// Pushes this frame's minimal distances into the ring buffers.
void record_dmin(PbasPixelView model, const PbasDecision& decision, const PbasParams& params);

/// Mean of the filled part of a dmin ring buffer; 0 when empty.
float dmin_average(std::span<const float> history, std::uint8_t count);

/// Decision threshold recurrence, clamped below at r_lower.
float adapt_R(float r, float dmin_avg, const PbasParams& params);

/// Learning-rate recurrence, clamped to [t_lower, t_upper]. dmin_avg below 1
/// is treated as 1.
float adapt_T(float t, bool foreground, float dmin_avg, const PbasParams& params);

/// The three uniform draws consumed by one pixel's model update.
struct PbasUpdateDraws {
  double self = 1.0;
  double neighbour = 1.0;
  double neighbour_slot = 0.0;
};

/// Replace `slot` of the model at pixel `target` with that pixel's own
/// current observation.
struct NeighbourIntent {
  std::size_t target = 0;
  int slot = 0;
  bool operator==(const NeighbourIntent&) const = default;
};

/// In-bounds 8-neighbours of (x, y) in row-major order.
int in_bounds_neighbours(int x, int y, int width, int height, std::array<std::size_t, 8>& out);

/// Background pixels replace a random sample with probability 1/T and, with
/// independent probability 1/T, ask a random in-bounds neighbour to do the
/// same with its own value. Foreground pixels change nothing.
std::optional<NeighbourIntent> update_model_pbas(const RgbdPixel& x, PbasPixelView model, bool foreground,
                                                 const PbasUpdateDraws& draws, int px, int py, int width,
                                                 int height, const PbasParams& params);

class PbasGrid {
public:
  PbasGrid() = default;
  PbasGrid(int width, int height, const PbasParams& params);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }
  const PbasParams& params() const { return params_; }
  std::uint32_t frames_seen() const { return frames_seen_; }
  bool warm() const { return frames_seen_ >= static_cast<std::uint32_t>(params_.n); }

  PbasPixelView pixel(std::size_t i);
  ConstPbasPixelView pixel(std::size_t i) const;

  bool operator==(const PbasGrid& other) const;

private:
  friend void segment_frame_pbas(const RgbdFrame&, PbasGrid&, ForegroundMask&, std::uint64_t, WorkerPool&);

  int width_ = 0;
  int height_ = 0;
  PbasParams params_;
  std::uint32_t frames_seen_ = 0;
  std::vector<RgbdPixel> samples_;
  std::vector<float> dmin_rgb_;
  std::vector<float> dmin_d_;
  std::vector<PbasPixelState> state_;
  // Scratch reused across frames.
  std::vector<PbasDecision> decisions_;
  std::vector<std::optional<NeighbourIntent>> intents_;
};

/// One frame in three phases: parallel classification against the current
/// models, parallel per-pixel adaptation and self-update, then sequential
/// application of neighbour intents in row-major order. Randomness is keyed by
/// (seed, x, y, frame index, draw index).
void segment_frame_pbas(const RgbdFrame& frame, PbasGrid& grid, ForegroundMask& mask, std::uint64_t seed,
                        WorkerPool& pool);

} // namespace rgbdseg
