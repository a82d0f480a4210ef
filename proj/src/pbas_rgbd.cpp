#include "rgbdseg/pbas_rgbd.hpp"

#include "rgbdseg/pixel_rng.hpp"
#include "rgbdseg/worker_pool.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace rgbdseg {

void PbasParams::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("PbasParams: ") + what); };
  if (n < 1 || n > 255) fail("n must be in [1, 255]");
  if (min_matches < 1 || min_matches > n) fail("min_matches must be in [1, n]");
  if (!(r_lower > 0.0f) || !(r_init >= r_lower)) fail("need 0 < r_lower <= r_init");
  if (!(r_scale > 0.0f)) fail("r_scale must be positive");
  if (!(r_inc_dec > 0.0f && r_inc_dec < 1.0f)) fail("r_inc_dec must be in (0, 1)");
  if (!(t_lower >= 1.0f && t_lower <= t_init && t_init <= t_upper)) fail("need 1 <= t_lower <= t_init <= t_upper");
  if (!(t_inc > 0.0f) || !(t_dec > 0.0f)) fail("t_inc and t_dec must be positive");
}

PbasPixelModel::PbasPixelModel(const PbasParams& params)
    : samples(static_cast<std::size_t>(params.n)),
      dmin_rgb(static_cast<std::size_t>(params.n), 0.0f),
      dmin_d(static_cast<std::size_t>(params.n), 0.0f) {
  state.r_rgb = params.r_init;
  state.r_d = params.r_init;
  state.t = params.t_init;
}

PbasDecision classify_pixel_pbas(const RgbdPixel& x, ConstPbasPixelView model, const PbasParams& params) {
  PbasDecision out;
  const PbasPixelState& st = *model.state;

  int rgb_matches = 0;
  int dmin_rgb = std::numeric_limits<int>::max();
  int depth_matches = 0;
  int depth_valid_samples = 0;
  int dmin_d = std::numeric_limits<int>::max();

  for (const RgbdPixel& s : model.samples) {
    const int dist = rgb_group_distance(x, s);
    dmin_rgb = std::min(dmin_rgb, dist);
    if (static_cast<float>(dist) < st.r_rgb) {
      ++rgb_matches;
    }
    if (x.depth_valid() && s.depth_valid()) {
      const int dd = pbas_distance(x.d, s.d);
      ++depth_valid_samples;
      dmin_d = std::min(dmin_d, dd);
      if (static_cast<float>(dd) < st.r_d) {
        ++depth_matches;
      }
    }
  }

  out.rgb_foreground = rgb_matches < params.min_matches;
  out.dmin_rgb = static_cast<float>(dmin_rgb);
  if (x.depth_valid() && depth_valid_samples >= params.min_matches) {
    out.depth_foreground = depth_matches < params.min_matches;
    out.dmin_d = static_cast<float>(dmin_d);
  }
  out.foreground = out.rgb_foreground || out.depth_foreground.value_or(false);
  return out;
}

namespace {

void push_ring(std::span<float> ring, std::uint8_t& pos, std::uint8_t& count, float value) {
  ring[pos] = value;
  pos = static_cast<std::uint8_t>((pos + 1) % ring.size());
  if (count < ring.size()) {
    ++count;
  }
}

} // namespace

void record_dmin(PbasPixelView model, const PbasDecision& decision, const PbasParams&) {
  PbasPixelState& st = *model.state;
  push_ring(model.dmin_rgb, st.dmin_pos_rgb, st.dmin_count_rgb, decision.dmin_rgb);
  if (decision.dmin_d) {
    push_ring(model.dmin_d, st.dmin_pos_d, st.dmin_count_d, *decision.dmin_d);
  }
}

float dmin_average(std::span<const float> history, std::uint8_t count) {
  if (count == 0) {
    return 0.0f;
  }
  // Ring slots beyond `count` have never been written, and the filled ones are
  // always the first `count` slots until the ring wraps.
  float sum = 0.0f;
  for (std::size_t i = 0; i < count; ++i) {
    sum += history[i];
  }
  return sum / static_cast<float>(count);
}

float adapt_R(float r, float dmin_avg, const PbasParams& params) {
  if (r > dmin_avg * params.r_scale) {
    r *= (1.0f - params.r_inc_dec);
  } else {
    r *= (1.0f + params.r_inc_dec);
  }
  return std::max(r, params.r_lower);
}

float adapt_T(float t, bool foreground, float dmin_avg, const PbasParams& params) {
  const float denom = std::max(dmin_avg, 1.0f);
  t = foreground ? t + params.t_inc / denom : t - params.t_dec / denom;
  return std::clamp(t, params.t_lower, params.t_upper);
}

int in_bounds_neighbours(int x, int y, int width, int height, std::array<std::size_t, 8>& out) {
  int count = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) {
        continue;
      }
      const int nx = x + dx;
      const int ny = y + dy;
      if (nx >= 0 && ny >= 0 && nx < width && ny < height) {
        out[static_cast<std::size_t>(count++)] =
            static_cast<std::size_t>(ny) * static_cast<std::size_t>(width) + static_cast<std::size_t>(nx);
      }
    }
  }
  return count;
}

namespace {

// floor(u * n) clamped into [0, n).
int scaled_index(double u, int n) { return std::min(static_cast<int>(u * n), n - 1); }

} // namespace

std::optional<NeighbourIntent> update_model_pbas(const RgbdPixel& x, PbasPixelView model, bool foreground,
                                                 const PbasUpdateDraws& draws, int px, int py, int width,
                                                 int height, const PbasParams& /*params*/) {
  if (foreground) {
    return std::nullopt;
  }
  const double t = model.state->t;
  const double p = 1.0 / t;
  const int n = static_cast<int>(model.samples.size());

  // A draw u < 1/T also carries a uniform value u * T in [0, 1), which picks
  // the slot (or neighbour) without consuming another draw.
  if (draws.self < p) {
    model.samples[static_cast<std::size_t>(scaled_index(draws.self * t, n))] = x;
  }
  if (draws.neighbour < p) {
    std::array<std::size_t, 8> candidates{};
    const int count = in_bounds_neighbours(px, py, width, height, candidates);
    if (count > 0) {
      const auto pick = static_cast<std::size_t>(scaled_index(draws.neighbour * t, count));
      return NeighbourIntent{candidates[pick], scaled_index(draws.neighbour_slot, n)};
    }
  }
  return std::nullopt;
}

PbasGrid::PbasGrid(int width, int height, const PbasParams& params)
    : width_(width), height_(height), params_(params) {
  params_.validate();
  if (width <= 0 || height <= 0) {
    throw DimensionError("PbasGrid: dimensions must be positive");
  }
  const std::size_t n = static_cast<std::size_t>(params.n);
  samples_.assign(pixel_count() * n, RgbdPixel{});
  dmin_rgb_.assign(pixel_count() * n, 0.0f);
  dmin_d_.assign(pixel_count() * n, 0.0f);
  PbasPixelState init;
  init.r_rgb = params.r_init;
  init.r_d = params.r_init;
  init.t = params.t_init;
  state_.assign(pixel_count(), init);
}

PbasPixelView PbasGrid::pixel(std::size_t i) {
  const std::size_t n = static_cast<std::size_t>(params_.n);
  return {std::span<RgbdPixel>(samples_).subspan(i * n, n), std::span<float>(dmin_rgb_).subspan(i * n, n),
          std::span<float>(dmin_d_).subspan(i * n, n), &state_[i]};
}

ConstPbasPixelView PbasGrid::pixel(std::size_t i) const {
  const std::size_t n = static_cast<std::size_t>(params_.n);
  return {std::span<const RgbdPixel>(samples_).subspan(i * n, n),
          std::span<const float>(dmin_rgb_).subspan(i * n, n), std::span<const float>(dmin_d_).subspan(i * n, n),
          &state_[i]};
}

bool PbasGrid::operator==(const PbasGrid& other) const {
  return width_ == other.width_ && height_ == other.height_ && frames_seen_ == other.frames_seen_ &&
         samples_ == other.samples_ && dmin_rgb_ == other.dmin_rgb_ && dmin_d_ == other.dmin_d_ &&
         state_ == other.state_;
}

void segment_frame_pbas(const RgbdFrame& frame, PbasGrid& grid, ForegroundMask& mask, std::uint64_t seed,
                        WorkerPool& pool) {
  if (frame.width != grid.width() || frame.height != grid.height()) {
    throw DimensionError("segment_frame_pbas: frame is " + std::to_string(frame.width) + "x" +
                         std::to_string(frame.height) + ", model grid is " + std::to_string(grid.width()) + "x" +
                         std::to_string(grid.height()));
  }
  if (mask.width != frame.width || mask.height != frame.height) {
    mask = ForegroundMask(frame.width, frame.height);
  }
  const PbasParams& params = grid.params();
  const std::size_t count = frame.pixel_count();
  const std::uint32_t frame_idx = grid.frames_seen_;

  if (!grid.warm()) {
    // Warm-up: fill slot `frame_idx` everywhere and report background.
    pool.parallel_for(count, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        grid.pixel(i).samples[frame_idx] = frame.pixels[i];
        mask.values[i] = ForegroundMask::kBackground;
      }
    });
    ++grid.frames_seen_;
    return;
  }

  grid.decisions_.resize(count);
  grid.intents_.assign(count, std::nullopt);

  // Phase 1: classification, read-only on the models.
  pool.parallel_for(count, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& grid_c = grid;
      const auto decision = classify_pixel_pbas(frame.pixels[i], grid_c.pixel(i), params);
      grid.decisions_[i] = decision;
      mask.values[i] = decision.foreground ? ForegroundMask::kForeground : ForegroundMask::kBackground;
    }
  });

  // Phase 2: per-pixel adaptation and self-update.
  const int width = frame.width;
  const int height = frame.height;
  pool.parallel_for(count, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = static_cast<int>(i % static_cast<std::size_t>(width));
      const auto y = static_cast<int>(i / static_cast<std::size_t>(width));
      auto model = grid.pixel(i);
      PbasPixelState& st = *model.state;
      const PbasDecision& decision = grid.decisions_[i];

      record_dmin(model, decision, params);
      const float avg_rgb = dmin_average(model.dmin_rgb, st.dmin_count_rgb);
      st.r_rgb = adapt_R(st.r_rgb, avg_rgb, params);
      if (decision.dmin_d) {
        st.r_d = adapt_R(st.r_d, dmin_average(model.dmin_d, st.dmin_count_d), params);
      }
      st.t = adapt_T(st.t, decision.foreground, avg_rgb, params);

      const auto ux = static_cast<std::uint32_t>(x);
      const auto uy = static_cast<std::uint32_t>(y);
      const PbasUpdateDraws draws{pixel_rng(seed, ux, uy, frame_idx, 0), pixel_rng(seed, ux, uy, frame_idx, 1),
                                  pixel_rng(seed, ux, uy, frame_idx, 2)};
      grid.intents_[i] =
          update_model_pbas(frame.pixels[i], model, decision.foreground, draws, x, y, width, height, params);
    }
  });

  // Phase 3: neighbour intents, row-major.
  for (std::size_t i = 0; i < count; ++i) {
    if (const auto& intent = grid.intents_[i]) {
      grid.pixel(intent->target).samples[static_cast<std::size_t>(intent->slot)] = frame.pixels[intent->target];
    }
  }
  ++grid.frames_seen_;
}

} // namespace rgbdseg
