#include "rgbdseg/gmm_rgbd.hpp"

#include "rgbdseg/worker_pool.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rgbdseg {

void GmmParams::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("GmmParams: ") + what); };
  if (k_rgb < 1 || k_d < 1 || k_rgb > 32 || k_d > 32) fail("k_rgb and k_d must be in [1, 32]");
  if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must be in (0, 1]");
  if (!(s > 0.0)) fail("s must be positive");
  if (!(tau > 0.0)) fail("tau must be positive");
  if (!(match_lambda > 0.0)) fail("match_lambda must be positive");
  if (!(var_init > 0.0)) fail("var_init must be positive");
  if (!(w_init > 0.0 && w_init <= 1.0)) fail("w_init must be in (0, 1]");
  if (!(var_floor > 0.0)) fail("var_floor must be positive");
  if (!(background_ratio > 0.0)) fail("background_ratio must be positive");
}

double density(double dist_sq, double variance, double s) {
  return s / (2.0 * std::numbers::pi * variance) * std::exp(-dist_sq / (2.0 * variance));
}

template <std::size_t C>
std::optional<std::size_t> match_component(const std::array<double, C>& x,
                                           std::span<const Gaussian<C>> model, double lambda) {
  std::optional<std::size_t> best;
  const double gate = lambda * lambda;
  for (std::size_t k = 0; k < model.size(); ++k) {
    const auto& g = model[k];
    if (g.weight <= 0.0) {
      continue;
    }
    if (squared_distance(x, g.mean) < gate * g.variance && (!best || g.weight > model[*best].weight)) {
      best = k;
    }
  }
  return best;
}

namespace {

// Components in descending weight/stddev order (stable, so ties keep index
// order). Mixtures hold at most a handful of components.
template <std::size_t C>
std::size_t rank_by_fitness(std::span<const Gaussian<C>> model, std::array<std::size_t, 32>& order) {
  const std::size_t n = std::min<std::size_t>(model.size(), order.size());
  std::array<double, 32> fitness{};
  for (std::size_t k = 0; k < n; ++k) {
    order[k] = k;
    fitness[k] = model[k].weight / std::sqrt(model[k].variance);
  }
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t idx = order[i];
    std::size_t j = i;
    while (j > 0 && fitness[order[j - 1]] < fitness[idx]) {
      order[j] = order[j - 1];
      --j;
    }
    order[j] = idx;
  }
  return n;
}

} // namespace

template <std::size_t C>
double mixture_score(const std::array<double, C>& x, std::span<const Gaussian<C>> model, const GmmParams& params) {
  std::array<std::size_t, 32> order{};
  const std::size_t n = rank_by_fitness(model, order);
  double cumulative = 0.0;
  double score = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = model[order[i]];
    if (g.weight <= 0.0) {
      break;
    }
    score += g.weight * density(x, g, params.s);
    cumulative += g.weight;
    if (cumulative > params.background_ratio) {
      break;
    }
  }
  return score;
}

template <std::size_t C>
void seed_mixture(const std::array<double, C>& x, std::span<Gaussian<C>> model, const GmmParams& params) {
  for (auto& g : model) {
    g = Gaussian<C>{};
    g.variance = params.var_init;
  }
  model[0].weight = 1.0;
  model[0].mean = x;
}

template <std::size_t C>
void update_mixture(const std::array<double, C>& x, std::span<Gaussian<C>> model, const GmmParams& params) {
  const double alpha = params.alpha;
  const auto matched = match_component(x, std::span<const Gaussian<C>>(model), params.match_lambda);

  for (auto& g : model) {
    g.weight *= (1.0 - alpha);
  }
  if (matched) {
    auto& g = model[*matched];
    const double dist_sq = squared_distance(x, g.mean);
    g.weight += alpha;
    for (std::size_t c = 0; c < C; ++c) {
      g.mean[c] = (1.0 - alpha) * g.mean[c] + alpha * x[c];
    }
    g.variance = std::max((1.0 - alpha) * g.variance + alpha * dist_sq, params.var_floor);
  } else {
    std::size_t weakest = 0;
    double weakest_fitness = model[0].weight / std::sqrt(model[0].variance);
    for (std::size_t k = 1; k < model.size(); ++k) {
      const double f = model[k].weight / std::sqrt(model[k].variance);
      if (f < weakest_fitness) {
        weakest = k;
        weakest_fitness = f;
      }
    }
    model[weakest] = Gaussian<C>{params.w_init, x, params.var_init};
  }

  double total = 0.0;
  for (const auto& g : model) {
    total += g.weight;
  }
  for (auto& g : model) {
    g.weight /= total;
  }
}

template std::optional<std::size_t> match_component<3>(const std::array<double, 3>&, std::span<const RgbGaussian>, double);
template std::optional<std::size_t> match_component<1>(const std::array<double, 1>&, std::span<const DepthGaussian>, double);
template double mixture_score<3>(const std::array<double, 3>&, std::span<const RgbGaussian>, const GmmParams&);
template double mixture_score<1>(const std::array<double, 1>&, std::span<const DepthGaussian>, const GmmParams&);
template void seed_mixture<3>(const std::array<double, 3>&, std::span<RgbGaussian>, const GmmParams&);
template void seed_mixture<1>(const std::array<double, 1>&, std::span<DepthGaussian>, const GmmParams&);
template void update_mixture<3>(const std::array<double, 3>&, std::span<RgbGaussian>, const GmmParams&);
template void update_mixture<1>(const std::array<double, 1>&, std::span<DepthGaussian>, const GmmParams&);

GmmDecision classify_pixel(const RgbdPixel& x, ConstGmmPixelView model, const GmmParams& params) {
  GmmDecision out;
  if (!is_seeded(model.rgb)) {
    return out;
  }
  out.score = mixture_score(rgb_vector(x), model.rgb, params);
  if (x.depth_valid() && is_seeded(model.depth)) {
    out.score *= mixture_score(depth_vector(x), model.depth, params);
    out.depth_used = true;
  }
  out.foreground = !(out.score >= params.tau);
  return out;
}

void update_pixel(const RgbdPixel& x, GmmPixelView model, const GmmParams& params) {
  const auto rgb = rgb_vector(x);
  if (is_seeded(std::span<const RgbGaussian>(model.rgb))) {
    update_mixture(rgb, model.rgb, params);
  } else {
    seed_mixture(rgb, model.rgb, params);
  }
  if (!x.depth_valid()) {
    return;
  }
  const auto d = depth_vector(x);
  if (is_seeded(std::span<const DepthGaussian>(model.depth))) {
    update_mixture(d, model.depth, params);
  } else {
    seed_mixture(d, model.depth, params);
  }
}

GmmGrid::GmmGrid(int width, int height, const GmmParams& params)
    : width_(width), height_(height), params_(params) {
  params_.validate();
  if (width <= 0 || height <= 0) {
    throw DimensionError("GmmGrid: dimensions must be positive");
  }
  RgbGaussian empty_rgb;
  empty_rgb.variance = params.var_init;
  DepthGaussian empty_d;
  empty_d.variance = params.var_init;
  rgb_.assign(pixel_count() * static_cast<std::size_t>(params.k_rgb), empty_rgb);
  depth_.assign(pixel_count() * static_cast<std::size_t>(params.k_d), empty_d);
}

GmmPixelView GmmGrid::pixel(std::size_t i) {
  const auto kr = static_cast<std::size_t>(params_.k_rgb);
  const auto kd = static_cast<std::size_t>(params_.k_d);
  return {std::span<RgbGaussian>(rgb_).subspan(i * kr, kr), std::span<DepthGaussian>(depth_).subspan(i * kd, kd)};
}

ConstGmmPixelView GmmGrid::pixel(std::size_t i) const {
  const auto kr = static_cast<std::size_t>(params_.k_rgb);
  const auto kd = static_cast<std::size_t>(params_.k_d);
  return {std::span<const RgbGaussian>(rgb_).subspan(i * kr, kr),
          std::span<const DepthGaussian>(depth_).subspan(i * kd, kd)};
}

bool GmmGrid::operator==(const GmmGrid& other) const {
  return width_ == other.width_ && height_ == other.height_ && rgb_ == other.rgb_ && depth_ == other.depth_;
}

void segment_frame_gmm(const RgbdFrame& frame, GmmGrid& grid, ForegroundMask& mask, WorkerPool& pool) {
  if (frame.width != grid.width() || frame.height != grid.height()) {
    throw DimensionError("segment_frame_gmm: frame is " + std::to_string(frame.width) + "x" +
                         std::to_string(frame.height) + ", model grid is " + std::to_string(grid.width()) + "x" +
                         std::to_string(grid.height()));
  }
  if (mask.width != frame.width || mask.height != frame.height) {
    mask = ForegroundMask(frame.width, frame.height);
  }
  const GmmParams& params = grid.params();
  pool.parallel_for(frame.pixel_count(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const RgbdPixel& x = frame.pixels[i];
      auto model = grid.pixel(i);
      const auto decision = classify_pixel(x, ConstGmmPixelView{model.rgb, model.depth}, params);
      mask.values[i] = decision.foreground ? ForegroundMask::kForeground : ForegroundMask::kBackground;
      update_pixel(x, model, params);
    }
  });
}

} // namespace rgbdseg
