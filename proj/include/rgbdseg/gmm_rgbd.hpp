#pragma once

#include "rgbdseg/frame_io.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace rgbdseg {

class WorkerPool;

/// One weighted Gaussian with a single variance shared by all its channels.
template <std::size_t Channels>
struct Gaussian {
  double weight = 0.0;
  std::array<double, Channels> mean{};
  double variance = 1.0;

  bool operator==(const Gaussian&) const = default;
};

using RgbGaussian = Gaussian<3>;
using DepthGaussian = Gaussian<1>;

struct GmmParams {
  int k_rgb = 7;
  int k_d = 3;
  double alpha = 0.001;          // learning rate
  double s = 10000.0;            // density scale
  double tau = 1.0;              // background iff fused score >= tau
  double match_lambda = 2.5;     // match gate, in standard deviations
  double var_init = 225.0;
  double w_init = 0.05;
  double var_floor = 1.0;
  // Components ranked by weight/stddev contribute to the score until their
  // cumulative weight exceeds this ratio. Values >= 1 score the full mixture.
  double background_ratio = 0.7;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Scaled Gaussian density s / (2 pi v) * exp(-d^2 / (2 v)), with v the
/// component variance.
double density(double dist_sq, double variance, double s);

template <std::size_t C>
double squared_distance(const std::array<double, C>& x, const std::array<double, C>& mean) {
  double acc = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    const double diff = x[c] - mean[c];
    acc += diff * diff;
  }
  return acc;
}

template <std::size_t C>
double density(const std::array<double, C>& x, const Gaussian<C>& comp, double s) {
  return density(squared_distance(x, comp.mean), comp.variance, s);
}

/// Index of the highest-weight component with d^2 < lambda^2 * v (ties go to
/// the lower index), or nullopt.
template <std::size_t C>
std::optional<std::size_t> match_component(const std::array<double, C>& x,
                                           std::span<const Gaussian<C>> model, double lambda);

/// Weighted density summed over the background subset of `model`.
template <std::size_t C>
double mixture_score(const std::array<double, C>& x, std::span<const Gaussian<C>> model,
                     const GmmParams& params);

/// Component 0 takes (weight 1, mean x, var_init); the rest are zeroed.
template <std::size_t C>
void seed_mixture(const std::array<double, C>& x, std::span<Gaussian<C>> model, const GmmParams& params);

/// One online update step: weight decay toward the matched component, mean and
/// variance blend at rate alpha, replacement of the weakest component on a
/// miss, and renormalisation.
template <std::size_t C>
void update_mixture(const std::array<double, C>& x, std::span<Gaussian<C>> model, const GmmParams& params);

/// A sub-model is seeded once any of its components carries weight.
template <std::size_t C>
bool is_seeded(std::span<const Gaussian<C>> model) {
  for (const auto& g : model) {
    if (g.weight > 0.0) {
      return true;
    }
  }
  return false;
}

inline std::array<double, 3> rgb_vector(const RgbdPixel& p) {
  return {static_cast<double>(p.r), static_cast<double>(p.g), static_cast<double>(p.b)};
}
inline std::array<double, 1> depth_vector(const RgbdPixel& p) { return {static_cast<double>(p.d)}; }

struct GmmPixelView {
  std::span<RgbGaussian> rgb;
  std::span<DepthGaussian> depth;
};

struct ConstGmmPixelView {
  std::span<const RgbGaussian> rgb;
  std::span<const DepthGaussian> depth;

  ConstGmmPixelView() = default;
  ConstGmmPixelView(std::span<const RgbGaussian> r, std::span<const DepthGaussian> d) : rgb(r), depth(d) {}
  ConstGmmPixelView(GmmPixelView v) : rgb(v.rgb), depth(v.depth) {}
};

/// Standalone per-pixel model. The grid below stores the same data flat.
struct GmmPixelModel {
  std::vector<RgbGaussian> rgb;
  std::vector<DepthGaussian> depth;

  explicit GmmPixelModel(const GmmParams& params)
      : rgb(static_cast<std::size_t>(params.k_rgb)), depth(static_cast<std::size_t>(params.k_d)) {}

  GmmPixelView view() { return {rgb, depth}; }
  ConstGmmPixelView view() const { return {rgb, depth}; }
  bool operator==(const GmmPixelModel&) const = default;
};

struct GmmDecision {
  bool foreground = false;
  double score = 0.0;
  bool depth_used = false;
};

/// RGB score, multiplied by the depth score when the observation's depth is
/// valid and the depth sub-model has been seeded. An unseeded RGB model yields
/// background.
GmmDecision classify_pixel(const RgbdPixel& x, ConstGmmPixelView model, const GmmParams& params);

/// Seeds unseeded sub-models from x, otherwise runs update_mixture. The depth
/// sub-model is left alone when x has invalid depth.
void update_pixel(const RgbdPixel& x, GmmPixelView model, const GmmParams& params);

/// Flat per-pixel storage of k_rgb + k_d components.
class GmmGrid {
public:
  GmmGrid() = default;
  GmmGrid(int width, int height, const GmmParams& params);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }
  const GmmParams& params() const { return params_; }

  GmmPixelView pixel(std::size_t i);
  ConstGmmPixelView pixel(std::size_t i) const;

  bool operator==(const GmmGrid& other) const;

private:
  int width_ = 0;
  int height_ = 0;
  GmmParams params_;
  std::vector<RgbGaussian> rgb_;
  std::vector<DepthGaussian> depth_;
};

/// Classifies every pixel of `frame` against `grid`, then updates the grid with
/// the same observations. Pixels are partitioned across `pool`.
void segment_frame_gmm(const RgbdFrame& frame, GmmGrid& grid, ForegroundMask& mask, WorkerPool& pool);

} // namespace rgbdseg
