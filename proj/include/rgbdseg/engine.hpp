#pragma once

#include "rgbdseg/frame_io.hpp"
#include "rgbdseg/gmm_rgbd.hpp"
#include "rgbdseg/pbas_rgbd.hpp"
#include "rgbdseg/worker_pool.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rgbdseg {

enum class Algorithm { gmm, pbas };
enum class Mode { rgb_only, rgbd };

std::string_view to_string(Algorithm a);
std::string_view to_string(Mode m);
/// Throws std::invalid_argument on unknown names.
Algorithm parse_algorithm(std::string_view name);
Mode parse_mode(std::string_view name);

struct PipelineConfig {
  Algorithm algorithm = Algorithm::gmm;
  Mode mode = Mode::rgbd;
  GmmParams gmm;
  PbasParams pbas;
  std::uint64_t seed = 0x5eed;
  std::size_t worker_count = 1;
  bool emit_masks = false;
  std::filesystem::path out_dir;
};

/// Per-algorithm model grid behind a common frame-at-a-time interface.
class BackgroundSegmenter {
public:
  virtual ~BackgroundSegmenter() = default;

  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual void apply(const RgbdFrame& frame, ForegroundMask& mask, WorkerPool& pool) = 0;
  /// Bitwise comparison of model state with another segmenter of the same kind.
  virtual bool state_equals(const BackgroundSegmenter& other) const = 0;
};

class GmmSegmenter final : public BackgroundSegmenter {
public:
  GmmSegmenter(int width, int height, const GmmParams& params) : grid_(width, height, params) {}

  int width() const override { return grid_.width(); }
  int height() const override { return grid_.height(); }
  void apply(const RgbdFrame& frame, ForegroundMask& mask, WorkerPool& pool) override {
    segment_frame_gmm(frame, grid_, mask, pool);
  }
  bool state_equals(const BackgroundSegmenter& other) const override;
  const GmmGrid& grid() const { return grid_; }

private:
  GmmGrid grid_;
};

class PbasSegmenter final : public BackgroundSegmenter {
public:
  PbasSegmenter(int width, int height, const PbasParams& params, std::uint64_t seed)
      : grid_(width, height, params), seed_(seed) {}

  int width() const override { return grid_.width(); }
  int height() const override { return grid_.height(); }
  void apply(const RgbdFrame& frame, ForegroundMask& mask, WorkerPool& pool) override {
    segment_frame_pbas(frame, grid_, mask, seed_, pool);
  }
  bool state_equals(const BackgroundSegmenter& other) const override;
  const PbasGrid& grid() const { return grid_; }

private:
  PbasGrid grid_;
  std::uint64_t seed_;
};

std::unique_ptr<BackgroundSegmenter> make_segmenter(const PipelineConfig& config, int width, int height);

struct RunStats {
  std::size_t frames_processed = 0;
  std::vector<double> frame_seconds; // compute stage only
  double total_seconds = 0.0;
  double resample_seconds = 0.0;     // portion of total spent upscaling depth

  double fps() const { return total_seconds > 0.0 ? static_cast<double>(frames_processed) / total_seconds : 0.0; }
};

/// Frame-at-a-time driver. The model grid is allocated on the first frame and
/// reused; every later frame must have the same dimensions.
class Pipeline {
public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }

  /// Compute stage for raw inputs: resample depth to the colour raster if
  /// needed, pack, segment. `depth` may be null (treated as all-invalid).
  const ForegroundMask& process(const RgbImage& rgb, const DepthMap16* depth);

  /// Segments an already packed frame. In rgb_only mode depth is discarded.
  const ForegroundMask& process(const RgbdFrame& frame);

  const RunStats& stats() const { return stats_; }
  const BackgroundSegmenter* segmenter() const { return segmenter_.get(); }
  const ForegroundMask& last_mask() const { return mask_; }

private:
  const ForegroundMask& segment(const RgbdFrame& frame, double extra_seconds);

  PipelineConfig config_;
  WorkerPool pool_;
  std::unique_ptr<BackgroundSegmenter> segmenter_;
  ForegroundMask mask_;
  RgbdFrame scratch_;
  RunStats stats_;
};

class SequenceError : public std::runtime_error {
public:
  SequenceError(std::size_t index, const std::string& what)
      : std::runtime_error("frame " + std::to_string(index) + ": " + what), index_(index) {}
  std::size_t index() const { return index_; }

private:
  std::size_t index_;
};

/// Receives each mask as it is produced, with the frame index and stem.
using MaskSink = std::function<void(std::size_t index, const std::string& stem, const ForegroundMask& mask)>;

/// Loads, segments and emits every frame of `source` in order. Disk I/O is
/// excluded from the returned timings. Any load or decode failure aborts the
/// run with a SequenceError naming the frame index.
RunStats process_sequence(const SequenceSource& source, const PipelineConfig& config, const MaskSink& sink = {});

} // namespace rgbdseg
