#include "rgbdseg/engine.hpp"

#include <chrono>

namespace rgbdseg {

namespace {
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}
} // namespace

std::string_view to_string(Algorithm a) { return a == Algorithm::gmm ? "gmm" : "pbas"; }
std::string_view to_string(Mode m) { return m == Mode::rgbd ? "rgbd" : "rgb_only"; }

Algorithm parse_algorithm(std::string_view name) {
  if (name == "gmm") return Algorithm::gmm;
  if (name == "pbas") return Algorithm::pbas;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "' (expected gmm or pbas)");
}

Mode parse_mode(std::string_view name) {
  if (name == "rgbd") return Mode::rgbd;
  if (name == "rgb_only") return Mode::rgb_only;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "' (expected rgb_only or rgbd)");
}

bool GmmSegmenter::state_equals(const BackgroundSegmenter& other) const {
  const auto* o = dynamic_cast<const GmmSegmenter*>(&other);
  return o != nullptr && grid_ == o->grid_;
}

bool PbasSegmenter::state_equals(const BackgroundSegmenter& other) const {
  const auto* o = dynamic_cast<const PbasSegmenter*>(&other);
  return o != nullptr && grid_ == o->grid_;
}

std::unique_ptr<BackgroundSegmenter> make_segmenter(const PipelineConfig& config, int width, int height) {
  switch (config.algorithm) {
  case Algorithm::gmm:
    return std::make_unique<GmmSegmenter>(width, height, config.gmm);
  case Algorithm::pbas:
    return std::make_unique<PbasSegmenter>(width, height, config.pbas, config.seed);
  }
  throw std::invalid_argument("unhandled algorithm");
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)), pool_(config_.worker_count) {
  config_.gmm.validate();
  config_.pbas.validate();
}

const ForegroundMask& Pipeline::process(const RgbImage& rgb, const DepthMap16* depth) {
  const auto start = Clock::now();
  double resample_time = 0.0;
  if (depth != nullptr && config_.mode == Mode::rgbd) {
    if (depth->width != rgb.width || depth->height != rgb.height) {
      const auto rs = Clock::now();
      const DepthMap16 upscaled = resample_depth(*depth, rgb.width, rgb.height);
      resample_time = seconds_since(rs);
      scratch_ = pack_frame(rgb, upscaled);
    } else {
      scratch_ = pack_frame(rgb, *depth);
    }
  } else {
    scratch_ = pack_frame(rgb, DepthMap16(rgb.width, rgb.height, 0));
  }
  stats_.resample_seconds += resample_time;
  return segment(scratch_, seconds_since(start));
}

const ForegroundMask& Pipeline::process(const RgbdFrame& frame) {
  if (config_.mode == Mode::rgb_only) {
    const auto start = Clock::now();
    scratch_ = frame;
    for (auto& p : scratch_.pixels) {
      p.d = 0;
    }
    return segment(scratch_, seconds_since(start));
  }
  return segment(frame, 0.0);
}

const ForegroundMask& Pipeline::segment(const RgbdFrame& frame, double extra_seconds) {
  if (!segmenter_) {
    segmenter_ = make_segmenter(config_, frame.width, frame.height);
    mask_ = ForegroundMask(frame.width, frame.height);
  } else if (frame.width != segmenter_->width() || frame.height != segmenter_->height()) {
    throw DimensionError("frame size changed mid-sequence: expected " + std::to_string(segmenter_->width()) + "x" +
                         std::to_string(segmenter_->height()) + ", got " + std::to_string(frame.width) + "x" +
                         std::to_string(frame.height));
  }
  const auto start = Clock::now();
  segmenter_->apply(frame, mask_, pool_);
  const double elapsed = seconds_since(start) + extra_seconds;
  stats_.frame_seconds.push_back(elapsed);
  stats_.total_seconds += elapsed;
  ++stats_.frames_processed;
  return mask_;
}

RunStats process_sequence(const SequenceSource& source, const PipelineConfig& config, const MaskSink& sink) {
  if (source.empty()) {
    throw std::invalid_argument("process_sequence: sequence has no frames");
  }
  if (config.mode == Mode::rgbd && !source.has_depth()) {
    throw std::invalid_argument("process_sequence: rgbd mode needs a depth stream");
  }
  if (config.emit_masks) {
    std::filesystem::create_directories(config.out_dir);
  }

  Pipeline pipeline(config);
  for (std::size_t i = 0; i < source.size(); ++i) {
    const FrameEntry& entry = source.entry(i);
    RgbImage rgb;
    std::optional<DepthMap16> depth;
    try {
      rgb = load_rgb(entry.rgb);
      if (config.mode == Mode::rgbd) {
        depth = load_depth(entry.depth);
      }
    } catch (const std::exception& e) {
      throw SequenceError(i, e.what());
    }

    const ForegroundMask* mask = nullptr;
    try {
      mask = &pipeline.process(rgb, depth ? &*depth : nullptr);
    } catch (const DimensionError& e) {
      throw SequenceError(i, e.what());
    }

    if (config.emit_masks) {
      save_mask(config.out_dir / (entry.stem + ".png"), *mask);
    }
    if (sink) {
      sink(i, entry.stem, *mask);
    }
  }
  return pipeline.stats();
}

} // namespace rgbdseg
