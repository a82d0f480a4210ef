#include "rgbdseg/frame_io.hpp"

#include <algorithm>
#include <cctype>

namespace rgbdseg {
namespace fs = std::filesystem;

namespace {

void require_positive(int w, int h, const char* what) {
  if (w <= 0 || h <= 0) {
    throw DimensionError(std::string(what) + ": dimensions must be positive, got " +
                         std::to_string(w) + "x" + std::to_string(h));
  }
}

std::size_t area(int w, int h) { return static_cast<std::size_t>(w) * static_cast<std::size_t>(h); }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

RawImage read_any(const fs::path& path) {
  const auto ext = lower(path.extension().string());
  if (ext == ".pgm") {
    return read_pgm(path);
  }
  return read_png(path);
}

} // namespace

DepthMap16::DepthMap16(int w, int h, std::uint16_t fill) : width(w), height(h) {
  require_positive(w, h, "DepthMap16");
  values.assign(area(w, h), fill);
}

RgbImage::RgbImage(int w, int h) : width(w), height(h) {
  require_positive(w, h, "RgbImage");
  data.assign(3 * area(w, h), 0);
}

RgbdFrame::RgbdFrame(int w, int h, RgbdPixel fill) : width(w), height(h) {
  require_positive(w, h, "RgbdFrame");
  pixels.assign(area(w, h), fill);
}

ForegroundMask::ForegroundMask(int w, int h, std::uint8_t fill) : width(w), height(h) {
  require_positive(w, h, "ForegroundMask");
  values.assign(area(w, h), fill);
}

std::size_t ForegroundMask::foreground_count() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](std::uint8_t v) { return v != kBackground; }));
}

GroundTruthMask::GroundTruthMask(int w, int h, GtLabel fill) : width(w), height(h) {
  require_positive(w, h, "GroundTruthMask");
  labels.assign(area(w, h), fill);
}

RgbdFrame pack_frame(const RgbImage& rgb, const DepthMap16& depth) {
  if (rgb.width != depth.width || rgb.height != depth.height) {
    throw DimensionError("pack_frame: rgb is " + std::to_string(rgb.width) + "x" + std::to_string(rgb.height) +
                         " but depth is " + std::to_string(depth.width) + "x" + std::to_string(depth.height));
  }
  RgbdFrame frame(rgb.width, rgb.height);
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
    frame.pixels[i] = RgbdPixel{rgb.data[3 * i], rgb.data[3 * i + 1], rgb.data[3 * i + 2],
                                scale_depth_16_to_8(depth.values[i])};
  }
  return frame;
}

RgbImage unpack_rgb(const RgbdFrame& frame) {
  RgbImage rgb(frame.width, frame.height);
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
    rgb.data[3 * i] = frame.pixels[i].r;
    rgb.data[3 * i + 1] = frame.pixels[i].g;
    rgb.data[3 * i + 2] = frame.pixels[i].b;
  }
  return rgb;
}

std::vector<std::uint8_t> unpack_depth8(const RgbdFrame& frame) {
  std::vector<std::uint8_t> d(frame.pixels.size());
  std::transform(frame.pixels.begin(), frame.pixels.end(), d.begin(), [](const RgbdPixel& p) { return p.d; });
  return d;
}

DepthMap16 resample_depth(const DepthMap16& depth, int target_width, int target_height) {
  require_positive(target_width, target_height, "resample_depth");
  if (depth.width == target_width && depth.height == target_height) {
    return depth;
  }
  // Output centre (x + 0.5) maps to source coordinate (x + 0.5) * sw / tw; the
  // nearest source centre is the floor of that, computed exactly in integers.
  auto source_index = [](int x, int src, int dst) {
    const long long s = ((2LL * x + 1) * src) / (2LL * dst);
    return static_cast<int>(std::min<long long>(s, src - 1));
  };
  std::vector<int> xs(static_cast<std::size_t>(target_width));
  for (int x = 0; x < target_width; ++x) {
    xs[static_cast<std::size_t>(x)] = source_index(x, depth.width, target_width);
  }
  DepthMap16 out(target_width, target_height);
  for (int y = 0; y < target_height; ++y) {
    const int sy = source_index(y, depth.height, target_height);
    const std::uint16_t* src_row = depth.values.data() + depth.index(0, sy);
    std::uint16_t* dst_row = out.values.data() + out.index(0, y);
    for (int x = 0; x < target_width; ++x) {
      dst_row[x] = src_row[xs[static_cast<std::size_t>(x)]];
    }
  }
  return out;
}

RgbImage load_rgb(const fs::path& path) {
  const RawImage raw = read_any(path);
  RgbImage rgb(raw.width, raw.height);
  const int shift = raw.bit_depth == 16 ? 8 : 0;
  for (std::size_t i = 0; i < rgb.pixel_count(); ++i) {
    const std::uint16_t* px = raw.samples.data() + i * static_cast<std::size_t>(raw.channels);
    switch (raw.channels) {
    case 1:
    case 2: // gray (+alpha)
      rgb.data[3 * i] = rgb.data[3 * i + 1] = rgb.data[3 * i + 2] = static_cast<std::uint8_t>(px[0] >> shift);
      break;
    case 3:
    case 4: // rgb (+alpha)
      for (int c = 0; c < 3; ++c) {
        rgb.data[3 * i + static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(px[c] >> shift);
      }
      break;
    default:
      throw FormatError("unsupported channel count in '" + path.string() + "'");
    }
  }
  return rgb;
}

DepthMap16 load_depth(const fs::path& path) {
  const RawImage raw = read_any(path);
  if (raw.channels != 1) {
    throw FormatError("depth image '" + path.string() + "' must be single-channel, has " +
                      std::to_string(raw.channels) + " channels");
  }
  DepthMap16 depth(raw.width, raw.height);
  const std::uint16_t widen = raw.bit_depth == 16 ? 1 : 257;
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    depth.values[i] = static_cast<std::uint16_t>(raw.samples[i] * widen);
  }
  return depth;
}

GtLabel ground_truth_label(std::uint8_t value) {
  switch (value) {
  case 0:
    return GtLabel::background;
  case 255:
    return GtLabel::foreground;
  default:
    return GtLabel::ignore;
  }
}

GroundTruthMask load_ground_truth(const fs::path& path) {
  const RawImage raw = read_any(path);
  if (raw.channels != 1 || raw.bit_depth != 8) {
    throw FormatError("ground truth '" + path.string() + "' must be 8-bit single-channel");
  }
  GroundTruthMask gt(raw.width, raw.height);
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    gt.labels[i] = ground_truth_label(static_cast<std::uint8_t>(raw.samples[i]));
  }
  return gt;
}

void save_mask(const fs::path& path, const ForegroundMask& mask) {
  write_png_gray8(path, mask.width, mask.height, mask.values);
}

ForegroundMask load_mask(const fs::path& path) {
  const RawImage raw = read_any(path);
  if (raw.channels != 1 || raw.bit_depth != 8) {
    throw FormatError("mask '" + path.string() + "' must be 8-bit single-channel");
  }
  ForegroundMask mask(raw.width, raw.height);
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    mask.values[i] = raw.samples[i] == 0 ? ForegroundMask::kBackground : ForegroundMask::kForeground;
  }
  return mask;
}

std::vector<fs::path> list_images(const fs::path& dir, const std::vector<std::string>& extensions) {
  if (!fs::is_directory(dir)) {
    throw FormatError("not a directory: '" + dir.string() + "'");
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) {
      continue;
    }
    const auto ext = lower(e.path().extension().string());
    if (std::find(extensions.begin(), extensions.end(), ext) != extensions.end()) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

std::string frame_key(const std::string& stem) {
  std::size_t start = stem.size();
  while (start > 0 && std::isdigit(static_cast<unsigned char>(stem[start - 1]))) {
    --start;
  }
  if (start == stem.size()) {
    return stem;
  }
  std::size_t first_nonzero = start;
  while (first_nonzero + 1 < stem.size() && stem[first_nonzero] == '0') {
    ++first_nonzero;
  }
  return stem.substr(first_nonzero);
}

SequenceSource::SequenceSource(fs::path rgb_dir, std::optional<fs::path> depth_dir,
                               std::optional<fs::path> gt_dir)
    : rgb_dir_(std::move(rgb_dir)), depth_dir_(std::move(depth_dir)), gt_dir_(std::move(gt_dir)) {
  const auto rgb_files = list_images(rgb_dir_, {".png", ".ppm", ".pgm"});
  std::vector<fs::path> depth_files;
  if (depth_dir_) {
    depth_files = list_images(*depth_dir_, {".png", ".pgm"});
    if (depth_files.size() != rgb_files.size()) {
      throw FormatError("frame count mismatch: " + std::to_string(rgb_files.size()) + " rgb frames in '" +
                        rgb_dir_.string() + "' vs " + std::to_string(depth_files.size()) +
                        " depth frames in '" + depth_dir_->string() + "'");
    }
  }
  if (gt_dir_) {
    gt_files_ = list_images(*gt_dir_, {".png", ".pgm"});
  }
  frames_.reserve(rgb_files.size());
  for (std::size_t i = 0; i < rgb_files.size(); ++i) {
    frames_.push_back(FrameEntry{rgb_files[i].stem().string(), rgb_files[i],
                                 depth_dir_ ? depth_files[i] : fs::path{}});
  }
}

std::optional<fs::path> SequenceSource::ground_truth_for(std::size_t i) const {
  const auto& stem = frames_.at(i).stem;
  for (const auto& p : gt_files_) {
    if (p.stem().string() == stem) {
      return p;
    }
  }
  const auto key = frame_key(stem);
  for (const auto& p : gt_files_) {
    if (frame_key(p.stem().string()) == key) {
      return p;
    }
  }
  return std::nullopt;
}

} // namespace rgbdseg
