#include "rgbdseg/image_file.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

namespace rgbdseg {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f != nullptr) {
      std::fclose(f);
    }
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw FormatError("cannot open '" + path.string() + "'");
  }
  return f;
}

// libpng reports errors through longjmp; the message is captured here so it
// can be rethrown as an exception once control is back in C++ frames.
struct PngErrorState {
  std::string message;
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  if (state != nullptr) {
    state->message = msg;
  }
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

class PngReader {
public:
  PngReader() {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err_, png_error_fn, png_warning_fn);
    if (png_ != nullptr) {
      info_ = png_create_info_struct(png_);
    }
  }
  ~PngReader() { png_destroy_read_struct(&png_, info_ != nullptr ? &info_ : nullptr, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  PngErrorState err_;
};

class PngWriter {
public:
  PngWriter() {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err_, png_error_fn, png_warning_fn);
    if (png_ != nullptr) {
      info_ = png_create_info_struct(png_);
    }
  }
  ~PngWriter() { png_destroy_write_struct(&png_, info_ != nullptr ? &info_ : nullptr); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  PngErrorState err_;
};

// Row buffers are allocated before setjmp so that no C++ object with a
// non-trivial destructor is created between setjmp and a possible longjmp.
bool decode_png(PngReader& r, std::FILE* f, RawImage& out, std::vector<png_byte>& buffer,
                std::vector<png_bytep>& rows) {
  if (setjmp(png_jmpbuf(r.png_))) {
    return false;
  }
  png_init_io(r.png_, f);
  png_read_info(r.png_, r.info_);

  const int color_type = png_get_color_type(r.png_, r.info_);
  const int depth = png_get_bit_depth(r.png_, r.info_);
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(r.png_);
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(r.png_);
  }
  if (depth == 16) {
    png_set_swap(r.png_); // host little-endian order for direct uint16 reads
  }
  png_read_update_info(r.png_, r.info_);

  out.width = static_cast<int>(png_get_image_width(r.png_, r.info_));
  out.height = static_cast<int>(png_get_image_height(r.png_, r.info_));
  out.channels = png_get_channels(r.png_, r.info_);
  out.bit_depth = png_get_bit_depth(r.png_, r.info_);

  const std::size_t rowbytes = png_get_rowbytes(r.png_, r.info_);
  buffer.resize(rowbytes * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) {
    rows[static_cast<std::size_t>(y)] = buffer.data() + rowbytes * static_cast<std::size_t>(y);
  }
  png_read_image(r.png_, rows.data());
  png_read_end(r.png_, nullptr);
  return true;
}

bool encode_png(PngWriter& w, std::FILE* f, int width, int height, int color_type,
                int bit_depth, std::vector<png_bytep>& rows) {
  if (setjmp(png_jmpbuf(w.png_))) {
    return false;
  }
  png_init_io(w.png_, f);
  png_set_IHDR(w.png_, w.info_, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(w.png_, 3);
  png_write_info(w.png_, w.info_);
  if (bit_depth == 16) {
    png_set_swap(w.png_);
  }
  png_write_image(w.png_, rows.data());
  png_write_end(w.png_, nullptr);
  return true;
}

void write_png(const std::filesystem::path& path, int width, int height, int color_type,
               int bit_depth, int channels, const void* data) {
  if (width <= 0 || height <= 0) {
    throw FormatError("refusing to write empty image '" + path.string() + "'");
  }
  auto f = open_file(path, "wb");
  PngWriter w;
  if (w.png_ == nullptr || w.info_ == nullptr) {
    throw FormatError("libpng initialisation failed");
  }
  const std::size_t rowbytes =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(channels) * (bit_depth / 8);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  auto* base = static_cast<png_bytep>(const_cast<void*>(data));
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] = base + rowbytes * static_cast<std::size_t>(y);
  }
  if (!encode_png(w, f.get(), width, height, color_type, bit_depth, rows)) {
    throw FormatError("PNG encode failed for '" + path.string() + "': " + w.err_.message);
  }
}

} // namespace

RawImage read_png(const std::filesystem::path& path) {
  auto f = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, sizeof(sig), f.get()) != sizeof(sig) || png_sig_cmp(sig, 0, sizeof(sig)) != 0) {
    throw FormatError("'" + path.string() + "' is not a PNG file");
  }
  PngReader r;
  if (r.png_ == nullptr || r.info_ == nullptr) {
    throw FormatError("libpng initialisation failed");
  }
  png_set_sig_bytes(r.png_, sizeof(sig));

  RawImage out;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (!decode_png(r, f.get(), out, buffer, rows)) {
    throw FormatError("PNG decode failed for '" + path.string() + "': " + r.err_.message);
  }

  const std::size_t count =
      static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height) * static_cast<std::size_t>(out.channels);
  out.samples.resize(count);
  if (out.bit_depth == 16) {
    for (std::size_t i = 0; i < count; ++i) {
      out.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      out.samples[i] = buffer[i];
    }
  }
  return out;
}

void write_png_gray8(const std::filesystem::path& path, int width, int height,
                     const std::vector<std::uint8_t>& values) {
  if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw FormatError("gray8 buffer size mismatch for '" + path.string() + "'");
  }
  write_png(path, width, height, PNG_COLOR_TYPE_GRAY, 8, 1, values.data());
}

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& interleaved) {
  if (interleaved.size() != 3 * static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw FormatError("rgb8 buffer size mismatch for '" + path.string() + "'");
  }
  write_png(path, width, height, PNG_COLOR_TYPE_RGB, 8, 3, interleaved.data());
}

void write_png_gray16(const std::filesystem::path& path, int width, int height,
                      const std::vector<std::uint16_t>& values) {
  if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw FormatError("gray16 buffer size mismatch for '" + path.string() + "'");
  }
  write_png(path, width, height, PNG_COLOR_TYPE_GRAY, 16, 1, values.data());
}

namespace {

// Reads one whitespace/comment-delimited ASCII integer from a PNM header.
long read_pnm_field(std::istream& in, const std::filesystem::path& path) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      break;
    }
  }
  long value = -1;
  if (!(in >> value) || value < 0) {
    throw FormatError("malformed PGM header in '" + path.string() + "'");
  }
  return value;
}

} // namespace

RawImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open '" + path.string() + "'");
  }
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') {
    throw FormatError("'" + path.string() + "' is not a binary PGM (P5) file");
  }
  RawImage out;
  out.width = static_cast<int>(read_pnm_field(in, path));
  out.height = static_cast<int>(read_pnm_field(in, path));
  const long maxval = read_pnm_field(in, path);
  if (out.width <= 0 || out.height <= 0 || maxval <= 0 || maxval > 65535) {
    throw FormatError("unsupported PGM geometry or maxval in '" + path.string() + "'");
  }
  in.get(); // single whitespace before the raster
  out.channels = 1;
  out.bit_depth = maxval > 255 ? 16 : 8;

  const std::size_t count = static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height);
  const std::size_t bytes = count * (out.bit_depth / 8);
  std::vector<unsigned char> raster(bytes);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw FormatError("truncated PGM raster in '" + path.string() + "'");
  }
  out.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.samples[i] = out.bit_depth == 16
                         ? static_cast<std::uint16_t>((raster[2 * i] << 8) | raster[2 * i + 1])
                         : raster[i];
  }
  return out;
}

void write_pgm16(const std::filesystem::path& path, int width, int height,
                 const std::vector<std::uint16_t>& values) {
  if (width <= 0 || height <= 0 ||
      values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw FormatError("gray16 buffer size mismatch for '" + path.string() + "'");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot open '" + path.string() + "' for writing");
  }
  out << "P5\n" << width << ' ' << height << "\n65535\n";
  std::vector<unsigned char> raster(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    raster[2 * i] = static_cast<unsigned char>(values[i] >> 8);
    raster[2 * i + 1] = static_cast<unsigned char>(values[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!out) {
    throw FormatError("write failed for '" + path.string() + "'");
  }
}

} // namespace rgbdseg
