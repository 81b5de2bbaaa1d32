#include "neurodrive/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <png.h>

#include "neurodrive/error.hpp"

namespace neurodrive {

RgbImage::RgbImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

void require_network_size(const RgbImage& image) {
  if (image.width != kImageSide || image.height != kImageSide ||
      image.pixels.size() != static_cast<std::size_t>(kImageSide) * kImageSide * 3) {
    fail(ErrorCode::dimension_mismatch, "expected a 224x224x3 image, got " + std::to_string(image.width) + "x" +
                                            std::to_string(image.height));
  }
}

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
  if (image.width <= 0 || image.height <= 0 || width <= 0 || height <= 0) {
    fail(ErrorCode::invalid_argument, "resize of an empty image");
  }
  RgbImage out(width, height);
  const double sx = static_cast<double>(image.width) / width;
  const double sy = static_cast<double>(image.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(image.height - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(image.width - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = image.at(x0, y0, c) * (1.0 - wx) + image.at(x1, y0, c) * wx;
        const double bottom = image.at(x0, y1, c) * (1.0 - wx) + image.at(x1, y1, c) * wx;
        const double v = top * (1.0 - wy) + bottom * wy;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

namespace {

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void append_bytes(png_structp p, png_bytep data, png_size_t len) {
  auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
  buf->insert(buf->end(), data, data + len);
}

void read_bytes(png_structp p, png_bytep data, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(p));
  if (cur->offset + len > cur->bytes.size()) png_error(p, "truncated stream");
  std::memcpy(data, cur->bytes.data() + cur->offset, len);
  cur->offset += len;
}

// libpng reports errors by longjmp; no C++ objects with destructors may live
// in the frames it jumps over, so rows and buffers are prepared by callers.
bool encode_rows(std::vector<std::uint8_t>& out, int width, int height, png_bytep* rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, append_bytes, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

struct DecodeState {
  png_structp png = nullptr;
  png_infop info = nullptr;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
};

bool decode_header(DecodeState& st, ReadCursor& cursor) {
  st.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!st.png) return false;
  st.info = png_create_info_struct(st.png);
  if (!st.info || setjmp(png_jmpbuf(st.png))) return false;
  png_set_read_fn(st.png, &cursor, read_bytes);
  png_read_info(st.png, st.info);
  const auto color = png_get_color_type(st.png, st.info);
  const auto depth = png_get_bit_depth(st.png, st.info);
  if (depth == 16) png_set_strip_16(st.png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(st.png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(st.png);
    png_set_gray_to_rgb(st.png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(st.png);
  png_read_update_info(st.png, st.info);
  st.width = png_get_image_width(st.png, st.info);
  st.height = png_get_image_height(st.png, st.info);
  return png_get_rowbytes(st.png, st.info) == static_cast<png_size_t>(st.width) * 3;
}

bool decode_body(DecodeState& st, png_bytep* rows) {
  if (setjmp(png_jmpbuf(st.png))) return false;
  png_read_image(st.png, rows);
  png_read_end(st.png, nullptr);
  return true;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    fail(ErrorCode::invalid_argument, "image buffer does not match its dimensions");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y) {
    rows[y] = const_cast<png_bytep>(image.pixels.data() + static_cast<std::size_t>(y) * image.width * 3);
  }
  std::vector<std::uint8_t> out;
  if (!encode_rows(out, image.width, image.height, rows.data())) fail(ErrorCode::io, "png encoding failed");
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  const auto bytes = encode_png(image);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) fail(ErrorCode::parse, "not a PNG stream");
  ReadCursor cursor{bytes, 0};
  DecodeState st;
  RgbImage image;
  bool ok = decode_header(st, cursor);
  if (ok) {
    image = RgbImage(static_cast<int>(st.width), static_cast<int>(st.height));
    std::vector<png_bytep> rows(st.height);
    for (png_uint_32 y = 0; y < st.height; ++y) rows[y] = image.pixels.data() + static_cast<std::size_t>(y) * st.width * 3;
    ok = decode_body(st, rows.data());
  }
  png_destroy_read_struct(&st.png, &st.info, nullptr);
  if (!ok) fail(ErrorCode::parse, "corrupt or unsupported PNG");
  return image;
}

RgbImage read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

}  // namespace neurodrive
