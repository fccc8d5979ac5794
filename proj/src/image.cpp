#include "topocolor/image.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>

namespace topocolor {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngPixels {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // big-endian samples as stored in the file
};

void png_warn(png_structp, png_const_charp) {}

// libpng reports errors by longjmp to png_jmpbuf; every object with a
// destructor is constructed before the setjmp call.
PngPixels read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DataError("cannot open image: " + path.string());
  PngPixels out;
  std::vector<png_bytep> rows;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("png: cannot decode " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = out.bytes.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png_raw(const std::filesystem::path& path, int width, int height, int color_type,
                   int bit_depth, const std::uint8_t* bytes, std::size_t stride) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw DataError("cannot write image: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("png: cannot encode " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(bytes + stride * static_cast<std::size_t>(y)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image<std::uint16_t> to_u16(const PngPixels& px, const std::filesystem::path& path) {
  if (px.channels != 1) throw DataError("expected a single-channel image: " + path.string());
  Image<std::uint16_t> img(px.width, px.height, 1);
  const std::size_t n = static_cast<std::size_t>(px.width) * px.height;
  for (std::size_t i = 0; i < n; ++i)
    img.data[i] = px.bit_depth == 16
                      ? static_cast<std::uint16_t>((px.bytes[2 * i] << 8) | px.bytes[2 * i + 1])
                      : px.bytes[i];
  return img;
}

}  // namespace

RgbImage read_rgb_png(const std::filesystem::path& path) {
  const auto px = read_png(path);
  if (px.bit_depth != 8) throw DataError("expected an 8-bit color image: " + path.string());
  RgbImage img(px.width, px.height, 3);
  const std::size_t n = static_cast<std::size_t>(px.width) * px.height;
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      img.data[3 * i + c] = px.channels == 1 ? px.bytes[i] : px.bytes[3 * i + c];
  return img;
}

DepthImage read_depth_png(const std::filesystem::path& path) {
  const auto px = read_png(path);
  if (px.bit_depth != 16) throw DataError("expected a 16-bit depth image: " + path.string());
  return to_u16(px, path);
}

LabelImage read_label_png(const std::filesystem::path& path) { return to_u16(read_png(path), path); }

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  if (image.channels != 3) throw InvalidArgument("write_png: RGB image needs 3 channels");
  write_png_raw(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, image.data.data(),
                static_cast<std::size_t>(image.width) * 3);
}

void write_png(const std::filesystem::path& path, const Image<std::uint16_t>& image) {
  if (image.channels != 1) throw InvalidArgument("write_png: 16-bit image must be single-channel");
  std::vector<std::uint8_t> bytes(image.data.size() * 2);
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    bytes[2 * i] = static_cast<std::uint8_t>(image.data[i] >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(image.data[i] & 0xff);
  }
  write_png_raw(path, image.width, image.height, PNG_COLOR_TYPE_GRAY, 16, bytes.data(),
                static_cast<std::size_t>(image.width) * 2);
}

}  // namespace topocolor
