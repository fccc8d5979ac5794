#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "topocolor/error.hpp"

namespace topocolor {

/// Interleaved row-major image.
template <class T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c = 1, T fill = T{})
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
  bool empty() const { return data.empty(); }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
};

using DepthImage = Image<std::uint16_t>;  // raw depth units, 0 = no reading
using RgbImage = Image<std::uint8_t>;     // 3 channels
using LabelImage = Image<std::uint16_t>;  // instance ids, 0 = background

RgbImage read_rgb_png(const std::filesystem::path& path);
/// 16-bit single-channel PNG.
DepthImage read_depth_png(const std::filesystem::path& path);
/// 8- or 16-bit single-channel PNG.
LabelImage read_label_png(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png(const std::filesystem::path& path, const Image<std::uint16_t>& image);

}  // namespace topocolor
