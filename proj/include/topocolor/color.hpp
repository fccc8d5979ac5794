#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace topocolor {

/// 8-bit sRGB color.
struct Srgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Srgb&, const Srgb&) = default;
  friend auto operator<=>(const Srgb&, const Srgb&) = default;

  /// 0xRRGGBB packing, used as a compact key and in file formats.
  std::uint32_t packed() const {
    return (std::uint32_t{r} << 16) | (std::uint32_t{g} << 8) | std::uint32_t{b};
  }
  static Srgb unpack(std::uint32_t v) {
    return {static_cast<std::uint8_t>((v >> 16) & 0xff),
            static_cast<std::uint8_t>((v >> 8) & 0xff),
            static_cast<std::uint8_t>(v & 0xff)};
  }
};

/// CIE 1976 L*a*b* coordinates (D65 reference white, 2 degree observer).
struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const Lab&, const Lab&) = default;
};

Lab srgb_to_lab(Srgb c);

/// Same conversion for real-valued channel intensities in [0, 255], e.g. the
/// channel-wise mean of a set of colors.
Lab srgb_to_lab(double r, double g, double b);

/// Inverse of srgb_to_lab. Out-of-gamut results are clamped channel-wise.
Srgb lab_to_srgb(const Lab& c);

/// HyAB color difference: |dL*| + Euclidean distance in the (a*, b*) plane.
inline double hyab(const Lab& m, const Lab& n) {
  const double da = m.a - n.a;
  const double db = m.b - n.b;
  return std::abs(m.l - n.l) + std::sqrt(da * da + db * db);
}

/// Sampled sRGB cube with the matching Lab coordinates, in the same order.
struct ColorSet {
  int step = 0;
  std::vector<Srgb> srgb;
  std::vector<Lab> lab;

  std::size_t size() const { return srgb.size(); }
};

/// Channel values {0, step, 2*step, ...}; 255 is appended when step does not
/// divide it. Colors are ordered by (r, g, b).
std::vector<int> grid_channel_values(int step);

/// Uniform sRGB grid. step 5 gives 52^3 = 140608 colors.
ColorSet sample_srgb_grid(int step);

}  // namespace topocolor

