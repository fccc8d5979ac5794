#include "topocolor/color.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "topocolor/error.hpp"

namespace topocolor {

namespace {

// D65 / 2 degree reference white, Y normalized to 1.
constexpr double kWhiteX = 0.95047;
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = 1.08883;

// Linear sRGB -> XYZ (D65).
constexpr std::array<std::array<double, 3>, 3> kRgbToXyz{{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};

constexpr std::array<std::array<double, 3>, 3> kXyzToRgb{{
    {3.2404542, -1.5371385, -0.4985314},
    {-0.9692660, 1.8760108, 0.0415560},
    {0.0556434, -0.2040259, 1.0572252},
}};

constexpr double kEpsilon = 216.0 / 24389.0;  // (6/29)^3
constexpr double kKappa = 24389.0 / 27.0;     // (29/3)^3

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
  return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

double lab_f_inv(double f) {
  const double t = f * f * f;
  return t > kEpsilon ? t : (116.0 * f - 16.0) / kKappa;
}

std::uint8_t to_channel(double c) {
  const double v = std::round(std::clamp(c, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(v);
}

}  // namespace

Lab srgb_to_lab(Srgb c) { 
  return srgb_to_lab(static_cast<double>(c.r), static_cast<double>(c.g), static_cast<double>(c.b));
 }

Lab srgb_to_lab(double r, double g, double b) {
  const double rl = srgb_to_linear(r / 255.0);
  const double gl = srgb_to_linear(g / 255.0);
  const double bl = srgb_to_linear(b / 255.0);
  const auto& m = kRgbToXyz;
  const double x = m[0][0] * rl + m[0][1] * gl + m[0][2] * bl;
  const double y = m[1][0] * rl + m[1][1] * gl + m[1][2] * bl;
  const double z = m[2][0] * rl + m[2][1] * gl + m[2][2] * bl;
  const double fx = lab_f(x / kWhiteX);
  const double fy = lab_f(y / kWhiteY);
  const double fz = lab_f(z / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Srgb lab_to_srgb(const Lab& c) {
  const double fy = (c.l + 16.0) / 116.0;
  const double fx = fy + c.a / 500.0;
  const double fz = fy - c.b / 200.0;
  const double x = lab_f_inv(fx) * kWhiteX;
  const double y = lab_f_inv(fy) * kWhiteY;
  const double z = lab_f_inv(fz) * kWhiteZ;
  const auto& m = kXyzToRgb;
  const double rl = m[0][0] * x + m[0][1] * y + m[0][2] * z;
  const double gl = m[1][0] * x + m[1][1] * y + m[1][2] * z;
  const double bl = m[2][0] * x + m[2][1] * y + m[2][2] * z;
  return {to_channel(linear_to_srgb(std::max(rl, 0.0))),
          to_channel(linear_to_srgb(std::max(gl, 0.0))),
          to_channel(linear_to_srgb(std::max(bl, 0.0)))};
}

std::vector<int> grid_channel_values(int step) {
  if (step <= 0) throw InvalidArgument("color grid step must be positive");
  std::vector<int> values;
  for (int v = 0; v <= 255; v += step) values.push_back(v);
  if (values.back() != 255) values.push_back(255);
  return values;
}

ColorSet sample_srgb_grid(int step) {
  const auto values = grid_channel_values(step);
  ColorSet set;
  set.step = step;
  const std::size_t n = values.size();
  set.srgb.reserve(n * n * n);
  for (int r : values)
    for (int g : values)
      for (int b : values)
        set.srgb.push_back({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                            static_cast<std::uint8_t>(b)});
  set.lab.reserve(set.srgb.size());
  for (const auto& c : set.srgb) set.lab.push_back(srgb_to_lab(c));
  return set;
}

}  // namespace topocolor
