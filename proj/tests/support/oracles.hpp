#pragma once

// Independent reference implementations used to check the library.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "topocolor/color.hpp"
#include "topocolor/topology.hpp"

namespace oracle {

/// sRGB -> Lab with the RGB -> XYZ matrix derived from the sRGB primary
/// chromaticities, scaled so that white lands on the D65 reference white, and
/// the original CIE 0.008856 / 903.3 constants.
inline topocolor::Lab srgb_to_lab(double r8, double g8, double b8) {
  const Eigen::Vector3d white(0.95047, 1.0, 1.08883);
  const double xy[3][2] = {{0.64, 0.33}, {0.30, 0.60}, {0.15, 0.06}};
  Eigen::Matrix3d p;
  for (int k = 0; k < 3; ++k)
    p.col(k) << xy[k][0] / xy[k][1], 1.0, (1.0 - xy[k][0] - xy[k][1]) / xy[k][1];
  const Eigen::Vector3d s = p.fullPivLu().solve(white);
  const Eigen::Matrix3d m = p * s.asDiagonal();

  auto expand = [](double v) {
    v /= 255.0;
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
  };
  const Eigen::Vector3d xyz = m * Eigen::Vector3d(expand(r8), expand(g8), expand(b8));
  auto f = [](double t) { return t > 0.008856 ? std::cbrt(t) : (903.3 * t + 16.0) / 116.0; };
  const double fx = f(xyz(0) / white(0)), fy = f(xyz(1) / white(1)), fz = f(xyz(2) / white(2));
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

/// Brute-force H0 persistence. At every distinct filtration value the complex
/// is rebuilt from scratch and its components found by graph search. A vertex
/// is the representative of its component while it is the oldest member
/// (smallest (value, rank)); it dies at the first value where it is not.
inline std::vector<std::pair<double, double>> h0_bruteforce(const topocolor::Filtration& f,
                                                            double cap) {
  const std::size_t n = f.vertices.size();
  std::vector<double> value(n);
  std::vector<std::size_t> rank(n);
  // Vertex ids may be arbitrary; index by position in the vertex list.
  std::vector<std::size_t> pos_of_id;
  for (std::size_t k = 0; k < n; ++k) {
    const auto id = f.vertices[k].id;
    if (pos_of_id.size() <= id) pos_of_id.resize(id + 1, n);
    pos_of_id[id] = k;
    value[k] = f.vertices[k].value;
    rank[k] = k;
  }
  std::vector<double> times(value);
  for (const auto& e : f.edges) times.push_back(e.value);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  auto older = [&](std::size_t a, std::size_t b) {
    return value[a] != value[b] ? value[a] < value[b] : rank[a] < rank[b];
  };
  std::vector<double> death(n, cap);
  std::vector<bool> dead(n, false);
  for (double t : times) {
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& e : f.edges) {
      if (e.value > t) continue;
      const auto a = pos_of_id[e.u], b = pos_of_id[e.v];
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    std::vector<int> comp(n, -1);
    std::vector<std::size_t> oldest;
    for (std::size_t s = 0; s < n; ++s) {
      if (value[s] > t || comp[s] >= 0) continue;
      const int c = static_cast<int>(oldest.size());
      oldest.push_back(s);
      std::vector<std::size_t> stack{s};
      comp[s] = c;
      while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        if (older(u, oldest[c])) oldest[c] = u;
        for (auto v : adj[u])
          if (comp[v] < 0 && value[v] <= t) {
            comp[v] = c;
            stack.push_back(v);
          }
      }
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (value[v] > t || dead[v]) continue;
      if (oldest[comp[v]] != v) {
        dead[v] = true;
        death[v] = t;
      }
    }
  }
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t v = 0; v < n; ++v) pairs.emplace_back(value[v], death[v]);
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

/// Brute-force persistence image by direct evaluation at each pixel center.
inline std::vector<double> persistence_image(const topocolor::PersistenceDiagram& d,
                                             const topocolor::PersistenceImageParams& p) {
  std::vector<double> img(static_cast<std::size_t>(p.height * p.width), 0.0);
  const double sat = p.weight_saturation > 0 ? p.weight_saturation : p.pers_max;
  const double db = (p.birth_max - p.birth_min) / p.width;
  const double dp = (p.pers_max - p.pers_min) / p.height;
  for (int r = 0; r < p.height; ++r)
    for (int c = 0; c < p.width; ++c) {
      const double x = p.birth_min + (c + 0.5) * db;
      const double y = p.pers_min + (r + 0.5) * dp;
      double acc = 0.0;
      for (const auto& pr : d) {
        const double pers = pr.death - pr.birth;
        const double w = std::clamp(pers / sat, 0.0, 1.0);
        const double dx = x - pr.birth, dy = y - pers;
        acc += w * std::exp(-(dx * dx + dy * dy) / (2.0 * p.sigma * p.sigma));
      }
      img[static_cast<std::size_t>(r * p.width + c)] = acc;
    }
  return img;
}

}  // namespace oracle
