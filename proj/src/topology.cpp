#include "topocolor/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "topocolor/error.hpp"

namespace topocolor {

Filtration slice_filtration(std::span<const Eigen::Vector3d> points, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("slice_filtration: radius must be positive");
  Filtration f;
  const std::size_t n = points.size();
  f.vertices.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.vertices[i] = {i, points[i].x()};
  std::sort(f.vertices.begin(), f.vertices.end(), [](const auto& a, const auto& b) {
    return a.value < b.value || (a.value == b.value && a.id < b.id);
  });

  // Sweep along x so only pairs with |dx| <= radius are examined.
  std::vector<std::size_t> by_x(n);
  for (std::size_t k = 0; k < n; ++k) by_x[k] = f.vertices[k].id;
  const double r2 = radius * radius;
  for (std::size_t a = 0; a < n; ++a) {
    const auto& p = points[by_x[a]];
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto& q = points[by_x[b]];
      if (q.x() - p.x() > radius) break;
      if ((p - q).squaredNorm() <= r2) {
        const std::size_t u = std::min(by_x[a], by_x[b]), v = std::max(by_x[a], by_x[b]);
        f.edges.push_back({u, v, std::max(p.x(), q.x())});
      }
    }
  }
  std::sort(f.edges.begin(), f.edges.end(), [](const auto& a, const auto& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });
  return f;
}

PersistenceDiagram h0_persistence(const Filtration& f, double cap) {
  const std::size_t n = f.vertices.size();
  if (n == 0) return {};
  std::size_t max_id = 0;
  for (const auto& v : f.vertices) max_id = std::max(max_id, v.id);
  std::vector<double> birth(max_id + 1, 0.0);
  std::vector<std::size_t> rank(max_id + 1, 0);  // position in the vertex order
  std::vector<bool> present(max_id + 1, false);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& v = f.vertices[k];
    if (present[v.id]) throw InvalidArgument("h0_persistence: duplicate vertex id");
    present[v.id] = true;
    birth[v.id] = v.value;
    rank[v.id] = k;
  }
  for (const auto& v : f.vertices)
    if (v.value > cap) throw InvalidArgument("h0_persistence: cap below a filtration value");

  // The root of every set is its oldest vertex, so the elder rule reduces to
  // comparing roots by (birth, rank).
  std::vector<std::size_t> parent(max_id + 1);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  const auto older = [&](std::size_t a, std::size_t b) {
    return birth[a] < birth[b] || (birth[a] == birth[b] && rank[a] < rank[b]);
  };
  std::vector<double> death(max_id + 1, cap);
  for (const auto& e : f.edges) {
    if (e.u > max_id || e.v > max_id || !present[e.u] || !present[e.v])
      throw InvalidArgument("h0_persistence: edge references unknown vertex");
    if (e.value > cap) throw InvalidArgument("h0_persistence: cap below a filtration value");
    std::size_t a = find(e.u), b = find(e.v);
    if (a == b) continue;
    if (older(b, a)) std::swap(a, b);
    death[b] = e.value;
    parent[b] = a;
  }
  PersistenceDiagram d;
  d.reserve(n);
  for (const auto& v : f.vertices) d.push_back({birth[v.id], death[v.id]});
  return d;
}

std::vector<double> persistence_image(const PersistenceDiagram& d, const PersistenceImageParams& p) {
  if (p.height < 1 || p.width < 1) throw InvalidArgument("persistence_image: empty grid");
  if (!(p.sigma > 0.0)) throw InvalidArgument("persistence_image: sigma must be positive");
  if (!(p.birth_max > p.birth_min) || !(p.pers_max > p.pers_min))
    throw InvalidArgument("persistence_image: empty range");
  const auto h = static_cast<std::size_t>(p.height), w = static_cast<std::size_t>(p.width);
  std::vector<double> img(h * w, 0.0);
  const double db = (p.birth_max - p.birth_min) / p.width;
  const double dp = (p.pers_max - p.pers_min) / p.height;
  const double saturation = p.weight_saturation > 0.0 ? p.weight_saturation : p.pers_max;
  const double inv = 1.0 / (2.0 * p.sigma * p.sigma);
  std::vector<double> gb(w), gp(h);
  for (const auto& pair : d) {
    const double pers = pair.death - pair.birth;
    const double weight = std::clamp(pers / saturation, 0.0, 1.0);
    if (weight == 0.0) continue;
    for (std::size_t c = 0; c < w; ++c) {
      const double x = p.birth_min + (static_cast<double>(c) + 0.5) * db - pair.birth;
      gb[c] = std::exp(-x * x * inv);
    }
    for (std::size_t r = 0; r < h; ++r) {
      const double y = p.pers_min + (static_cast<double>(r) + 0.5) * dp - pers;
      gp[r] = weight * std::exp(-y * y * inv);
    }
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) img[r * w + c] += gp[r] * gb[c];
  }
  return img;
}

void write_diagram_csv(std::ostream& out, const PersistenceDiagram& d) {
  out << "birth,death\n";
  char buf[64];
  for (const auto& p : d) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.birth, p.death);
    out << buf;
  }
}

}  // namespace topocolor
