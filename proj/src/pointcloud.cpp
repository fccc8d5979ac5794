#include "topocolor/pointcloud.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "topocolor/error.hpp"

namespace topocolor {

ColoredPointCloud ColoredPointCloud::subset(std::span<const std::size_t> ids) const {
  ColoredPointCloud out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(points[i], colors[i]);
  return out;
}

Aabb bounding_box(const ColoredPointCloud& cloud) {
  if (cloud.empty()) throw InvalidArgument("bounding box of an empty cloud");
  Aabb box{cloud.points.front(), cloud.points.front()};
  for (const auto& p : cloud.points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

ColoredPointCloud transform(const ColoredPointCloud& cloud, const Transform& t) {
  ColoredPointCloud out = cloud;
  for (auto& p : out.points) p = t.apply(p);
  return out;
}

ColoredPointCloud to_first_octant(const ColoredPointCloud& cloud) {
  if (cloud.empty()) return cloud;
  const Eigen::Vector3d lo = bounding_box(cloud).min;
  ColoredPointCloud out = cloud;
  for (auto& p : out.points) p -= lo;
  return out;
}

ColoredPointCloud backproject(const DepthImage& depth, const RgbImage& rgb, const LabelImage& labels,
                              std::uint16_t instance_id, const CameraIntrinsics& k) {
  if (depth.width != rgb.width || depth.height != rgb.height || depth.width != labels.width ||
      depth.height != labels.height)
    throw InvalidArgument("backproject: image sizes differ");
  if (rgb.channels != 3) throw InvalidArgument("backproject: RGB image needs 3 channels");
  if (!(k.fx > 0 && k.fy > 0 && k.depth_scale > 0))
    throw InvalidArgument("backproject: invalid camera intrinsics");
  ColoredPointCloud cloud;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      if (labels.at(u, v) != instance_id) continue;
      const std::uint16_t d = depth.at(u, v);
      if (d == 0) continue;
      const double z = d * k.depth_scale;
      cloud.push_back({(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z},
                      {rgb.at(u, v, 0), rgb.at(u, v, 1), rgb.at(u, v, 2)});
    }
  }
  if (cloud.empty())
    throw DataError("backproject: instance " + std::to_string(instance_id) + " has no valid depth");
  return cloud;
}

ColoredPointCloud scale(const ColoredPointCloud& cloud, double sigma_s) {
  if (!(sigma_s > 0.0)) throw InvalidArgument("scale: factor must be positive");
  ColoredPointCloud out = cloud;
  for (auto& p : out.points) p *= sigma_s;
  return out;
}

ColoredPointCloud voxel_downsample(const ColoredPointCloud& cloud, double voxel) {
  if (!(voxel > 0.0)) throw InvalidArgument("voxel_downsample: voxel size must be positive");
  using Key = std::array<std::int64_t, 3>;
  std::vector<std::pair<Key, std::size_t>> keyed(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    keyed[i] = {Key{static_cast<std::int64_t>(std::floor(p.x() / voxel)),
                    static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                    static_cast<std::int64_t>(std::floor(p.z() / voxel))},
                i};
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  ColoredPointCloud out;
  for (std::size_t begin = 0; begin < keyed.size();) {
    std::size_t end = begin;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::array<std::uint64_t, 3> rgb{0, 0, 0};
    while (end < keyed.size() && keyed[end].first == keyed[begin].first) {
      const auto i = keyed[end].second;
      sum += cloud.points[i];
      rgb[0] += cloud.colors[i].r;
      rgb[1] += cloud.colors[i].g;
      rgb[2] += cloud.colors[i].b;
      ++end;
    }
    const double n = static_cast<double>(end - begin);
    const auto mean = [&](std::uint64_t s) {
      return static_cast<std::uint8_t>(std::lround(static_cast<double>(s) / n));
    };
    out.push_back(sum / n, {mean(rgb[0]), mean(rgb[1]), mean(rgb[2])});
    begin = end;
  }
  return out;
}

ColoredPointCloud remove_outliers(const ColoredPointCloud& cloud, std::size_t k, double std_ratio) {
  if (k < 1) throw InvalidArgument("remove_outliers: k must be >= 1");
  const std::size_t n = cloud.size();
  if (n < k + 1) return cloud;
  std::vector<double> mean_dist(n);
  std::vector<double> d;
  d.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d.push_back((cloud.points[i] - cloud.points[j]).norm());
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
    std::sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k));
    mean_dist[i] = std::accumulate(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), 0.0) /
                   static_cast<double>(k);
  }
  const double mu = std::accumulate(mean_dist.begin(), mean_dist.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double m : mean_dist) var += (m - mu) * (m - mu);
  const double sd = std::sqrt(var / static_cast<double>(n));
  // Slack for rounding when every point sees the same neighborhood.
  const double limit = mu + std_ratio * sd + 1e-9 * mu;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (mean_dist[i] <= limit) keep.push_back(i);
  return cloud.subset(keep);
}

// ---------------------------------------------------------------------------
// View normalization

namespace {

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
  const auto less = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  };
  std::sort(pts.begin(), pts.end(), less);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double normalize_quarter_turn(double angle) {
  double a = std::remainder(angle, std::numbers::pi / 2.0);
  if (a <= -std::numbers::pi / 4.0) a += std::numbers::pi / 2.0;
  return a;
}

// Rotation by -angle in the plane of axes (u, v).
Eigen::Matrix3d plane_rotation(int u, int v, double angle) {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  const double c = std::cos(angle), s = std::sin(angle);
  r(u, u) = c;
  r(u, v) = s;
  r(v, u) = -s;
  r(v, v) = c;
  return r;
}

double projection_angle(const std::vector<Eigen::Vector3d>& q, int u, int v) {
  std::vector<Eigen::Vector2d> plane(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) plane[i] = {q[i](u), q[i](v)};
  return min_area_rect_angle(plane);
}

}  // namespace

double min_area_rect_angle(std::span<const Eigen::Vector2d> points) {
  const auto hull = convex_hull({points.begin(), points.end()});
  if (hull.size() < 2) return 0.0;
  if (hull.size() == 2) {
    const Eigen::Vector2d d = hull[1] - hull[0];
    return normalize_quarter_turn(std::atan2(d.y(), d.x()));
  }
  double best_area = std::numeric_limits<double>::infinity();
  double best_angle = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Eigen::Vector2d e = hull[(i + 1) % hull.size()] - hull[i];
    const double len = e.norm();
    if (len == 0.0) continue;
    const Eigen::Vector2d ux = e / len;
    const Eigen::Vector2d uy(-ux.y(), ux.x());
    double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
    double lo_y = lo_x, hi_y = -lo_x;
    for (const auto& p : hull) {
      const double a = p.dot(ux), b = p.dot(uy);
      lo_x = std::min(lo_x, a);
      hi_x = std::max(hi_x, a);
      lo_y = std::min(lo_y, b);
      hi_y = std::max(hi_y, b);
    }
    const double area = (hi_x - lo_x) * (hi_y - lo_y);
    const double angle = normalize_quarter_turn(std::atan2(e.y(), e.x()));
    const bool first = best_area == std::numeric_limits<double>::infinity();
    const bool tie = !first && std::abs(area - best_area) <= 1e-12 * std::max(area, best_area);
    if (first || (!tie && area < best_area) || (tie && std::abs(angle) < std::abs(best_angle))) {
      best_area = std::min(area, best_area);
      best_angle = angle;
    }
  }
  return best_angle;
}

NormalizedView view_normalize(const ColoredPointCloud& cloud, const NormalizeOptions& options) {
  if (cloud.empty()) throw InvalidArgument("view_normalize: empty cloud");
  const std::size_t n = cloud.size();
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : cloud.points) centroid += p;
  centroid /= static_cast<double>(n);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d d = p - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(n);

  // Principal axes, largest variance first. The solver always returns an
  // orthonormal basis, which also completes degenerate (flat, linear) clouds.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  Eigen::Matrix3d basis;
  for (int k = 0; k < 3; ++k) basis.row(k) = solver.eigenvectors().col(2 - k).transpose();

  std::vector<Eigen::Vector3d> q(n);
  const auto project = [&] {
    for (std::size_t i = 0; i < n; ++i) q[i] = basis * (cloud.points[i] - centroid);
  };
  project();

  for (int it = 0; it < options.max_refine_iterations; ++it) {
    const double a_xy = projection_angle(q, 0, 1);
    basis = plane_rotation(0, 1, a_xy) * basis;
    project();
    const double a_yz = projection_angle(q, 1, 2);
    basis = plane_rotation(1, 2, a_yz) * basis;
    project();
    // x-y and y-z turns alone cannot undo a tilt within the x-z plane.
    const double a_xz = projection_angle(q, 0, 2);
    basis = plane_rotation(0, 2, a_xz) * basis;
    project();
    const double tol = options.refine_tolerance;
    if (std::abs(a_xy) < tol && std::abs(a_yz) < tol && std::abs(a_xz) < tol) break;
  }

  // Order axes by extent, largest first.
  Eigen::Vector3d lo = q.front(), hi = q.front();
  for (const auto& p : q) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::Vector3d ext = hi - lo;
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ext(a) > ext(b); });
  Eigen::Matrix3d permuted;
  for (int k = 0; k < 3; ++k) permuted.row(k) = basis.row(order[k]);
  basis = permuted;
  project();

  // Sign of each axis: centroid at or above the box center.
  lo = q.front();
  hi = q.front();
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : q) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
    mean += p;
  }
  mean /= static_cast<double>(n);
  for (int k = 0; k < 3; ++k)
    if (mean(k) - 0.5 * (lo(k) + hi(k)) < 0.0) basis.row(k) *= -1.0;
  project();

  lo = q.front();
  for (const auto& p : q) lo = lo.cwiseMin(p);
  NormalizedView out;
  out.cloud.colors = cloud.colors;
  out.cloud.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.cloud.points[i] = q[i] - lo;
  out.transform.rotation = basis;
  out.transform.translation = -basis * centroid - lo;
  return out;
}

std::vector<ColoredPointCloud> mirror_augment(const ColoredPointCloud& cloud, bool include_double) {
  std::vector<ColoredPointCloud> out{cloud};
  const auto mirrored = [&](bool mx, bool my) {
    ColoredPointCloud m = cloud;
    for (auto& p : m.points) {
      if (mx) p.x() = -p.x();
      if (my) p.y() = -p.y();
    }
    return to_first_octant(m);
  };
  out.push_back(mirrored(true, false));
  out.push_back(mirrored(false, true));
  if (include_double) out.push_back(mirrored(true, true));
  return out;
}

ColoredPointCloud rotate_for_slicing(const ColoredPointCloud& cloud, double alpha) {
  const double c = std::cos(alpha), s = std::sin(alpha);
  ColoredPointCloud out = cloud;
  for (auto& p : out.points) {
    const double x = p.x(), z = p.z();
    p.x() = x * c - z * s;
    p.z() = x * s + z * c;
  }
  return to_first_octant(out);
}

std::size_t band_index(double v, double width) {
  if (!(v > 0.0)) return 0;
  auto i = static_cast<std::size_t>(std::floor(v / width));
  while (i > 0 && static_cast<double>(i) * width > v) --i;
  while (static_cast<double>(i + 1) * width <= v) ++i;
  return i;
}

std::vector<Slice> slice(const ColoredPointCloud& cloud, double sigma1) {
  if (!(sigma1 > 0.0)) throw InvalidArgument("slice: thickness must be positive");
  std::vector<Slice> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::size_t b = band_index(cloud.points[i].z(), sigma1);
    if (b >= out.size()) {
      const std::size_t old = out.size();
      out.resize(b + 1);
      for (std::size_t k = old; k <= b; ++k) out[k].index = k;
    }
    out[b].members.push_back(i);
  }
  return out;
}

std::vector<Strip> strips(const ColoredPointCloud& cloud, const Slice& s, double sigma2) {
  if (!(sigma2 > 0.0)) throw InvalidArgument("strips: thickness must be positive");
  std::vector<Strip> out;
  if (s.members.empty()) return out;
  double x_min = std::numeric_limits<double>::infinity();
  for (auto i : s.members) x_min = std::min(x_min, cloud.points[i].x());
  for (auto i : s.members) {
    const std::size_t b = band_index(cloud.points[i].x() - x_min, sigma2);
    if (b >= out.size()) {
      const std::size_t old = out.size();
      out.resize(b + 1);
      for (std::size_t k = old; k <= b; ++k) out[k].index = k;
    }
    out[b].members.push_back(i);
  }
  return out;
}

ColoredPointCloud flatten_slice_z(const ColoredPointCloud& cloud, const Slice& s, double sigma1) {
  ColoredPointCloud out = cloud.subset(s.members);
  const double z = static_cast<double>(s.index) * sigma1;
  for (auto& p : out.points) p.z() = z;
  return out;
}

bool detect_occlusion(const LabelImage& labels, const DepthImage& depth, std::uint16_t instance_id) {
  if (labels.width != depth.width || labels.height != depth.height)
    throw InvalidArgument("detect_occlusion: image sizes differ");
  bool present = false;
  for (int y = 0; y < labels.height; ++y) {
    for (int x = 0; x < labels.width; ++x) {
      if (labels.at(x, y) != instance_id) continue;
      present = true;
      const std::uint16_t d = depth.at(x, y);
      if (d == 0) continue;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if ((dx == 0 && dy == 0) || !labels.contains(nx, ny)) continue;
          const std::uint16_t other = labels.at(nx, ny);
          if (other == instance_id || other == 0) continue;
          const std::uint16_t nd = depth.at(nx, ny);
          if (nd != 0 && nd < d) return true;
        }
      }
    }
  }
  if (!present)
    throw InvalidArgument("detect_occlusion: instance " + std::to_string(instance_id) + " not in map");
  return false;
}

ColoredPointCloud reorient_if_occluded(const ColoredPointCloud& cloud, bool occluded) {
  if (!occluded) return cloud;
  ColoredPointCloud out = cloud;
  for (auto& p : out.points) {
    p.x() = -p.x();
    p.y() = -p.y();
  }
  return to_first_octant(out);
}

}  // namespace topocolor
