#pragma once

// Colored point clouds: RGB-D ingestion, preprocessing, view normalization,
// slicing geometry and occlusion handling.

#include <Eigen/Core>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "topocolor/color.hpp"
#include "topocolor/image.hpp"

namespace topocolor {

struct ColoredPointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Srgb> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void push_back(const Eigen::Vector3d& p, Srgb c) {
    points.push_back(p);
    colors.push_back(c);
  }
  void reserve(std::size_t n) {
    points.reserve(n);
    colors.reserve(n);
  }
  ColoredPointCloud subset(std::span<const std::size_t> ids) const;
};

struct Aabb {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  Eigen::Vector3d extents() const { return max - min; }
};

/// Throws InvalidArgument on an empty cloud.
Aabb bounding_box(const ColoredPointCloud& cloud);

struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  double depth_scale = 0.001;  // meters per depth unit
};

/// p -> rotation * p + translation. The rotation is orthonormal; view
/// normalization may produce an improper one (a reflection).
struct Transform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
};

ColoredPointCloud transform(const ColoredPointCloud& cloud, const Transform& t);

/// Shifts the cloud so its bounding box minimum is the origin.
ColoredPointCloud to_first_octant(const ColoredPointCloud& cloud);

/// Pinhole back-projection of pixels where labels == instance_id and depth > 0.
/// Throws DataError when no such pixel exists.
ColoredPointCloud backproject(const DepthImage& depth, const RgbImage& rgb, const LabelImage& labels,
                              std::uint16_t instance_id, const CameraIntrinsics& intrinsics);

ColoredPointCloud scale(const ColoredPointCloud& cloud, double sigma_s);

/// One point per occupied voxel: centroid position, channel-mean color.
/// Output is ordered by voxel key.
ColoredPointCloud voxel_downsample(const ColoredPointCloud& cloud, double voxel);

/// Statistical outlier removal: drops points whose mean distance to their k
/// nearest neighbors exceeds mean + std_ratio * stddev over the cloud.
ColoredPointCloud remove_outliers(const ColoredPointCloud& cloud, std::size_t k, double std_ratio);

struct NormalizeOptions {
  int max_refine_iterations = 10;
  double refine_tolerance = 1e-4;  // radians
};

struct NormalizedView {
  ColoredPointCloud cloud;
  Transform transform;  // maps input coordinates to the normalized frame
};

/// Aligns the oriented bounding box with the axes (extents x >= y >= z),
/// refines with 2D minimum-area rectangles of the x-y, y-z and x-z projections,
/// fixes axis signs so the centroid sits at or above the box center, and
/// moves the box minimum to the origin.
NormalizedView view_normalize(const ColoredPointCloud& cloud, const NormalizeOptions& options = {});

/// Angle of the minimum-area enclosing rectangle of a planar point set, in
/// (-pi/4, pi/4]. Rotating the points by minus this angle aligns it with the axes.
double min_area_rect_angle(std::span<const Eigen::Vector2d> points);

/// Original, x-mirror and y-mirror (each shifted back into the first octant);
/// with include_double also the mirror across both axes.
std::vector<ColoredPointCloud> mirror_augment(const ColoredPointCloud& cloud,
                                              bool include_double = false);

/// Rotation about y taking the x axis to (cos a, 0, sin a), then back to the
/// first octant.
ColoredPointCloud rotate_for_slicing(const ColoredPointCloud& cloud,
                                     double alpha = std::numbers::pi / 4.0);

struct Slice {
  std::size_t index = 0;
  std::vector<std::size_t> members;  // point ids, ascending
};

/// Slice i holds the points with i*sigma1 <= z < (i+1)*sigma1. Empty bands
/// between occupied ones are kept.
std::vector<Slice> slice(const ColoredPointCloud& cloud, double sigma1);

struct Strip {
  std::size_t index = 0;
  std::vector<std::size_t> members;
};

/// Half-open bands of width sigma2 along x, counted from the slice's own
/// x minimum.
std::vector<Strip> strips(const ColoredPointCloud& cloud, const Slice& slice, double sigma2);

/// Copy of the slice's points with z set to index * sigma1.
ColoredPointCloud flatten_slice_z(const ColoredPointCloud& cloud, const Slice& slice, double sigma1);

/// True when some contour pixel of the instance has an 8-neighbor belonging
/// to another instance with a strictly smaller, valid depth.
bool detect_occlusion(const LabelImage& labels, const DepthImage& depth, std::uint16_t instance_id);

/// Rotation by pi about z followed by a shift into the first octant, or the
/// identity when not occluded.
ColoredPointCloud reorient_if_occluded(const ColoredPointCloud& cloud, bool occluded);

/// Band index i with i*width <= v < (i+1)*width evaluated exactly as written.
std::size_t band_index(double v, double width);

}  // namespace topocolor
