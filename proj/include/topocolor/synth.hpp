#pragma once

// Synthetic colored shapes: visible-surface sampling from camera positions on
// a sphere, scripted occlusion, and a small z-buffer scene renderer producing
// RGB, depth and instance images.

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "topocolor/color.hpp"
#include "topocolor/image.hpp"
#include "topocolor/pointcloud.hpp"

namespace topocolor::synth {

enum class Primitive { box, cylinder, sphere, capsule };
enum class ColorScheme { uniform, two_tone, bands };

/// Upright primitive centered at the origin with its height along z.
/// box: size; cylinder and capsule: radius, height (capsule height includes
/// the caps); sphere: radius.
struct ShapeSpec {
  std::string label;
  Primitive primitive = Primitive::box;
  Eigen::Vector3d size = Eigen::Vector3d::Constant(0.1);
  double radius = 0.05;
  double height = 0.1;
  ColorScheme scheme = ColorScheme::uniform;
  Srgb primary{200, 30, 30};
  Srgb secondary{30, 30, 200};
  int bands = 4;

  double vertical_extent() const;
  Srgb color_at(const Eigen::Vector3d& p) const;
};

void validate(const ShapeSpec& shape);

struct SurfacePoint {
  Eigen::Vector3d position;
  Eigen::Vector3d normal;
};

struct SamplingOptions {
  double spacing = 0.004;        // meters between neighboring samples
  double jitter = 0.0;           // fraction of a cell; 0 keeps the regular grid
  std::uint64_t seed = 0;
  double depth_quantum = 0.001;  // meters
  double camera_radius = 1.0;
};

/// Deterministic tensor-grid samples with outward normals.
std::vector<SurfacePoint> sample_surface(const ShapeSpec& shape, const SamplingOptions& options);

/// Unit vector from the object toward a camera at the given polar/azimuth.
Eigen::Vector3d camera_direction(double polar, double azimuth);

/// Surface samples facing the camera (normal . dir > 1e-9), with depth along the
/// view direction quantized. Coordinates stay in the object frame.
ColoredPointCloud render_view(const ShapeSpec& shape, const Eigen::Vector3d& direction,
                              const SamplingOptions& options = {});

struct CameraGrid {
  double polar_step = std::numbers::pi / 36.0;
  double azimuth_step = std::numbers::pi / 36.0;

  struct View {
    double polar;
    double azimuth;
  };
  /// Polar angles 0..pi inclusive, azimuths 0..2pi exclusive.
  std::vector<View> views() const;
};

struct LabeledCloud {
  std::string label;
  std::size_t shape_index = 0;
  double polar = 0.0;
  double azimuth = 0.0;
  bool occluded = false;  // known occlusion state, used when no depth image exists
  ColoredPointCloud cloud;
};

/// One cloud per (shape, view), shapes outermost.
std::vector<LabeledCloud> generate_training_set(const std::vector<ShapeSpec>& shapes, const CameraGrid& grid,
                                                const SamplingOptions& options = {}, unsigned jobs = 1);

enum class OcclusionEnd { top, bottom, both };

/// Removes `fraction` of the z-extent from the chosen end (from each end for
/// `both`). Throws InvalidArgument for fractions outside [0, 1) or 2f >= 1
/// with `both`, DataError when nothing remains.
ColoredPointCloud occlude(const ColoredPointCloud& cloud, double fraction, OcclusionEnd end);

/// Writes <dir>/manifest.json plus one binary PLY per cloud.
void write_dataset(const std::filesystem::path& dir, const std::vector<ShapeSpec>& shapes,
                   const std::vector<LabeledCloud>& clouds);
struct Dataset {
  std::vector<ShapeSpec> shapes;
  std::vector<LabeledCloud> clouds;
};
Dataset read_dataset(const std::filesystem::path& dir);

std::string to_string(Primitive p);
std::string to_string(ColorScheme s);
std::string to_string(OcclusionEnd e);
Primitive parse_primitive(const std::string& s);
ColorScheme parse_color_scheme(const std::string& s);
OcclusionEnd parse_occlusion_end(const std::string& s);

/// The six-object desk suite: two same-shape/different-color pairs plus two
/// distinct shapes.
std::vector<ShapeSpec> desk_suite();

// ---------------------------------------------------------------------------
// Scene rendering

struct SceneObject {
  ShapeSpec shape;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // object -> camera frame
  Eigen::Vector3d position = Eigen::Vector3d(0, 0, 1);     // camera frame, meters
  std::uint16_t instance_id = 1;
};

struct SceneImages {
  RgbImage rgb;
  DepthImage depth;
  LabelImage labels;
};

/// Point-splat z-buffer rendering in the camera frame (x right, y down, z
/// forward). `spacing` should be well below the pixel footprint.
SceneImages render_scene(const std::vector<SceneObject>& objects, const CameraIntrinsics& intrinsics,
                         int width, int height, double spacing = 0.001);

/// Rotation taking an upright object (height along z) to stand on the camera's
/// floor (object z -> camera -y), turned by `yaw` about its own height axis.
Eigen::Matrix3d upright_pose(double yaw);

}  // namespace topocolor::synth
