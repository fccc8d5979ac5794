#pragma once

// TOPS and TOPS2 descriptors: per-slice persistence images, optionally
// followed by per-slice color embeddings.

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <vector>

#include "topocolor/color_network.hpp"
#include "topocolor/pointcloud.hpp"
#include "topocolor/topology.hpp"

namespace topocolor {

struct DescriptorParams {
  double sigma1 = 0.1;    // slice thickness
  double sigma2 = 0.025;  // strip thickness
  double alpha = std::numbers::pi / 4.0;
  std::size_t max_slices = 12;
  std::size_t n_s_max = 16;
  int image_height = 16;
  int image_width = 16;
  double filtration_radius = 0.0;  // <= 0: 2 * sigma2
  double kernel_sigma = 0.0;       // <= 0: sigma2
  double image_range = 0.0;        // <= 0: n_s_max * sigma2, for birth and persistence

  double radius() const { return filtration_radius > 0.0 ? filtration_radius : 2.0 * sigma2; }
  PersistenceImageParams image_params() const;
  std::size_t image_length() const {
    return static_cast<std::size_t>(image_height) * static_cast<std::size_t>(image_width);
  }

  friend bool operator==(const DescriptorParams&, const DescriptorParams&) = default;
};

/// Color-vector shares kept as integers over a common denominator, so sums are exact:
/// a point whose color lies in k regions adds denominator / k to each of them.
struct ColorCounts {
  std::vector<std::uint64_t> numerators;
  std::uint64_t denominator = 1;

  std::vector<double> values() const;
};

/// Least common multiple of 1..max_region_count.
std::uint64_t share_denominator(const ColorNetwork& network);

ColorCounts color_counts(const ColoredPointCloud& cloud, std::span<const std::size_t> members,
                         const ColorNetwork& network);

/// phi_l = sum over points of [color in region l] / (number of regions of the color).
std::vector<double> color_vector(const ColoredPointCloud& cloud, std::span<const std::size_t> members,
                                 const ColorNetwork& network);

/// n_s_max x n_c matrix whose row j is the color vector of strip j; rows past
/// the strip count stay zero. Throws DescriptorOverflow when the slice has
/// more than n_s_max strips.
Eigen::MatrixXd color_matrix(const ColoredPointCloud& cloud, const Slice& slice, double sigma2,
                             std::size_t n_s_max, const ColorNetwork& network);

/// (C * delta)^T, n_c x n_s_max.
Eigen::MatrixXd color_embedding(const Eigen::MatrixXd& c, const Eigen::MatrixXd& delta);

enum class DescriptorKind : std::uint8_t { tops = 1, tops2 = 2 };

struct Descriptor {
  DescriptorKind kind = DescriptorKind::tops;
  std::size_t slices = 0;         // number of blocks, max_slices
  std::size_t block = 0;          // values per block
  std::size_t image_length = 0;   // leading persistence-image part of a block
  std::size_t used_slices = 0;    // slices the cloud actually occupies
  std::vector<double> values;

  std::span<const double> slice_block(std::size_t i) const {
    return std::span<const double>(values).subspan(i * block, block);
  }
};

struct DescriptorPair {
  Descriptor tops;
  Descriptor tops2;
};

/// Persistence image of one slice of an already rotated cloud: z-flattened,
/// x measured from the slice minimum, H0 of the radius graph, cap w + sigma2.
std::vector<double> slice_image(const ColoredPointCloud& rotated, const Slice& s,
                                const DescriptorParams& params);

/// Expects a view-normalized (and, if needed, reoriented) cloud. Throws
/// InvalidArgument on an empty cloud and DescriptorOverflow when the cloud
/// needs more than max_slices slices or a slice more than n_s_max strips.
Descriptor tops_descriptor(const ColoredPointCloud& cloud, const DescriptorParams& params);
Descriptor tops2_descriptor(const ColoredPointCloud& cloud, const ColorNetwork& network,
                            const DescriptorParams& params);
/// Both descriptors from a single pass over the slices.
DescriptorPair compute_descriptors(const ColoredPointCloud& cloud, const ColorNetwork& network,
                                   const DescriptorParams& params);

/// Binary record: magic, version, kind, layout, then float32 values.
void write_descriptor(std::ostream& out, const Descriptor& d);
Descriptor read_descriptor(std::istream& in);
void write_descriptor(const std::filesystem::path& path, const Descriptor& d);
Descriptor read_descriptor(const std::filesystem::path& path);
/// Human-readable dump, one line per slice block.
void dump_descriptor(std::ostream& out, const Descriptor& d);

}  // namespace topocolor
