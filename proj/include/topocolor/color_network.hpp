#pragma once

// Network of coarse color regions built with Mapper over the sampled sRGB
// cube, and the similarity matrix derived from its weighted edges.

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

#include "topocolor/color.hpp"
#include "topocolor/mapper.hpp"

namespace topocolor {

struct ColorNetworkParams {
  double xi = std::numbers::pi / 8.0;  // hue offset
  std::array<int, 2> intervals{3, 8};  // (chroma, hue)
  std::array<double, 2> gains{0.10, 0.25};
  double eps = 7.0;  // DBSCAN radius in HyAB units
  std::size_t min_pts = 6;
  bool count_self = true;
  double merge_threshold = 0.95;
  int grid_step = 5;

  friend bool operator==(const ColorNetworkParams&, const ColorNetworkParams&) = default;
};

/// (chroma, xi + hue) with hue the full-quadrant angle of (a*, b*) in [0, 2pi).
/// The gray axis a* = b* = 0 takes hue 0.
mapper::LensPoint chroma_hue_lens(const Lab& c, double xi);

struct ColorNode {
  std::vector<std::uint32_t> members;  // packed sRGB, ascending
  Lab mean;                            // Lab of the channel-wise sRGB mean
};

struct WeightedEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  double weight = 0.0;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Lab of the arithmetic mean of the member colors' sRGB intensities.
Lab mean_color(std::span<const std::uint32_t> packed_members);

/// Adds an edge between every node of a first-hue-interval cell and every node
/// of the last-hue-interval cell in the same chroma interval.
mapper::MapperGraph augment_cyclic_edges(mapper::MapperGraph graph, const mapper::Cover& cover);

/// Fraction of shared members relative to the smaller node.
double member_overlap(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Merges node pairs whose member overlap exceeds `threshold` and whose mean
/// colors lie within `eps` (HyAB). Members are unioned and edges re-attached;
/// repeats until no pair qualifies, at most one pass per node.
mapper::MapperGraph merge_redundant_nodes(mapper::MapperGraph graph, double threshold, double eps,
                                          const ColorSet& colors);

/// delta_ij = 1 / (1 + l_ij), l the minimum-weight path length; 0 when
/// unreachable.
Eigen::MatrixXd similarity_matrix(std::size_t n_nodes, std::span<const WeightedEdge> edges);

class ColorNetwork {
 public:
  ColorNetwork() = default;
  ColorNetwork(ColorNetworkParams params, std::vector<ColorNode> nodes,
               std::vector<WeightedEdge> edges, Eigen::MatrixXd similarity);

  const ColorNetworkParams& params() const { return params_; }
  const std::vector<ColorNode>& nodes() const { return nodes_; }
  const std::vector<WeightedEdge>& edges() const { return edges_; }
  const Eigen::MatrixXd& similarity() const { return similarity_; }
  std::size_t size() const { return nodes_.size(); }

  /// Node ids whose member set contains `c` snapped to the sampling grid.
  /// Grid colors no node claims (DBSCAN noise) map to the node whose mean is
  /// nearest in HyAB. Never empty.
  std::span<const std::uint32_t> regions_of(Srgb c) const;

  /// Largest number of regions any color belongs to.
  std::size_t max_region_count() const { return max_regions_; }

  bool is_connected() const;

 private:
  void build_index();
  std::size_t grid_index(Srgb c) const;

  ColorNetworkParams params_;
  std::vector<ColorNode> nodes_;
  std::vector<WeightedEdge> edges_;
  Eigen::MatrixXd similarity_;

  std::vector<int> channel_values_;
  std::array<std::uint16_t, 256> snap_{};
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> ids_;
  std::size_t max_regions_ = 0;
};

struct ColorNetworkBuild {
  ColorNetwork network;
  mapper::Cover cover;
  mapper::MapperGraph mapper_graph;  // raw Mapper output before post-processing
  std::size_t noise_colors = 0;
};

/// Full build: lens, cover, DBSCAN (HyAB) per cell, nerve, cyclic edges,
/// node merging, edge weighting and similarity matrix.
ColorNetworkBuild generate_color_network(const ColorSet& colors, const ColorNetworkParams& params,
                                         unsigned jobs = 1);

/// Convenience: samples the grid from params.grid_step first.
ColorNetwork generate_color_network(const ColorNetworkParams& params, unsigned jobs = 1);

void save_network(const ColorNetwork& net, std::ostream& os);
void save_network(const ColorNetwork& net, const std::filesystem::path& path);
ColorNetwork load_network(std::istream& is);
ColorNetwork load_network(const std::filesystem::path& path);

}  // namespace topocolor
