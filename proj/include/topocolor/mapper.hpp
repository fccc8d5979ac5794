#pragma once

// Mapper soft clustering: lens values -> cubical cover -> per-cell clustering
// -> nerve (1-skeleton).

#include <array>
#include <compare>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "topocolor/error.hpp"

namespace topocolor::mapper {

using LensPoint = std::array<double, 2>;

struct Interval {
  double low = 0.0;
  double high = 0.0;

  bool contains(double v) const { return v >= low && v <= high; }
  double length() const { return high - low; }
};

/// Pair of interval indices, one per lens dimension.
struct CellIndex {
  std::size_t first = 0;
  std::size_t second = 0;

  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// Cubical cover of a 2D lens image. Cells are enumerated row-major over
/// (first, second).
struct Cover {
  std::array<std::vector<Interval>, 2> intervals;
  std::array<double, 2> gains{0.0, 0.0};

  std::size_t cell_count() const { return intervals[0].size() * intervals[1].size(); }
  CellIndex cell(std::size_t flat) const {
    return {flat / intervals[1].size(), flat % intervals[1].size()};
  }
  bool contains(CellIndex c, const LensPoint& p) const {
    return intervals[0][c.first].contains(p[0]) && intervals[1][c.second].contains(p[1]);
  }
};

/// Splits [min, max] of each lens coordinate into n equal intervals whose
/// consecutive pairs overlap by gain * length. Interval length is
/// span / (n - (n - 1) * gain), starts are spaced length * (1 - gain).
Cover build_cover(std::span<const LensPoint> lens_values, std::array<int, 2> n_intervals,
                  std::array<double, 2> gains);

// ---------------------------------------------------------------------------
// DBSCAN

constexpr int kNoise = -1;

struct DbscanParams {
  double eps = 0.0;
  std::size_t min_pts = 1;
  // When true the point itself counts toward min_pts.
  bool count_self = true;
};

/// Fills `out` with every j such that d(i, j) <= eps, i itself included.
using NeighborQuery = std::function<void(std::size_t i, std::vector<std::size_t>& out)>;

/// Density-based clustering over items 0..n-1. Returns a label per item:
/// cluster ids 0, 1, ... in discovery order, or kNoise.
std::vector<int> dbscan(std::size_t n, const NeighborQuery& neighbors, const DbscanParams& params);

/// Brute-force DBSCAN over `items` with an arbitrary metric.
template <class Item, class Metric>
std::vector<int> dbscan(std::span<const Item> items, Metric metric, const DbscanParams& params) {
  if (!(params.eps > 0.0)) throw InvalidArgument("dbscan: eps must be positive");
  NeighborQuery query = [&](std::size_t i, std::vector<std::size_t>& out) {
    out.clear();
    for (std::size_t j = 0; j < items.size(); ++j)
      if (metric(items[i], items[j]) <= params.eps) out.push_back(j);
  };
  return dbscan(items.size(), query, params);
}

// ---------------------------------------------------------------------------
// Refined pullback and nerve

struct RefinedCluster {
  CellIndex cell;
  std::vector<std::size_t> members;  // sorted item ids
};

/// Clusters the items of one cover cell. `ids` are the global item ids in
/// the cell (ascending); the result holds one label per id (kNoise allowed).
using CellClusterer = std::function<std::vector<int>(std::span<const std::size_t> ids)>;

/// One RefinedCluster per non-noise cluster per cell. Cells are visited in
/// row-major order and the clusters of a cell are ordered by smallest member.
/// Per-cell work runs on up to `jobs` threads; the output does not depend on it.
std::vector<RefinedCluster> refined_pullback(std::span<const LensPoint> lens_values,
                                             const Cover& cover, const CellClusterer& clusterer,
                                             unsigned jobs = 1);

using Edge = std::pair<std::size_t, std::size_t>;

struct MapperGraph {
  std::vector<RefinedCluster> nodes;
  std::vector<Edge> edges;  // i < j, sorted, unique

  bool has_edge(std::size_t i, std::size_t j) const;
  void add_edge(std::size_t i, std::size_t j);
};

/// 1-skeleton of the nerve: an edge for every pair of clusters sharing a member.
MapperGraph nerve(std::vector<RefinedCluster> clusters);

/// Number of connected components of the graph.
std::size_t connected_components(std::size_t n_nodes, std::span<const Edge> edges);

/// Plain-text dump: node lines "node <id> <cell0> <cell1> <members...>" then
/// "edge <i> <j>" lines.
void write_graph(std::ostream& os, const MapperGraph& graph);

}  // namespace topocolor::mapper
