#include "topocolor/mapper.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

namespace topocolor::mapper {

Cover build_cover(std::span<const LensPoint> lens_values, std::array<int, 2> n_intervals,
                  std::array<double, 2> gains) {
  if (lens_values.empty()) throw InvalidArgument("build_cover: no lens values");
  Cover cover;
  cover.gains = gains;
  for (int d = 0; d < 2; ++d) {
    const int n = n_intervals[d];
    const double g = gains[d];
    if (n < 1) throw InvalidArgument("build_cover: interval count must be >= 1");
    if (!(g >= 0.0 && g < 1.0)) throw InvalidArgument("build_cover: gain must lie in [0, 1)");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : lens_values) {
      if (!std::isfinite(p[d])) throw InvalidArgument("build_cover: non-finite lens value");
      lo = std::min(lo, p[d]);
      hi = std::max(hi, p[d]);
    }
    const double length = (hi - lo) / (n - (n - 1) * g);
    const double stride = length * (1.0 - g);
    auto& out = cover.intervals[d];
    out.resize(n);
    for (int k = 0; k < n; ++k) out[k] = {lo + k * stride, lo + k * stride + length};
    // Pin the outer endpoints so rounding never leaves data uncovered.
    out.front().low = lo;
    out.back().high = hi;
  }
  return cover;
}

std::vector<int> dbscan(std::size_t n, const NeighborQuery& neighbors, const DbscanParams& params) {
  if (!(params.eps > 0.0)) throw InvalidArgument("dbscan: eps must be positive");
  if (params.min_pts < 1) throw InvalidArgument("dbscan: min_pts must be >= 1");
  constexpr int kUnvisited = -2;
  std::vector<int> labels(n, kUnvisited);
  std::vector<std::size_t> nb;
  std::vector<std::size_t> frontier;
  const auto is_core = [&](const std::vector<std::size_t>& list) {
    std::size_t count = list.size();
    if (!params.count_self) count -= 1;  // the query always reports the point itself
    return count >= params.min_pts;
  };
  int cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnvisited) continue;
    neighbors(i, nb);
    if (!is_core(nb)) {
      labels[i] = kNoise;
      continue;
    }
    labels[i] = cluster;
    frontier.assign(nb.begin(), nb.end());
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const std::size_t j = frontier[head];
      if (labels[j] == kNoise) labels[j] = cluster;  // border point
      if (labels[j] != kUnvisited) continue;
      labels[j] = cluster;
      neighbors(j, nb);
      if (is_core(nb)) frontier.insert(frontier.end(), nb.begin(), nb.end());
    }
    ++cluster;
  }
  return labels;
}

namespace {

std::vector<RefinedCluster> cluster_cell(std::span<const LensPoint> lens, const Cover& cover,
                                         std::size_t flat, const CellClusterer& clusterer) {
  const CellIndex cell = cover.cell(flat);
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < lens.size(); ++i)
    if (cover.contains(cell, lens[i])) ids.push_back(i);
  std::vector<RefinedCluster> out;
  if (ids.empty()) return out;
  const auto labels = clusterer(ids);
  if (labels.size() != ids.size())
    throw InvariantViolation("refined_pullback: clusterer returned wrong label count");
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  out.resize(static_cast<std::size_t>(max_label + 1));
  for (std::size_t k = 0; k < ids.size(); ++k)
    if (labels[k] >= 0) out[static_cast<std::size_t>(labels[k])].members.push_back(ids[k]);
  std::erase_if(out, [](const RefinedCluster& c) { return c.members.empty(); });
  for (auto& c : out) c.cell = cell;  // members are already ascending
  std::sort(out.begin(), out.end(), [](const RefinedCluster& a, const RefinedCluster& b) {
    return a.members.front() < b.members.front();
  });
  return out;
}

}  // namespace

std::vector<RefinedCluster> refined_pullback(std::span<const LensPoint> lens_values,
                                             const Cover& cover, const CellClusterer& clusterer,
                                             unsigned jobs) {
  const std::size_t cells = cover.cell_count();
  std::vector<std::vector<RefinedCluster>> per_cell(cells);
  if (jobs <= 1 || cells <= 1) {
    for (std::size_t c = 0; c < cells; ++c)
      per_cell[c] = cluster_cell(lens_values, cover, c, clusterer);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(cells);
    auto worker = [&] {
      for (std::size_t c = next++; c < cells; c = next++) {
        try {
          per_cell[c] = cluster_cell(lens_values, cover, c, clusterer);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(cells));
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  std::vector<RefinedCluster> out;
  for (auto& v : per_cell)
    for (auto& c : v) out.push_back(std::move(c));
  return out;
}

bool MapperGraph::has_edge(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges.begin(), edges.end(), Edge{i, j});
}

void MapperGraph::add_edge(std::size_t i, std::size_t j) {
  if (i == j) return;
  if (i > j) std::swap(i, j);
  const Edge e{i, j};
  auto it = std::lower_bound(edges.begin(), edges.end(), e);
  if (it == edges.end() || *it != e) edges.insert(it, e);
}

MapperGraph nerve(std::vector<RefinedCluster> clusters) {
  MapperGraph g;
  g.nodes = std::move(clusters);
  // Inverted index item -> nodes; every pair of nodes listed under one item
  // intersects.
  std::size_t max_item = 0;
  for (const auto& n : g.nodes)
    if (!n.members.empty()) max_item = std::max(max_item, n.members.back());
  std::vector<std::vector<std::size_t>> owners(g.nodes.empty() ? 0 : max_item + 1);
  for (std::size_t k = 0; k < g.nodes.size(); ++k)
    for (std::size_t m : g.nodes[k].members) owners[m].push_back(k);
  for (const auto& list : owners)
    for (std::size_t a = 0; a < list.size(); ++a)
      for (std::size_t b = a + 1; b < list.size(); ++b)
        g.edges.emplace_back(std::min(list[a], list[b]), std::max(list[a], list[b]));
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  std::erase_if(g.edges, [](const Edge& e) { return e.first == e.second; });
  return g;
}

std::size_t connected_components(std::size_t n_nodes, std::span<const Edge> edges) {
  std::vector<std::size_t> parent(n_nodes);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t count = n_nodes;
  for (const auto& [a, b] : edges) {
    const auto ra = find(a);
    const auto rb = find(b);
    if (ra != rb) {
      parent[std::max(ra, rb)] = std::min(ra, rb);
      --count;
    }
  }
  return count;
}

void write_graph(std::ostream& os, const MapperGraph& graph) {
  os << "mapper-graph 1\n";
  os << "nodes " << graph.nodes.size() << "\n";
  for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
    const auto& n = graph.nodes[k];
    os << "node " << k << ' ' << n.cell.first << ' ' << n.cell.second;
    for (auto m : n.members) os << ' ' << m;
    os << '\n';
  }
  os << "edges " << graph.edges.size() << "\n";
  for (const auto& [a, b] : graph.edges) os << "edge " << a << ' ' << b << '\n';
}

}  // namespace topocolor::mapper
