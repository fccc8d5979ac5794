#include "topocolor/color_network.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "topocolor/error.hpp"

namespace topocolor {

using mapper::MapperGraph;

mapper::LensPoint chroma_hue_lens(const Lab& c, double xi) {
  const double chroma = std::sqrt(c.a * c.a + c.b * c.b);
  double hue = 0.0;
  if (c.a != 0.0 || c.b != 0.0) {
    hue = std::atan2(c.b, c.a);
    if (hue < 0.0) hue += 2.0 * std::numbers::pi;
    if (hue >= 2.0 * std::numbers::pi) hue = 0.0;
  }
  return {chroma, xi + hue};
}

Lab mean_color(std::span<const std::uint32_t> packed_members) {
  if (packed_members.empty()) throw InvalidArgument("mean_color: empty member set");
  std::uint64_t r = 0, g = 0, b = 0;
  for (auto p : packed_members) {
    const Srgb c = Srgb::unpack(p);
    r += c.r;
    g += c.g;
    b += c.b;
  }
  const double n = static_cast<double>(packed_members.size());
  return srgb_to_lab(static_cast<double>(r) / n, static_cast<double>(g) / n,
                     static_cast<double>(b) / n);
}

MapperGraph augment_cyclic_edges(MapperGraph graph, const mapper::Cover& cover) {
  const std::size_t last = cover.intervals[1].size() - 1;
  if (last == 0) return graph;
  const std::size_t n = graph.nodes.size();
  for (std::size_t u = 0; u < n; ++u) {
    if (graph.nodes[u].cell.second != 0) continue;
    for (std::size_t v = 0; v < n; ++v) {
      const auto& cv = graph.nodes[v].cell;
      if (cv.second == last && cv.first == graph.nodes[u].cell.first) graph.add_edge(u, v);
    }
  }
  return graph;
}

double member_overlap(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t shared = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++shared;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(std::min(a.size(), b.size()));
}

namespace {

Lab node_mean(const mapper::RefinedCluster& node, const ColorSet& colors) {
  std::vector<std::uint32_t> packed;
  packed.reserve(node.members.size());
  for (auto m : node.members) packed.push_back(colors.srgb[m].packed());
  return mean_color(packed);
}

}  // namespace

MapperGraph merge_redundant_nodes(MapperGraph graph, double threshold, double eps,
                                  const ColorSet& colors) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw InvalidArgument("merge_redundant_nodes: threshold must lie in (0, 1]");
  std::vector<Lab> means;
  means.reserve(graph.nodes.size());
  for (const auto& node : graph.nodes) means.push_back(node_mean(node, colors));

  const std::size_t max_passes = graph.nodes.size();
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    const std::size_t n = graph.nodes.size();
    std::size_t keep = n, drop = n;
    for (std::size_t i = 0; i < n && keep == n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (member_overlap(graph.nodes[i].members, graph.nodes[j].members) > threshold &&
            hyab(means[i], means[j]) <= eps) {
          keep = i;
          drop = j;
          break;
        }
      }
    }
    if (keep == n) break;

    auto& target = graph.nodes[keep].members;
    const auto& source = graph.nodes[drop].members;
    std::vector<std::size_t> merged;
    merged.reserve(target.size() + source.size());
    std::set_union(target.begin(), target.end(), source.begin(), source.end(),
                   std::back_inserter(merged));
    target = std::move(merged);
    means[keep] = node_mean(graph.nodes[keep], colors);
    graph.nodes.erase(graph.nodes.begin() + static_cast<std::ptrdiff_t>(drop));
    means.erase(means.begin() + static_cast<std::ptrdiff_t>(drop));

    // Re-attach edges of the dropped node to the kept one and shift ids.
    const auto remap = [&](std::size_t v) {
      if (v == drop) return keep;
      return v > drop ? v - 1 : v;
    };
    std::vector<mapper::Edge> edges;
    edges.reserve(graph.edges.size());
    for (auto [a, b] : graph.edges) {
      a = remap(a);
      b = remap(b);
      if (a == b) continue;
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    graph.edges = std::move(edges);
  }
  return graph;
}

Eigen::MatrixXd similarity_matrix(std::size_t n_nodes, std::span<const WeightedEdge> edges) {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n_nodes);
  for (const auto& e : edges) {
    if (e.i >= n_nodes || e.j >= n_nodes) throw InvalidArgument("similarity_matrix: bad node id");
    if (!(e.weight >= 0.0)) throw InvariantViolation("similarity_matrix: negative edge weight");
    adj[e.i].emplace_back(e.j, e.weight);
    adj[e.j].emplace_back(e.i, e.weight);
  }
  const auto n = static_cast<Eigen::Index>(n_nodes);
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(n, n);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n_nodes);
  using Item = std::pair<double, std::size_t>;
  for (std::size_t s = 0; s < n_nodes; ++s) {
    std::fill(dist.begin(), dist.end(), kInf);
    dist[s] = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    heap.emplace(0.0, s);
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (const auto& [v, w] : adj[u]) {
        if (d + w < dist[v]) {
          dist[v] = d + w;
          heap.emplace(dist[v], v);
        }
      }
    }
    for (std::size_t t = 0; t < n_nodes; ++t)
      delta(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) =
          std::isinf(dist[t]) ? 0.0 : 1.0 / (1.0 + dist[t]);
  }
  // Dijkstra from either end sums the same edges in different orders.
  const Eigen::MatrixXd sym = 0.5 * (delta + delta.transpose());
  delta = sym;
  for (Eigen::Index i = 0; i < n; ++i) delta(i, i) = 1.0;
  return delta;
}

// ---------------------------------------------------------------------------

ColorNetwork::ColorNetwork(ColorNetworkParams params, std::vector<ColorNode> nodes,
                           std::vector<WeightedEdge> edges, Eigen::MatrixXd similarity)
    : params_(params),
      nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      similarity_(std::move(similarity)) {
  if (nodes_.empty()) throw InvalidArgument("color network needs at least one node");
  const auto n = static_cast<Eigen::Index>(nodes_.size());
  if (similarity_.rows() != n || similarity_.cols() != n)
    throw DataError("color network: similarity matrix does not match node count");
  build_index();
}

std::size_t ColorNetwork::grid_index(Srgb c) const {
  const std::size_t k = channel_values_.size();
  return (std::size_t{snap_[c.r]} * k + snap_[c.g]) * k + snap_[c.b];
}

void ColorNetwork::build_index() {
  channel_values_ = grid_channel_values(params_.grid_step);
  for (int v = 0; v < 256; ++v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < channel_values_.size(); ++k)
      if (std::abs(channel_values_[k] - v) < std::abs(channel_values_[best] - v)) best = k;
    snap_[static_cast<std::size_t>(v)] = static_cast<std::uint16_t>(best);
  }
  const std::size_t k = channel_values_.size();
  const std::size_t cells = k * k * k;
  std::vector<std::vector<std::uint32_t>> lists(cells);
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    for (auto p : nodes_[id].members) {
      const Srgb c = Srgb::unpack(p);
      auto& l = lists[grid_index(c)];
      if (l.empty() || l.back() != id) l.push_back(static_cast<std::uint32_t>(id));
    }
  }
  offsets_.assign(cells + 1, 0);
  ids_.clear();
  max_regions_ = 0;
  for (std::size_t g = 0; g < cells; ++g) {
    auto& l = lists[g];
    if (l.empty()) {
      const std::size_t r = g / (k * k), gg = (g / k) % k, b = g % k;
      const Lab lab = srgb_to_lab(Srgb{static_cast<std::uint8_t>(channel_values_[r]),
                                       static_cast<std::uint8_t>(channel_values_[gg]),
                                       static_cast<std::uint8_t>(channel_values_[b])});
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t id = 0; id < nodes_.size(); ++id) {
        const double d = hyab(lab, nodes_[id].mean);
        if (d < best_d) {
          best_d = d;
          best = id;
        }
      }
      l.push_back(static_cast<std::uint32_t>(best));
    }
    std::sort(l.begin(), l.end());
    max_regions_ = std::max(max_regions_, l.size());
    ids_.insert(ids_.end(), l.begin(), l.end());
    offsets_[g + 1] = static_cast<std::uint32_t>(ids_.size());
  }
}

std::span<const std::uint32_t> ColorNetwork::regions_of(Srgb c) const {
  const std::size_t g = grid_index(c);
  return {ids_.data() + offsets_[g], ids_.data() + offsets_[g + 1]};
}

bool ColorNetwork::is_connected() const {
  std::vector<mapper::Edge> e;
  for (const auto& w : edges_) e.emplace_back(w.i, w.j);
  return mapper::connected_components(nodes_.size(), e) == 1;
}

// ---------------------------------------------------------------------------

namespace {

// Spatial hash over Lab with cubic buckets of side eps. HyAB <= eps implies
// every per-axis difference is <= eps, so the 27 surrounding buckets suffice.
class LabNeighborIndex {
 public:
  LabNeighborIndex(std::span<const Lab> points, double eps) : points_(points), eps_(eps) {
    for (std::size_t i = 0; i < points.size(); ++i) buckets_[key(points[i])].push_back(i);
  }

  void query(std::size_t i, std::vector<std::size_t>& out) const {
    out.clear();
    const Lab& p = points_[i];
    const auto [kl, ka, kb] = coords(p);
    for (int dl = -1; dl <= 1; ++dl)
      for (int da = -1; da <= 1; ++da)
        for (int db = -1; db <= 1; ++db) {
          auto it = buckets_.find(pack(kl + dl, ka + da, kb + db));
          if (it == buckets_.end()) continue;
          for (std::size_t j : it->second)
            if (hyab(p, points_[j]) <= eps_) out.push_back(j);
        }
    std::sort(out.begin(), out.end());
  }

 private:
  std::array<std::int64_t, 3> coords(const Lab& p) const {
    return {static_cast<std::int64_t>(std::floor(p.l / eps_)),
            static_cast<std::int64_t>(std::floor(p.a / eps_)),
            static_cast<std::int64_t>(std::floor(p.b / eps_))};
  }
  static std::uint64_t pack(std::int64_t a, std::int64_t b, std::int64_t c) {
    const auto u = [](std::int64_t v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1fffff; };
    return (u(a) << 42) | (u(b) << 21) | u(c);
  }
  std::uint64_t key(const Lab& p) const {
    const auto c = coords(p);
    return pack(c[0], c[1], c[2]);
  }

  std::span<const Lab> points_;
  double eps_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

}  // namespace

ColorNetworkBuild generate_color_network(const ColorSet& colors, const ColorNetworkParams& params,
                                         unsigned jobs) {
  if (colors.size() == 0) throw InvalidArgument("generate_color_network: empty color set");
  std::vector<mapper::LensPoint> lens;
  lens.reserve(colors.size());
  for (const auto& lab : colors.lab) lens.push_back(chroma_hue_lens(lab, params.xi));

  ColorNetworkBuild out;
  out.cover = mapper::build_cover(lens, params.intervals, params.gains);

  const mapper::DbscanParams db{params.eps, params.min_pts, params.count_self};
  mapper::CellClusterer clusterer = [&](std::span<const std::size_t> ids) {
    std::vector<Lab> local;
    local.reserve(ids.size());
    for (auto id : ids) local.push_back(colors.lab[id]);
    LabNeighborIndex index(local, params.eps);
    return mapper::dbscan(
        local.size(), [&](std::size_t i, std::vector<std::size_t>& nb) { index.query(i, nb); }, db);
  };
  auto clusters = mapper::refined_pullback(lens, out.cover, clusterer, jobs);

  std::vector<char> covered(colors.size(), 0);
  for (const auto& c : clusters)
    for (auto m : c.members) covered[m] = 1;
  out.noise_colors = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), 0));

  out.mapper_graph = mapper::nerve(std::move(clusters));
  MapperGraph graph = augment_cyclic_edges(out.mapper_graph, out.cover);
  graph = merge_redundant_nodes(std::move(graph), params.merge_threshold, params.eps, colors);

  std::vector<ColorNode> nodes;
  nodes.reserve(graph.nodes.size());
  for (const auto& n : graph.nodes) {
    ColorNode node;
    node.members.reserve(n.members.size());
    for (auto m : n.members) node.members.push_back(colors.srgb[m].packed());
    std::sort(node.members.begin(), node.members.end());
    node.mean = mean_color(node.members);
    nodes.push_back(std::move(node));
  }
  std::vector<WeightedEdge> edges;
  edges.reserve(graph.edges.size());
  for (const auto& [i, j] : graph.edges) edges.push_back({i, j, hyab(nodes[i].mean, nodes[j].mean)});
  Eigen::MatrixXd delta = similarity_matrix(nodes.size(), edges);
  ColorNetworkParams stored = params;
  stored.grid_step = colors.step;
  out.network = ColorNetwork(stored, std::move(nodes), std::move(edges), std::move(delta));
  return out;
}

ColorNetwork generate_color_network(const ColorNetworkParams& params, unsigned jobs) {
  return generate_color_network(sample_srgb_grid(params.grid_step), params, jobs).network;
}

// ---------------------------------------------------------------------------
// Text format, version 1. Reals use 17 significant digits so reloads are exact.

namespace {

constexpr const char* kMagic = "topocolor-color-network";
constexpr int kVersion = 1;

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

double parse_real(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw DataError("color network: bad number '" + token + "'");
  return v;
}

template <class T>
T parse_uint(const std::string& token) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(token.c_str(), &end, 10);
  if (end == token.c_str() || *end != '\0') throw DataError("color network: bad integer '" + token + "'");
  return static_cast<T>(v);
}

void expect(std::istream& is, const std::string& word) {
  std::string tok;
  if (!(is >> tok) || tok != word)
    throw DataError("color network: expected '" + word + "' but found '" + tok + "'");
}

std::string next(std::istream& is) {
  std::string tok;
  if (!(is >> tok)) throw DataError("color network: unexpected end of file");
  return tok;
}

}  // namespace

void save_network(const ColorNetwork& net, std::ostream& os) {
  const auto& p = net.params();
  os << kMagic << ' ' << kVersion << '\n';
  os << "params xi " << real(p.xi) << " intervals " << p.intervals[0] << ' ' << p.intervals[1]
     << " gains " << real(p.gains[0]) << ' ' << real(p.gains[1]) << " eps " << real(p.eps)
     << " min_pts " << p.min_pts << " count_self " << (p.count_self ? 1 : 0) << " merge "
     << real(p.merge_threshold) << " grid_step " << p.grid_step << '\n';
  os << "nodes " << net.size() << '\n';
  char hex[8];
  for (std::size_t k = 0; k < net.size(); ++k) {
    const auto& n = net.nodes()[k];
    os << "node " << k << ' ' << real(n.mean.l) << ' ' << real(n.mean.a) << ' ' << real(n.mean.b)
       << ' ' << n.members.size();
    for (auto m : n.members) {
      std::snprintf(hex, sizeof hex, "%06" PRIx32, m);
      os << ' ' << hex;
    }
    os << '\n';
  }
  os << "edges " << net.edges().size() << '\n';
  for (const auto& e : net.edges()) os << "edge " << e.i << ' ' << e.j << ' ' << real(e.weight) << '\n';
  const auto& d = net.similarity();
  os << "similarity " << d.rows() << '\n';
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) os << (j ? " " : "") << real(d(i, j));
    os << '\n';
  }
  os << "end\n";
}

void save_network(const ColorNetwork& net, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write color network file: " + path.string());
  save_network(net, os);
  if (!os) throw DataError("failed writing color network file: " + path.string());
}

ColorNetwork load_network(std::istream& is) {
  expect(is, kMagic);
  const int version = parse_uint<int>(next(is));
  if (version != kVersion)
    throw VersionMismatch("color network: unsupported version " + std::to_string(version));
  ColorNetworkParams p;
  expect(is, "params");
  expect(is, "xi");
  p.xi = parse_real(next(is));
  expect(is, "intervals");
  p.intervals[0] = parse_uint<int>(next(is));
  p.intervals[1] = parse_uint<int>(next(is));
  expect(is, "gains");
  p.gains[0] = parse_real(next(is));
  p.gains[1] = parse_real(next(is));
  expect(is, "eps");
  p.eps = parse_real(next(is));
  expect(is, "min_pts");
  p.min_pts = parse_uint<std::size_t>(next(is));
  expect(is, "count_self");
  p.count_self = parse_uint<int>(next(is)) != 0;
  expect(is, "merge");
  p.merge_threshold = parse_real(next(is));
  expect(is, "grid_step");
  p.grid_step = parse_uint<int>(next(is));

  expect(is, "nodes");
  const auto n = parse_uint<std::size_t>(next(is));
  std::vector<ColorNode> nodes(n);
  for (std::size_t k = 0; k < n; ++k) {
    expect(is, "node");
    if (parse_uint<std::size_t>(next(is)) != k) throw DataError("color network: node ids out of order");
    auto& node = nodes[k];
    node.mean.l = parse_real(next(is));
    node.mean.a = parse_real(next(is));
    node.mean.b = parse_real(next(is));
    const auto count = parse_uint<std::size_t>(next(is));
    node.members.resize(count);
    for (auto& m : node.members) {
      const std::string tok = next(is);
      char* end = nullptr;
      m = static_cast<std::uint32_t>(std::strtoul(tok.c_str(), &end, 16));
      if (tok.size() != 6 || *end != '\0') throw DataError("color network: bad color '" + tok + "'");
    }
  }
  expect(is, "edges");
  const auto m = parse_uint<std::size_t>(next(is));
  std::vector<WeightedEdge> edges(m);
  for (auto& e : edges) {
    expect(is, "edge");
    e.i = parse_uint<std::size_t>(next(is));
    e.j = parse_uint<std::size_t>(next(is));
    e.weight = parse_real(next(is));
    if (e.i >= n || e.j >= n) throw DataError("color network: edge references unknown node");
  }
  expect(is, "similarity");
  const auto dim = parse_uint<Eigen::Index>(next(is));
  if (dim != static_cast<Eigen::Index>(n)) throw DataError("color network: similarity size mismatch");
  Eigen::MatrixXd delta(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) delta(i, j) = parse_real(next(is));
  expect(is, "end");
  return ColorNetwork(p, std::move(nodes), std::move(edges), std::move(delta));
}

ColorNetwork load_network(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open color network file: " + path.string());
  return load_network(is);
}

}  // namespace topocolor
