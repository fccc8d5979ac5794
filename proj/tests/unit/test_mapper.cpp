#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "topocolor/mapper.hpp"

using namespace topocolor;
using namespace topocolor::mapper;

namespace {

using P2 = std::array<double, 2>;

double dist(const P2& a, const P2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

std::vector<int> run_dbscan(const std::vector<P2>& pts, double eps, std::size_t min_pts) {
  return dbscan(std::span<const P2>(pts), dist, DbscanParams{eps, min_pts, true});
}

std::size_t cluster_count(const std::vector<int>& labels) {
  int m = -1;
  for (int l : labels) m = std::max(m, l);
  return static_cast<std::size_t>(m + 1);
}

RefinedCluster cluster(std::vector<std::size_t> members, CellIndex cell = {}) {
  return {cell, std::move(members)};
}

// Every point's lens value lies in a cluster of a cell containing it and
// clusters are non-empty.
CellClusterer dbscan_clusterer(const std::vector<P2>& pts, double eps, std::size_t min_pts) {
  return [&pts, eps, min_pts](std::span<const std::size_t> ids) {
    std::vector<P2> local;
    for (auto i : ids) local.push_back(pts[i]);
    return run_dbscan(local, eps, min_pts);
  };
}

}  // namespace

TEST_CASE("cover examples") {
  SUBCASE("single interval") {
    std::vector<LensPoint> v{{0, 0}, {10, 1}};
    const Cover c = build_cover(v, {1, 1}, {0.0, 0.0});
    REQUIRE(c.intervals[0].size() == 1);
    CHECK(c.intervals[0][0].low == 0.0);
    CHECK(c.intervals[0][0].high == 10.0);
  }
  SUBCASE("three intervals without overlap") {
    std::vector<LensPoint> v{{0, 0}, {9, 1}, {4.5, 0.5}};
    const Cover c = build_cover(v, {3, 1}, {0.0, 0.0});
    REQUIRE(c.intervals[0].size() == 3);
    const double want[3][2] = {{0, 3}, {3, 6}, {6, 9}};
    for (int k = 0; k < 3; ++k) {
      CHECK(c.intervals[0][k].low == doctest::Approx(want[k][0]));
      CHECK(c.intervals[0][k].high == doctest::Approx(want[k][1]));
    }
  }
  SUBCASE("color network resolution") {
    std::vector<LensPoint> v{{0, 0}, {1, 1}};
    CHECK(build_cover(v, {3, 8}, {0.10, 0.25}).cell_count() == 24);
  }
}

TEST_CASE("cover errors") {
  std::vector<LensPoint> v{{0, 0}};
  CHECK_THROWS_AS(build_cover({}, {1, 1}, {0, 0}), InvalidArgument);
  CHECK_THROWS_AS(build_cover(v, {1, 1}, {1.0, 0}), InvalidArgument);
  CHECK_THROWS_AS(build_cover(v, {0, 1}, {0, 0}), InvalidArgument);
}

TEST_CASE("consecutive intervals overlap by the gain fraction and cover the data") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-5.0, 17.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LensPoint> v(200);
    for (auto& p : v) p = {u(gen), u(gen)};
    const int n0 = 1 + trial % 7, n1 = 1 + trial % 5;
    const double g0 = 0.05 * (trial % 10), g1 = 0.3;
    const Cover c = build_cover(v, {n0, n1}, {g0, g1});
    for (int d = 0; d < 2; ++d) {
      const auto& iv = c.intervals[d];
      const double g = d == 0 ? g0 : g1;
      for (std::size_t k = 0; k < iv.size(); ++k) {
        CHECK(iv[k].length() == doctest::Approx(iv[0].length()));
        if (k > 0) {
          const double overlap = iv[k - 1].high - iv[k].low;
          CHECK(overlap == doctest::Approx(g * iv[k].length()).epsilon(1e-9));
        }
      }
    }
    for (const auto& p : v) {
      bool covered = false;
      for (std::size_t f = 0; f < c.cell_count(); ++f) covered = covered || c.contains(c.cell(f), p);
      CHECK(covered);
    }
  }
}

TEST_CASE("dbscan examples") {
  SUBCASE("two separated blobs") {
    std::vector<P2> pts;
    for (int k = 0; k < 10; ++k) pts.push_back({0.01 * k, 0.0});
    for (int k = 0; k < 10; ++k) pts.push_back({10.0 + 0.01 * k, 0.0});
    const auto labels = run_dbscan(pts, 0.5, 6);
    CHECK(cluster_count(labels) == 2);
    CHECK(std::count(labels.begin(), labels.end(), kNoise) == 0);
    CHECK(labels[0] != labels[10]);
  }
  SUBCASE("isolated point") {
    std::vector<P2> pts{{0, 0}};
    CHECK(run_dbscan(pts, 1.0, 6) == std::vector<int>{kNoise});
  }
  SUBCASE("collinear chain") {
    std::vector<P2> pts;
    for (int k = 0; k < 20; ++k) pts.push_back({0.5 * k, 0.0});
    const auto labels = run_dbscan(pts, 1.0, 3);
    CHECK(cluster_count(labels) == 1);
    CHECK(std::count(labels.begin(), labels.end(), 0) == 20);
  }
  SUBCASE("self counting switch") {
    // Five points within eps: core with self counted, not without.
    std::vector<P2> pts;
    for (int k = 0; k < 5; ++k) pts.push_back({0.1 * k, 0.0});
    CHECK(cluster_count(dbscan(std::span<const P2>(pts), dist, DbscanParams{1.0, 5, true})) == 1);
    CHECK(cluster_count(dbscan(std::span<const P2>(pts), dist, DbscanParams{1.0, 5, false})) == 0);
  }
  SUBCASE("invalid parameters") {
    std::vector<P2> pts{{0, 0}};
    CHECK_THROWS_AS(run_dbscan(pts, 0.0, 1), InvalidArgument);
    CHECK_THROWS_AS(run_dbscan(pts, 1.0, 0), InvalidArgument);
  }
}

TEST_CASE("dbscan agrees with core-graph components on random data") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 30 + trial * 3;
    std::vector<P2> pts(n);
    for (auto& p : pts) p = {u(gen), u(gen)};
    const double eps = 0.8 + 0.05 * (trial % 10);
    const std::size_t min_pts = 2 + trial % 5;
    const auto labels = run_dbscan(pts, eps, min_pts);

    std::vector<std::vector<std::size_t>> nb(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (dist(pts[i], pts[j]) <= eps) nb[i].push_back(j);
    std::vector<bool> core(n);
    for (std::size_t i = 0; i < n; ++i) core[i] = nb[i].size() >= min_pts;
    // Components of the core graph by flood fill.
    std::vector<int> comp(n, -1);
    int nc = 0;
    for (std::size_t s = 0; s < n; ++s) {
      if (!core[s] || comp[s] >= 0) continue;
      std::vector<std::size_t> stack{s};
      comp[s] = nc;
      while (!stack.empty()) {
        auto x = stack.back();
        stack.pop_back();
        for (auto y : nb[x])
          if (core[y] && comp[y] < 0) {
            comp[y] = nc;
            stack.push_back(y);
          }
      }
      ++nc;
    }
    CHECK(cluster_count(labels) == static_cast<std::size_t>(nc));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (core[i] && core[j]) CHECK((comp[i] == comp[j]) == (labels[i] == labels[j]));
    for (std::size_t i = 0; i < n; ++i) {
      if (core[i]) continue;
      bool near_core = false;
      bool label_ok = false;
      for (auto j : nb[i])
        if (core[j]) {
          near_core = true;
          label_ok = label_ok || labels[j] == labels[i];
        }
      if (near_core)
        CHECK(label_ok);
      else
        CHECK(labels[i] == kNoise);
    }
  }
}

TEST_CASE("refined pullback examples") {
  SUBCASE("one cell one cluster") {
    std::vector<P2> pts{{0, 0}, {0.1, 0}, {0.2, 0}};
    std::vector<LensPoint> lens(pts.begin(), pts.end());
    const Cover c = build_cover(lens, {1, 1}, {0, 0});
    const auto out = refined_pullback(lens, c, dbscan_clusterer(pts, 1.0, 1));
    REQUIRE(out.size() == 1);
    CHECK(out[0].members == std::vector<std::size_t>{0, 1, 2});
  }
  SUBCASE("overlap membership") {
    std::vector<P2> pts{{0, 0}, {5, 0}, {10, 0}};
    std::vector<LensPoint> lens(pts.begin(), pts.end());
    const Cover c = build_cover(lens, {2, 1}, {0.5, 0});
    const auto out = refined_pullback(lens, c, dbscan_clusterer(pts, 100.0, 1));
    REQUIRE(out.size() == 2);
    CHECK(std::count(out[0].members.begin(), out[0].members.end(), 1) == 1);
    CHECK(std::count(out[1].members.begin(), out[1].members.end(), 1) == 1);
  }
  SUBCASE("two cells with two clusters each") {
    std::vector<P2> pts{{0, 0}, {0.1, 0}, {0, 5}, {0.1, 5}, {10, 0}, {9.9, 0}, {10, 5}, {9.9, 5}};
    std::vector<LensPoint> lens(pts.begin(), pts.end());
    const Cover c = build_cover(lens, {2, 1}, {0, 0});
    const auto out = refined_pullback(lens, c, dbscan_clusterer(pts, 1.0, 1));
    REQUIRE(out.size() == 4);
    CHECK(out[0].members == std::vector<std::size_t>{0, 1});
    CHECK(out[1].members == std::vector<std::size_t>{2, 3});
    CHECK(out[2].members == std::vector<std::size_t>{4, 5});
    CHECK(out[3].members == std::vector<std::size_t>{6, 7});
    CHECK(out[0].cell.first == 0);
    CHECK(out[2].cell.first == 1);
  }
  SUBCASE("noise is dropped") {
    std::vector<P2> pts{{0, 0}, {0.1, 0}, {5, 0}};
    std::vector<LensPoint> lens(pts.begin(), pts.end());
    const Cover c = build_cover(lens, {1, 1}, {0, 0});
    const auto out = refined_pullback(lens, c, dbscan_clusterer(pts, 1.0, 2));
    REQUIRE(out.size() == 1);
    CHECK(out[0].members == std::vector<std::size_t>{0, 1});
  }
}

TEST_CASE("nerve examples") {
  CHECK(nerve({cluster({0, 1}), cluster({2}), cluster({3, 4})}).edges.empty());
  const auto g = nerve({cluster({1, 2, 3}), cluster({3, 4})});
  CHECK(g.edges == std::vector<Edge>{{0, 1}});
  std::vector<RefinedCluster> chain;
  for (std::size_t k = 0; k < 5; ++k) chain.push_back(cluster({2 * k, 2 * k + 1, 2 * k + 2}));
  const auto path = nerve(chain);
  CHECK(path.edges == std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}, {3, 4}});
}

TEST_CASE("nerve matches pairwise intersection on random instances") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_nodes = 1 + gen() % 12;
    std::vector<RefinedCluster> cs;
    for (std::size_t k = 0; k < n_nodes; ++k) {
      std::set<std::size_t> m;
      const std::size_t size = 1 + gen() % 6;
      while (m.size() < size) m.insert(gen() % 40);
      cs.push_back(cluster({m.begin(), m.end()}));
    }
    const auto g = nerve(cs);
    for (std::size_t i = 0; i < n_nodes; ++i) {
      CHECK_FALSE(g.has_edge(i, i));
      for (std::size_t j = i + 1; j < n_nodes; ++j) {
        std::vector<std::size_t> common;
        std::set_intersection(cs[i].members.begin(), cs[i].members.end(), cs[j].members.begin(),
                              cs[j].members.end(), std::back_inserter(common));
        CHECK(g.has_edge(i, j) == !common.empty());
      }
    }
    CHECK(std::is_sorted(g.edges.begin(), g.edges.end()));
    CHECK(std::adjacent_find(g.edges.begin(), g.edges.end()) == g.edges.end());
  }
}

TEST_CASE("planted clusters under the identity lens") {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> noise(0.0, 0.2);
  std::vector<P2> pts;
  for (int k = 0; k < 150; ++k) pts.push_back({noise(gen), noise(gen)});
  for (int k = 0; k < 150; ++k) pts.push_back({8.0 + noise(gen), 8.0 + noise(gen)});
  std::vector<LensPoint> lens(pts.begin(), pts.end());
  const Cover c = build_cover(lens, {4, 4}, {0.3, 0.3});
  const auto clusters = refined_pullback(lens, c, dbscan_clusterer(pts, 0.6, 3));
  const auto g = nerve(clusters);
  CHECK(connected_components(g.nodes.size(), g.edges) == 2);
  std::vector<bool> seen(pts.size(), false);
  for (const auto& n : g.nodes) {
    CHECK_FALSE(n.members.empty());
    for (auto m : n.members) {
      seen[m] = true;
      CHECK(c.contains(n.cell, lens[m]));
    }
  }
  // Every point not reported as noise in its cells is somewhere in the graph.
  std::size_t missing = std::count(seen.begin(), seen.end(), false);
  CHECK(missing < 5);
}

TEST_CASE("pullback output does not depend on thread count") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<P2> pts(600);
  for (auto& p : pts) p = {u(gen), u(gen)};
  std::vector<LensPoint> lens(pts.begin(), pts.end());
  const Cover c = build_cover(lens, {5, 6}, {0.2, 0.3});
  const auto clusterer = dbscan_clusterer(pts, 0.5, 3);
  std::ostringstream a, b;
  write_graph(a, nerve(refined_pullback(lens, c, clusterer, 1)));
  write_graph(b, nerve(refined_pullback(lens, c, clusterer, 4)));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("mapper-graph 1\n", 0) == 0);
}
