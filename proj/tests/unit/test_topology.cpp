#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "topocolor/error.hpp"
#include "topocolor/topology.hpp"

using namespace topocolor;

namespace {

std::vector<std::pair<double, double>> sorted_pairs(const PersistenceDiagram& d) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : d) out.emplace_back(p.birth, p.death);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Eigen::Vector3d> random_slice(std::mt19937_64& gen, std::size_t n, double width) {
  std::uniform_real_distribution<double> u(0.0, width), v(0.0, 0.3);
  std::vector<Eigen::Vector3d> pts(n);
  for (auto& p : pts) p = {u(gen), v(gen), 0.0};
  return pts;
}

}  // namespace

TEST_CASE("filtration examples") {
  std::vector<Eigen::Vector3d> one{{0.3, 0, 0}};
  const auto f1 = slice_filtration(one, 0.05);
  REQUIRE(f1.vertices.size() == 1);
  CHECK(f1.vertices[0].value == 0.3);
  CHECK(f1.edges.empty());

  std::vector<Eigen::Vector3d> two{{0.4, 0, 0}, {0.1, 0, 0}};
  const auto f2 = slice_filtration(two, 1.0);
  REQUIRE(f2.edges.size() == 1);
  CHECK(f2.edges[0].value == 0.4);
  CHECK(f2.vertices[0].id == 1);

  std::vector<Eigen::Vector3d> three{{0.1, 0, 0}, {0.2, 0.01, 0}, {0.15, 0.02, 0}};
  const auto f3 = slice_filtration(three, 1.0);
  REQUIRE(f3.edges.size() == 3);
  CHECK(f3.edges[0].value == 0.15);
  CHECK(f3.edges[1].value == 0.2);
  CHECK(f3.edges[2].value == 0.2);
  CHECK(slice_filtration({}, 1.0).vertices.empty());
  CHECK_THROWS_AS(slice_filtration(three, 0.0), InvalidArgument);
}

TEST_CASE("filtration edges match exhaustive enumeration") {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 50; ++t) {
    const auto pts = random_slice(gen, 40, 0.4);
    const double r = 0.05;
    const auto f = slice_filtration(pts, r);
    std::size_t expect = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) expect += (pts[i] - pts[j]).norm() <= r;
    CHECK(f.edges.size() == expect);
    for (const auto& e : f.edges) {
      CHECK(e.value == std::max(pts[e.u].x(), pts[e.v].x()));
      CHECK(e.u < e.v);
    }
    for (std::size_t k = 1; k < f.vertices.size(); ++k)
      CHECK(f.vertices[k - 1].value <= f.vertices[k].value);
  }
}

TEST_CASE("persistence examples") {
  Filtration iso;
  iso.vertices = {{0, 0.1}, {1, 0.2}, {2, 0.3}};
  const auto d = h0_persistence(iso, 1.0);
  REQUIRE(d.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(d[k].birth == iso.vertices[k].value);
    CHECK(d[k].death == 1.0);
  }
  Filtration two;
  two.vertices = {{0, 0.1}, {1, 0.4}};
  two.edges = {{0, 1, 0.4}};
  CHECK(sorted_pairs(h0_persistence(two, 0.9)) ==
        std::vector<std::pair<double, double>>{{0.1, 0.9}, {0.4, 0.4}});
  CHECK(h0_persistence(Filtration{}, 1.0).empty());
  CHECK_THROWS_AS(h0_persistence(two, 0.3), InvalidArgument);
}

TEST_CASE("persistence matches the brute-force sweep") {
  std::mt19937_64 gen(42);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + gen() % 30;
    auto pts = random_slice(gen, n, 0.3);
    // Snap some coordinates to create ties.
    if (t % 3 == 0)
      for (auto& p : pts) p.x() = std::round(p.x() * 40.0) / 40.0;
    const double r = 0.03 + 0.01 * (t % 5);
    const auto f = slice_filtration(pts, r);
    double w = 0.0;
    for (const auto& p : pts) w = std::max(w, p.x());
    const double cap = w + 0.025;
    const auto d = h0_persistence(f, cap);
    CHECK(d.size() == n);
    CHECK(sorted_pairs(d) == oracle::h0_bruteforce(f, cap));
    for (const auto& p : d) CHECK(p.death >= p.birth);
  }
}

TEST_CASE("permuting points never changes the diagram") {
  std::mt19937_64 gen(7);
  for (int t = 0; t < 50; ++t) {
    auto pts = random_slice(gen, 25, 0.2);
    for (auto& p : pts) p.x() = std::round(p.x() * 20.0) / 20.0;
    const auto base = sorted_pairs(h0_persistence(slice_filtration(pts, 0.06), 0.3));
    std::shuffle(pts.begin(), pts.end(), gen);
    CHECK(sorted_pairs(h0_persistence(slice_filtration(pts, 0.06), 0.3)) == base);
  }
}

TEST_CASE("persistence image examples") {
  const PersistenceImageParams p;
  const auto zero = persistence_image({}, p);
  CHECK(zero.size() == 256);
  CHECK(std::all_of(zero.begin(), zero.end(), [](double v) { return v == 0.0; }));

  const PersistenceDiagram d1{{0.05, 0.2}, {0.1, 0.1}};
  const PersistenceDiagram d2{{0.3, 0.35}};
  PersistenceDiagram both = d1;
  both.insert(both.end(), d2.begin(), d2.end());
  const auto a = persistence_image(d1, p), b = persistence_image(d2, p), ab = persistence_image(both, p);
  for (std::size_t k = 0; k < ab.size(); ++k) CHECK(ab[k] == doctest::Approx(a[k] + b[k]).epsilon(1e-12));

  PersistenceImageParams wide = p;
  wide.birth_max = wide.pers_max = 0.8;
  const auto one = persistence_image({{0.21, 0.62}}, wide);
  const auto arg = static_cast<int>(std::max_element(one.begin(), one.end()) - one.begin());
  const double cell = 0.8 / 16;
  CHECK(arg / 16 == static_cast<int>(0.41 / cell));
  CHECK(arg % 16 == static_cast<int>(0.21 / cell));
}

TEST_CASE("persistence image matches direct evaluation") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 0.4);
  const PersistenceImageParams p;
  for (int t = 0; t < 20; ++t) {
    PersistenceDiagram d;
    for (int k = 0; k < 12; ++k) {
      const double b = u(gen);
      d.push_back({b, b + 0.5 * u(gen)});
    }
    const auto got = persistence_image(d, p);
    const auto want = oracle::persistence_image(d, p);
    for (std::size_t k = 0; k < got.size(); ++k) {
      CHECK(got[k] >= 0.0);
      CHECK(std::abs(got[k] - want[k]) < 1e-12);
    }
  }
}

TEST_CASE("persistence image is stable under small perturbations") {
  const auto base = fixture::stability_cloud();
  const auto ref = fixture::slice_image(base);
  std::mt19937_64 gen(99);
  const double eps = fixture::kStabilityEps;
  std::uniform_real_distribution<double> u(-eps, eps);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    auto pts = base;
    for (auto& q : pts) q += Eigen::Vector3d(u(gen), u(gen), 0.0);
    const auto img = fixture::slice_image(pts);
    double linf = 0.0;
    for (std::size_t k = 0; k < img.size(); ++k) linf = std::max(linf, std::abs(img[k] - ref[k]));
    worst = std::max(worst, linf / eps);
  }
  MESSAGE("stability ratio " << worst);
  CHECK(worst <= fixture::kStabilityC);
}

TEST_CASE("diagram csv") {
  std::ostringstream os;
  write_diagram_csv(os, {{0.5, 1.0}});
  CHECK(os.str() == "birth,death\n0.5,1\n");
}
