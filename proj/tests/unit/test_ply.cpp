#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "topocolor/error.hpp"
#include "topocolor/ply.hpp"

using namespace topocolor;

namespace {

ColoredPointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  ColoredPointCloud c;
  for (std::size_t i = 0; i < n; ++i)
    c.push_back({u(gen), u(gen), u(gen)}, Srgb::unpack(static_cast<std::uint32_t>(gen() & 0xffffff)));
  return c;
}

void check_float_equal(const ColoredPointCloud& got, const ColoredPointCloud& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    for (int d = 0; d < 3; ++d) CHECK(got.points[i](d) == static_cast<double>(static_cast<float>(want.points[i](d))));
    CHECK(got.colors[i] == want.colors[i]);
  }
}

}  // namespace

TEST_CASE("binary and ascii round trips keep float precision") {
  const auto c = random_cloud(500, 3);
  for (auto fmt : {PlyFormat::binary_little_endian, PlyFormat::ascii}) {
    std::stringstream ss;
    write_ply(ss, c, fmt);
    check_float_equal(read_ply(ss), c);
  }
}

TEST_CASE("file round trip") {
  const auto c = random_cloud(40, 5);
  const auto path = std::filesystem::temp_directory_path() / "topocolor_test_ply.ply";
  write_ply(path, c);
  check_float_equal(read_ply(path), c);
  std::filesystem::remove(path);
}

TEST_CASE("extra properties and other scalar types are accepted") {
  std::istringstream in(
      "ply\nformat ascii 1.0\ncomment hello\nelement vertex 2\n"
      "property double x\nproperty double y\nproperty double z\n"
      "property float nx\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
      "property uchar alpha\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n"
      "1.5 2.5 3.5 0 10 20 30 255\n-1 0 0.25 1 1 2 3 0\n");
  const auto c = read_ply(in);
  REQUIRE(c.size() == 2);
  CHECK(c.points[0] == Eigen::Vector3d(1.5, 2.5, 3.5));
  CHECK(c.colors[0] == Srgb{10, 20, 30});
  CHECK(c.colors[1] == Srgb{1, 2, 3});
}

TEST_CASE("malformed input is a data error") {
  SUBCASE("missing magic") {
    std::istringstream in("plx\n");
    CHECK_THROWS_AS(read_ply(in), DataError);
  }
  SUBCASE("missing color") {
    std::istringstream in(
        "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
        "property float z\nend_header\n1 2 3\n");
    CHECK_THROWS_AS(read_ply(in), DataError);
  }
  SUBCASE("truncated binary body") {
    std::stringstream ss;
    write_ply(ss, random_cloud(10, 1));
    const std::string s = ss.str();
    std::istringstream in(s.substr(0, s.size() - 7));
    CHECK_THROWS_AS(read_ply(in), DataError);
  }
  SUBCASE("unsupported format") {
    std::istringstream in("ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n");
    CHECK_THROWS_AS(read_ply(in), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_ply(std::filesystem::path("/nonexistent/cloud.ply")), DataError);
  }
}
