#pragma once

// H0 persistence of slices filtered by x, and persistence images.

#include <Eigen/Core>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace topocolor {

struct FiltrationVertex {
  std::size_t id = 0;
  double value = 0.0;
};

struct FiltrationEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double value = 0.0;
};

/// Vertices sorted by (value, id); edges sorted by (value, u, v).
struct Filtration {
  std::vector<FiltrationVertex> vertices;
  std::vector<FiltrationEdge> edges;
};

/// Vertices at the points' x values; edges between pairs within Euclidean
/// distance <= radius, valued at the larger endpoint x. Vertex ids are the
/// positions in `points`.
Filtration slice_filtration(std::span<const Eigen::Vector3d> points, double radius);

struct PersistencePair {
  double birth = 0.0;
  double death = 0.0;

  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

using PersistenceDiagram = std::vector<PersistencePair>;

/// Union-find sweep with the elder rule: a merge kills the component born
/// later (ties broken by larger vertex id). Components alive at the end die
/// at `cap`. Pairs are listed in vertex order of the filtration.
PersistenceDiagram h0_persistence(const Filtration& f, double cap);

struct PersistenceImageParams {
  int height = 16;  // rows, along persistence
  int width = 16;   // columns, along birth
  double birth_min = 0.0;
  double birth_max = 0.4;
  double pers_min = 0.0;
  double pers_max = 0.4;
  double sigma = 0.025;
  /// Persistence at which the linear weight reaches 1; <= 0 uses pers_max.
  double weight_saturation = 0.0;
};

/// Row-major height x width image: row r holds persistence bin r, column c
/// birth bin c. Each pair adds w(p) * exp(-|x - (b, p)|^2 / (2 sigma^2)) at
/// pixel centers, with w(p) = clamp(p / saturation, 0, 1).
std::vector<double> persistence_image(const PersistenceDiagram& d, const PersistenceImageParams& params);

/// Rows of "birth,death".
void write_diagram_csv(std::ostream& out, const PersistenceDiagram& d);

}  // namespace topocolor
