#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "topocolor/classifier.hpp"
#include "topocolor/color.hpp"
#include "topocolor/color_network.hpp"
#include "topocolor/descriptor.hpp"
#include "topocolor/error.hpp"
#include "topocolor/pipeline.hpp"
#include "topocolor/ply.hpp"
#include "topocolor/pointcloud.hpp"
#include "topocolor/topology.hpp"

namespace py = pybind11;
using namespace topocolor;

namespace {

using PointArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ColorArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

ColoredPointCloud to_cloud(const PointArray& points, const ColorArray& colors) {
  if (points.ndim() != 2 || points.shape(1) != 3) throw InvalidArgument("points must have shape (n, 3)");
  if (colors.ndim() != 2 || colors.shape(1) != 3 || colors.shape(0) != points.shape(0))
    throw InvalidArgument("colors must have shape (n, 3) matching points");
  const auto p = points.unchecked<2>();
  const auto c = colors.unchecked<2>();
  ColoredPointCloud cloud;
  cloud.reserve(static_cast<std::size_t>(points.shape(0)));
  for (py::ssize_t i = 0; i < points.shape(0); ++i)
    cloud.push_back({p(i, 0), p(i, 1), p(i, 2)}, {c(i, 0), c(i, 1), c(i, 2)});
  return cloud;
}

py::tuple from_cloud(const ColoredPointCloud& cloud) {
  const auto n = static_cast<py::ssize_t>(cloud.size());
  PointArray points({n, py::ssize_t{3}});
  ColorArray colors({n, py::ssize_t{3}});
  auto p = points.mutable_unchecked<2>();
  auto c = colors.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& q = cloud.points[static_cast<std::size_t>(i)];
    const auto& s = cloud.colors[static_cast<std::size_t>(i)];
    for (py::ssize_t k = 0; k < 3; ++k) p(i, k) = q(k);
    c(i, 0) = s.r;
    c(i, 1) = s.g;
    c(i, 2) = s.b;
  }
  return py::make_tuple(points, colors);
}

py::array_t<double> values_of(const Descriptor& d) {
  py::array_t<double> out(static_cast<py::ssize_t>(d.values.size()));
  std::copy(d.values.begin(), d.values.end(), out.mutable_data());
  return out;
}

DescriptorParams params_from(py::object config) {
  if (config.is_none()) return {};
  return config.cast<pipeline::PipelineConfig>().descriptor;
}

}  // namespace

PYBIND11_MODULE(topocolor, m) {
  m.doc() = "Topological and color descriptors for RGB-D object recognition";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  auto data_error = py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<VersionMismatch>(m, "VersionMismatch", data_error.ptr());
  py::register_exception<DescriptorOverflow>(m, "DescriptorOverflow", data_error.ptr());
  py::register_exception<InvariantViolation>(m, "InvariantViolation", error.ptr());

  m.def(
      "srgb_to_lab",
      [](double r, double g, double b) {
        const auto lab = srgb_to_lab(r, g, b);
        return py::make_tuple(lab.l, lab.a, lab.b);
      },
      py::arg("r"), py::arg("g"), py::arg("b"), "CIELAB (D65) of an sRGB color with channels in [0, 255].");
  m.def(
      "hyab",
      [](std::array<double, 3> x, std::array<double, 3> y) {
        return hyab(Lab{x[0], x[1], x[2]}, Lab{y[0], y[1], y[2]});
      },
      py::arg("lab1"), py::arg("lab2"), "HyAB distance between two CIELAB colors.");

  py::class_<ColorNetwork>(m, "ColorNetwork")
      .def_static(
          "load", [](const std::filesystem::path& p) { return load_network(p); }, py::arg("path"))
      .def_static(
          "build",
          [](int grid_step, unsigned jobs) {
            ColorNetworkParams p;
            p.grid_step = grid_step;
            return generate_color_network(p, jobs);
          },
          py::arg("grid_step") = ColorNetworkParams{}.grid_step, py::arg("jobs") = 1,
          py::call_guard<py::gil_scoped_release>())
      .def("save", [](const ColorNetwork& n, const std::filesystem::path& p) { save_network(n, p); },
           py::arg("path"))
      .def("__len__", &ColorNetwork::size)
      .def_property_readonly("similarity", &ColorNetwork::similarity)
      .def_property_readonly("edges",
                             [](const ColorNetwork& n) {
                               std::vector<std::tuple<std::size_t, std::size_t, double>> out;
                               for (const auto& e : n.edges()) out.emplace_back(e.i, e.j, e.weight);
                               return out;
                             })
      .def_property_readonly("node_colors",
                             [](const ColorNetwork& n) {
                               std::vector<std::tuple<double, double, double>> out;
                               for (const auto& node : n.nodes()) out.emplace_back(node.mean.l, node.mean.a, node.mean.b);
                               return out;
                             })
      .def("is_connected", &ColorNetwork::is_connected);

  py::class_<pipeline::PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_static(
          "load", [](const std::filesystem::path& p) { return pipeline::load_config(p); }, py::arg("path"))
      .def_readwrite("sigma_s", &pipeline::PipelineConfig::sigma_s)
      .def_property(
          "max_slices", [](const pipeline::PipelineConfig& c) { return c.descriptor.max_slices; },
          [](pipeline::PipelineConfig& c, std::size_t v) { c.descriptor.max_slices = v; });

  m.def(
      "view_normalize",
      [](const PointArray& points, const ColorArray& colors) {
        return from_cloud(view_normalize(to_cloud(points, colors)).cloud);
      },
      py::arg("points"), py::arg("colors"), "Canonical pose of a single-view cloud, translated to the first octant.");
  m.def(
      "prepare_cloud",
      [](const PointArray& points, const ColorArray& colors, const pipeline::PipelineConfig& config, bool occluded) {
        return from_cloud(pipeline::prepare_cloud(to_cloud(points, colors), config, occluded));
      },
      py::arg("points"), py::arg("colors"), py::arg("config") = pipeline::PipelineConfig{},
      py::arg("occluded") = false);
  m.def(
      "h0_persistence",
      [](const PointArray& points, double radius, double cap) {
        const auto cloud = to_cloud(points, ColorArray({points.shape(0), py::ssize_t{3}}));
        std::vector<std::pair<double, double>> out;
        for (const auto& p : h0_persistence(slice_filtration(cloud.points, radius), cap))
          out.emplace_back(p.birth, p.death);
        return out;
      },
      py::arg("points"), py::arg("radius"), py::arg("cap"),
      "H0 (birth, death) pairs of the radius graph filtered by x.");
  m.def(
      "tops",
      [](const PointArray& points, const ColorArray& colors, py::object config) {
        return values_of(tops_descriptor(to_cloud(points, colors), params_from(config)));
      },
      py::arg("points"), py::arg("colors"), py::arg("config") = py::none(),
      "TOPS descriptor of a prepared cloud.");
  m.def(
      "tops2",
      [](const PointArray& points, const ColorArray& colors, const ColorNetwork& network, py::object config) {
        return values_of(tops2_descriptor(to_cloud(points, colors), network, params_from(config)));
      },
      py::arg("points"), py::arg("colors"), py::arg("network"), py::arg("config") = py::none(),
      "TOPS2 descriptor of a prepared cloud.");
  m.def(
      "read_ply", [](const std::filesystem::path& p) { return from_cloud(read_ply(p)); }, py::arg("path"),
      "Points (n, 3) and colors (n, 3) of a PLY file.");

  py::class_<pipeline::ModelPair>(m, "Models")
      .def_static(
          "load", [](const std::filesystem::path& p) { return pipeline::load_models(p); }, py::arg("path"))
      .def_property_readonly("classes", [](const pipeline::ModelPair& p) { return p.tops.classes; });

  m.def(
      "classify",
      [](const PointArray& points, const ColorArray& colors, const pipeline::ModelPair& models,
         const ColorNetwork& network, const pipeline::PipelineConfig& config) {
        const auto r = pipeline::classify(to_cloud(points, colors), models, network, config);
        py::dict out;
        out["label"] = r.label;
        out["confidence"] = r.confidence;
        out["model"] = r.winner == ModelId::m1 ? "tops" : "tops2";
        return out;
      },
      py::arg("points"), py::arg("colors"), py::arg("models"), py::arg("network"),
      py::arg("config") = pipeline::PipelineConfig{}, "Fused label of a prepared cloud.");
}
