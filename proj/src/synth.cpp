#include "topocolor/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <thread>

#include "topocolor/classifier.hpp"
#include "topocolor/error.hpp"
#include "topocolor/ply.hpp"
#include "shape_json.hpp"

namespace topocolor::synth {

namespace {

constexpr double kPi = std::numbers::pi;
// View cosines at or below this count as edge-on, hence hidden.
constexpr double kGrazing = 1e-9;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace

double ShapeSpec::vertical_extent() const {
  switch (primitive) {
    case Primitive::box: return size.z();
    case Primitive::cylinder:
    case Primitive::capsule: return height;
    case Primitive::sphere: return 2.0 * radius;
  }
  return 0.0;
}

Srgb ShapeSpec::color_at(const Eigen::Vector3d& p) const {
  switch (scheme) {
    case ColorScheme::uniform: return primary;
    case ColorScheme::two_tone: return p.z() >= 0.0 ? primary : secondary;
    case ColorScheme::bands: {
      const double h = vertical_extent();
      const double t = std::clamp((p.z() + 0.5 * h) / h, 0.0, 1.0);
      const int band = std::min(bands - 1, static_cast<int>(std::floor(t * bands)));
      return band % 2 == 0 ? primary : secondary;
    }
  }
  return primary;
}

void validate(const ShapeSpec& s) {
  switch (s.primitive) {
    case Primitive::box: require((s.size.array() > 0.0).all(), "shape " + s.label + ": box size must be positive"); break;
    case Primitive::cylinder:
      require(s.radius > 0.0 && s.height > 0.0, "shape " + s.label + ": radius and height must be positive");
      break;
    case Primitive::sphere: require(s.radius > 0.0, "shape " + s.label + ": radius must be positive"); break;
    case Primitive::capsule:
      require(s.radius > 0.0 && s.height >= 2.0 * s.radius,
              "shape " + s.label + ": capsule needs radius > 0 and height >= 2 radius");
      break;
  }
  if (s.scheme == ColorScheme::bands) require(s.bands >= 1, "shape " + s.label + ": bands must be >= 1");
}

// ---------------------------------------------------------------------------
// Surface sampling

namespace {

class Sampler {
 public:
  Sampler(const SamplingOptions& o) : o_(o), rng_(o.seed) {
    require(o.spacing > 0.0, "sampling spacing must be positive");
    require(o.jitter >= 0.0 && o.jitter < 1.0, "sampling jitter must be in [0, 1)");
  }

  int count(double length, int at_least = 1) const {
    return std::max(at_least, static_cast<int>(std::lround(length / o_.spacing)));
  }

  // Cell-center parameter in [0, 1) for cell i of n.
  double at(int i, int n) {
    double u = (i + 0.5) / n;
    if (o_.jitter > 0.0) u += (rng_.uniform() - 0.5) * o_.jitter / n;
    return u;
  }

  void add(const Eigen::Vector3d& p, const Eigen::Vector3d& n) { out.push_back({p, n}); }

  void plane(const Eigen::Vector3d& center, const Eigen::Vector3d& u_axis, double u_len,
             const Eigen::Vector3d& v_axis, double v_len, const Eigen::Vector3d& normal) {
    const int nu = count(u_len), nv = count(v_len);
    for (int i = 0; i < nu; ++i)
      for (int j = 0; j < nv; ++j)
        add(center + (at(i, nu) - 0.5) * u_len * u_axis + (at(j, nv) - 0.5) * v_len * v_axis, normal);
  }

  void disk(double radius, double z, double normal_z) {
    const int rings = count(radius);
    for (int i = 0; i < rings; ++i) {
      const double r = at(i, rings) * radius;
      const int m = count(2.0 * kPi * r);
      for (int k = 0; k < m; ++k) {
        const double t = 2.0 * kPi * at(k, m);
        add({r * std::cos(t), r * std::sin(t), z}, {0, 0, normal_z});
      }
    }
  }

  void tube(double radius, double length) {
    const int m = count(2.0 * kPi * radius, 8), nz = count(length);
    for (int k = 0; k < m; ++k) {
      const double t = 2.0 * kPi * at(k, m);
      const Eigen::Vector3d n(std::cos(t), std::sin(t), 0.0);
      for (int j = 0; j < nz; ++j) add({radius * n.x(), radius * n.y(), (at(j, nz) - 0.5) * length}, n);
    }
  }

  // Polar band [phi0, phi1] of a sphere centered at (0, 0, zc).
  void sphere_zone(double radius, double phi0, double phi1, double zc) {
    const int lat = count(radius * (phi1 - phi0), 2);
    for (int i = 0; i < lat; ++i) {
      const double phi = phi0 + at(i, lat) * (phi1 - phi0);
      const int m = count(2.0 * kPi * radius * std::sin(phi));
      for (int k = 0; k < m; ++k) {
        const double t = 2.0 * kPi * at(k, m);
        const Eigen::Vector3d n(std::sin(phi) * std::cos(t), std::sin(phi) * std::sin(t), std::cos(phi));
        add(radius * n + Eigen::Vector3d(0, 0, zc), n);
      }
    }
  }

  std::vector<SurfacePoint> out;

 private:
  SamplingOptions o_;
  Rng rng_;
};

}  // namespace

std::vector<SurfacePoint> sample_surface(const ShapeSpec& shape, const SamplingOptions& options) {
  validate(shape);
  Sampler s(options);
  switch (shape.primitive) {
    case Primitive::box: {
      const Eigen::Vector3d h = 0.5 * shape.size;
      const Eigen::Vector3d ex = Eigen::Vector3d::UnitX(), ey = Eigen::Vector3d::UnitY(),
                            ez = Eigen::Vector3d::UnitZ();
      for (double sign : {1.0, -1.0}) {
        s.plane(sign * h.x() * ex, ey, shape.size.y(), ez, shape.size.z(), sign * ex);
        s.plane(sign * h.y() * ey, ex, shape.size.x(), ez, shape.size.z(), sign * ey);
        s.plane(sign * h.z() * ez, ex, shape.size.x(), ey, shape.size.y(), sign * ez);
      }
      break;
    }
    case Primitive::cylinder:
      s.tube(shape.radius, shape.height);
      s.disk(shape.radius, 0.5 * shape.height, 1.0);
      s.disk(shape.radius, -0.5 * shape.height, -1.0);
      break;
    case Primitive::sphere: s.sphere_zone(shape.radius, 0.0, kPi, 0.0); break;
    case Primitive::capsule: {
      const double body = shape.height - 2.0 * shape.radius;
      if (body > 0.0) s.tube(shape.radius, body);
      s.sphere_zone(shape.radius, 0.0, kPi / 2.0, 0.5 * body);
      s.sphere_zone(shape.radius, kPi / 2.0, kPi, -0.5 * body);
      break;
    }
  }
  return std::move(s.out);
}

Eigen::Vector3d camera_direction(double polar, double azimuth) {
  return {std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth), std::cos(polar)};
}

ColoredPointCloud render_view(const ShapeSpec& shape, const Eigen::Vector3d& direction,
                              const SamplingOptions& options) {
  require(std::abs(direction.norm() - 1.0) < 1e-9, "render_view: camera direction must be a unit vector");
  require(options.depth_quantum >= 0.0, "render_view: depth quantum must be non-negative");
  ColoredPointCloud cloud;
  for (const auto& sp : sample_surface(shape, options)) {
    if (!(sp.normal.dot(direction) > kGrazing)) continue;
    Eigen::Vector3d p = sp.position;
    if (options.depth_quantum > 0.0) {
      const double depth = options.camera_radius - p.dot(direction);
      const double q = std::round(depth / options.depth_quantum) * options.depth_quantum;
      p += (depth - q) * direction;
    }
    cloud.push_back(p, shape.color_at(sp.position));
  }
  return cloud;
}

std::vector<CameraGrid::View> CameraGrid::views() const {
  const auto steps = [](double range, double step, const char* what) {
    require(step > 0.0, std::string("camera grid: ") + what + " step must be positive");
    const double n = range / step;
    const double r = std::round(n);
    require(r >= 1.0 && std::abs(n - r) < 1e-9, std::string("camera grid: ") + what + " step must divide its range");
    return static_cast<int>(r);
  };
  const int np = steps(kPi, polar_step, "polar");
  const int na = steps(2.0 * kPi, azimuth_step, "azimuth");
  std::vector<View> out;
  for (int i = 0; i <= np; ++i)
    for (int j = 0; j < na; ++j) out.push_back({i * polar_step, j * azimuth_step});
  return out;
}

std::vector<LabeledCloud> generate_training_set(const std::vector<ShapeSpec>& shapes, const CameraGrid& grid,
                                                const SamplingOptions& options, unsigned jobs) {
  require(!shapes.empty(), "generate_training_set: no shapes");
  for (const auto& s : shapes) validate(s);
  const auto views = grid.views();
  std::vector<LabeledCloud> out(shapes.size() * views.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < out.size();) {
      const std::size_t si = k / views.size();
      const auto& v = views[k % views.size()];
      out[k] = {shapes[si].label, si, v.polar, v.azimuth, false,
                render_view(shapes[si], camera_direction(v.polar, v.azimuth), options)};
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(out.size())));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  pool.clear();
  for (const auto& c : out)
    if (c.cloud.empty()) throw InvariantViolation("generate_training_set: empty view of " + c.label);
  return out;
}

ColoredPointCloud occlude(const ColoredPointCloud& cloud, double fraction, OcclusionEnd end) {
  require(fraction >= 0.0 && fraction < 1.0, "occlude: fraction must be in [0, 1)");
  require(end != OcclusionEnd::both || 2.0 * fraction < 1.0, "occlude: removing both ends leaves nothing");
  if (fraction == 0.0 || cloud.empty()) return cloud;
  const auto box = bounding_box(cloud);
  const double cut = fraction * (box.max.z() - box.min.z());
  const double top = box.max.z() - cut, bottom = box.min.z() + cut;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double z = cloud.points[i].z();
    if ((end == OcclusionEnd::top || end == OcclusionEnd::both) && z > top) continue;
    if ((end == OcclusionEnd::bottom || end == OcclusionEnd::both) && z < bottom) continue;
    keep.push_back(i);
  }
  if (keep.empty()) throw DataError("occlude: nothing left of the cloud");
  return cloud.subset(keep);
}

// ---------------------------------------------------------------------------
// Names and the dataset manifest

std::string to_string(Primitive p) {
  switch (p) {
    case Primitive::box: return "box";
    case Primitive::cylinder: return "cylinder";
    case Primitive::sphere: return "sphere";
    case Primitive::capsule: return "capsule";
  }
  return "?";
}

std::string to_string(ColorScheme s) {
  switch (s) {
    case ColorScheme::uniform: return "uniform";
    case ColorScheme::two_tone: return "two_tone";
    case ColorScheme::bands: return "bands";
  }
  return "?";
}

std::string to_string(OcclusionEnd e) {
  switch (e) {
    case OcclusionEnd::top: return "top";
    case OcclusionEnd::bottom: return "bottom";
    case OcclusionEnd::both: return "both";
  }
  return "?";
}

Primitive parse_primitive(const std::string& s) {
  for (auto p : {Primitive::box, Primitive::cylinder, Primitive::sphere, Primitive::capsule})
    if (to_string(p) == s) return p;
  throw InvalidArgument("unknown primitive '" + s + "'");
}

ColorScheme parse_color_scheme(const std::string& s) {
  for (auto c : {ColorScheme::uniform, ColorScheme::two_tone, ColorScheme::bands})
    if (to_string(c) == s) return c;
  throw InvalidArgument("unknown color scheme '" + s + "'");
}

OcclusionEnd parse_occlusion_end(const std::string& s) {
  for (auto e : {OcclusionEnd::top, OcclusionEnd::bottom, OcclusionEnd::both})
    if (to_string(e) == s) return e;
  throw InvalidArgument("unknown occlusion end '" + s + "'");
}

namespace {

using nlohmann::json;

std::string hex(Srgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

Srgb parse_hex(const std::string& s) {
  if (s.size() != 6 || s.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
    throw DataError("bad color '" + s + "'");
  return Srgb::unpack(static_cast<std::uint32_t>(std::stoul(s, nullptr, 16)));
}

}  // namespace

json shape_to_json(const ShapeSpec& s) {
  return {{"label", s.label},
          {"primitive", to_string(s.primitive)},
          {"size", json::array({s.size.x(), s.size.y(), s.size.z()})},
          {"radius", s.radius},
          {"height", s.height},
          {"scheme", to_string(s.scheme)},
          {"primary", hex(s.primary)},
          {"secondary", hex(s.secondary)},
          {"bands", s.bands}};
}

ShapeSpec shape_from_json(const json& s) {
  try {
    ShapeSpec spec;
    spec.label = s.at("label");
    spec.primitive = parse_primitive(s.at("primitive"));
    const auto& size = s.at("size");
    spec.size = Eigen::Vector3d(size.at(0).get<double>(), size.at(1).get<double>(), size.at(2).get<double>());
    spec.radius = s.at("radius");
    spec.height = s.at("height");
    spec.scheme = parse_color_scheme(s.value("scheme", std::string("uniform")));
    spec.primary = parse_hex(s.at("primary"));
    spec.secondary = parse_hex(s.value("secondary", std::string("1e1ec8")));
    spec.bands = s.value("bands", 4);
    validate(spec);
    return spec;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed shape entry: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("invalid shape entry: ") + e.what());
  }
}

void write_dataset(const std::filesystem::path& dir, const std::vector<ShapeSpec>& shapes,
                   const std::vector<LabeledCloud>& clouds) {
  std::filesystem::create_directories(dir / "clouds");
  json m;
  m["format"] = "topocolor-dataset";
  m["version"] = 1;
  m["shapes"] = json::array();
  for (const auto& s : shapes) m["shapes"].push_back(shape_to_json(s));
  m["clouds"] = json::array();
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "clouds/%06zu.ply", i);
    write_ply(dir / name, clouds[i].cloud);
    m["clouds"].push_back({{"file", name},
                           {"label", clouds[i].label},
                           {"shape", clouds[i].shape_index},
                           {"polar", clouds[i].polar},
                           {"azimuth", clouds[i].azimuth},
                           {"occluded", clouds[i].occluded}});
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
  out << std::setw(1) << m << '\n';
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset manifest " + path.string());
  Dataset d;
  try {
    const json m = json::parse(in);
    if (m.at("format") != "topocolor-dataset") throw DataError(path.string() + " is not a dataset manifest");
    if (m.at("version") != 1)
      throw VersionMismatch("dataset manifest version " + m.at("version").dump() + ", expected 1");
    for (const auto& s : m.value("shapes", json::array())) d.shapes.push_back(shape_from_json(s));
    for (const auto& c : m.at("clouds")) {
      LabeledCloud lc;
      lc.label = c.at("label");
      lc.shape_index = c.value("shape", std::size_t{0});
      lc.polar = c.value("polar", 0.0);
      lc.azimuth = c.value("azimuth", 0.0);
      lc.occluded = c.value("occluded", false);
      lc.cloud = read_ply(dir / c.at("file").get<std::string>());
      d.clouds.push_back(std::move(lc));
    }
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
  return d;
}

std::vector<ShapeSpec> desk_suite() {
  const auto box = [](std::string label, Eigen::Vector3d size, Srgb c) {
    ShapeSpec s;
    s.label = std::move(label);
    s.primitive = Primitive::box;
    s.size = size;
    s.primary = c;
    return s;
  };
  const auto cylinder = [](std::string label, double r, double h, Srgb c) {
    ShapeSpec s;
    s.label = std::move(label);
    s.primitive = Primitive::cylinder;
    s.radius = r;
    s.height = h;
    s.primary = c;
    return s;
  };
  return {box("red_box", {0.08, 0.06, 0.18}, {220, 40, 40}),
          box("green_box", {0.08, 0.06, 0.18}, {40, 170, 60}),
          cylinder("blue_cylinder", 0.035, 0.15, {40, 70, 200}),
          cylinder("yellow_cylinder", 0.035, 0.15, {230, 200, 40}),
          box("flat_box", {0.12, 0.04, 0.24}, {140, 60, 170}),
          cylinder("thin_cylinder", 0.02, 0.22, {240, 130, 30})};
}

// ---------------------------------------------------------------------------
// Scene rendering

Eigen::Matrix3d upright_pose(double yaw) {
  Eigen::Matrix3d to_camera;
  to_camera << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  const double c = std::cos(yaw), s = std::sin(yaw);
  Eigen::Matrix3d rz;
  rz << c, -s, 0, s, c, 0, 0, 0, 1;
  return to_camera * rz;
}

SceneImages render_scene(const std::vector<SceneObject>& objects, const CameraIntrinsics& k, int width,
                         int height, double spacing) {
  require(width > 0 && height > 0, "render_scene: image size must be positive");
  require(k.fx > 0 && k.fy > 0 && k.depth_scale > 0, "render_scene: invalid intrinsics");
  SceneImages img{RgbImage(width, height, 3), DepthImage(width, height, 1), LabelImage(width, height, 1)};
  std::vector<double> zbuf(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                           std::numeric_limits<double>::infinity());
  SamplingOptions opt;
  opt.spacing = spacing;
  for (const auto& obj : objects) {
    require(obj.instance_id != 0, "render_scene: instance id 0 is reserved for background");
    for (const auto& sp : sample_surface(obj.shape, opt)) {
      const Eigen::Vector3d p = obj.rotation * sp.position + obj.position;
      const Eigen::Vector3d n = obj.rotation * sp.normal;
      if (!(p.z() > 0.0) || !(n.dot(-p) > 0.0)) continue;
      const long u = std::lround(k.fx * p.x() / p.z() + k.cx);
      const long v = std::lround(k.fy * p.y() / p.z() + k.cy);
      if (u < 0 || v < 0 || u >= width || v >= height) continue;
      const auto idx = static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u);
      if (p.z() >= zbuf[idx]) continue;
      const long d = std::lround(p.z() / k.depth_scale);
      if (d <= 0 || d > 65535) continue;
      zbuf[idx] = p.z();
      const int x = static_cast<int>(u), y = static_cast<int>(v);
      const Srgb c = obj.shape.color_at(sp.position);
      img.rgb.at(x, y, 0) = c.r;
      img.rgb.at(x, y, 1) = c.g;
      img.rgb.at(x, y, 2) = c.b;
      img.depth.at(x, y) = static_cast<std::uint16_t>(d);
      img.labels.at(x, y) = obj.instance_id;
    }
  }
  return img;
}

}  // namespace topocolor::synth
