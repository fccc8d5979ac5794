#include "topocolor/ply.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "topocolor/error.hpp"

static_assert(std::endian::native == std::endian::little, "binary PLY support assumes little endian");

namespace topocolor {
namespace {

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

Scalar parse_scalar(const std::string& t) {
  if (t == "char" || t == "int8") return Scalar::i8;
  if (t == "uchar" || t == "uint8") return Scalar::u8;
  if (t == "short" || t == "int16") return Scalar::i16;
  if (t == "ushort" || t == "uint16") return Scalar::u16;
  if (t == "int" || t == "int32") return Scalar::i32;
  if (t == "uint" || t == "uint32") return Scalar::u32;
  if (t == "float" || t == "float32") return Scalar::f32;
  if (t == "double" || t == "float64") return Scalar::f64;
  throw DataError("ply: unknown property type '" + t + "'");
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::i8:
    case Scalar::u8: return 1;
    case Scalar::i16:
    case Scalar::u16: return 2;
    case Scalar::i32:
    case Scalar::u32:
    case Scalar::f32: return 4;
    case Scalar::f64: return 8;
  }
  return 0;
}

template <class T>
double load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  return static_cast<double>(v);
}

double decode(Scalar s, const char* p) {
  switch (s) {
    case Scalar::i8: return load<std::int8_t>(p);
    case Scalar::u8: return load<std::uint8_t>(p);
    case Scalar::i16: return load<std::int16_t>(p);
    case Scalar::u16: return load<std::uint16_t>(p);
    case Scalar::i32: return load<std::int32_t>(p);
    case Scalar::u32: return load<std::uint32_t>(p);
    case Scalar::f32: return load<float>(p);
    case Scalar::f64: return load<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  Scalar type;
};

std::uint8_t to_channel(double v) {
  if (!(v >= 0.0 && v <= 255.0)) throw DataError("ply: color channel out of range");
  return static_cast<std::uint8_t>(v);
}

}  // namespace

ColoredPointCloud read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw DataError("ply: missing magic");
  bool binary = false;
  bool in_vertex = false;
  std::size_t vertex_count = 0;
  std::vector<Property> props;
  bool seen_vertex = false;
  while (true) {
    if (!std::getline(in, line)) throw DataError("ply: truncated header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end_header") break;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") binary = false;
      else if (fmt == "binary_little_endian") binary = true;
      else throw DataError("ply: unsupported format '" + fmt + "'");
    } else if (key == "element") {
      std::string name;
      std::size_t count = 0;
      ls >> name >> count;
      if (seen_vertex && !in_vertex) continue;
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (seen_vertex) throw DataError("ply: duplicate vertex element");
        seen_vertex = true;
        vertex_count = count;
      } else if (!seen_vertex) {
        throw DataError("ply: elements before vertex are not supported");
      }
    } else if (key == "property" && in_vertex) {
      std::string type, name;
      ls >> type;
      if (type == "list") throw DataError("ply: list properties on vertices are not supported");
      ls >> name;
      props.push_back({name, parse_scalar(type)});
    }
  }
  if (!seen_vertex) throw DataError("ply: no vertex element");

  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (int i = 0; i < static_cast<int>(props.size()); ++i) {
    const auto& n = props[static_cast<std::size_t>(i)].name;
    if (n == "x") ix = i;
    else if (n == "y") iy = i;
    else if (n == "z") iz = i;
    else if (n == "red" || n == "r") ir = i;
    else if (n == "green" || n == "g") ig = i;
    else if (n == "blue" || n == "b") ib = i;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw DataError("ply: missing x/y/z");
  if (ir < 0 || ig < 0 || ib < 0) throw DataError("ply: missing red/green/blue");

  ColoredPointCloud cloud;
  cloud.reserve(vertex_count);
  std::vector<double> values(props.size());
  std::vector<std::size_t> offsets(props.size());
  std::size_t stride = 0;
  for (std::size_t i = 0; i < props.size(); ++i) {
    offsets[i] = stride;
    stride += scalar_size(props[i].type);
  }
  std::vector<char> record(stride);
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (binary) {
      if (!in.read(record.data(), static_cast<std::streamsize>(stride)))
        throw DataError("ply: truncated vertex data");
      for (std::size_t i = 0; i < props.size(); ++i)
        values[i] = decode(props[i].type, record.data() + offsets[i]);
    } else {
      for (std::size_t i = 0; i < props.size(); ++i) {
        if (!(in >> values[i])) throw DataError("ply: truncated vertex data");
        // Same rounding as a binary record of the declared type.
        if (props[i].type == Scalar::f32) values[i] = static_cast<float>(values[i]);
      }
    }
    const auto at = [&](int i) { return values[static_cast<std::size_t>(i)]; };
    Eigen::Vector3d p(at(ix), at(iy), at(iz));
    if (!p.allFinite()) throw DataError("ply: non-finite coordinate");
    cloud.push_back(p, {to_channel(at(ir)), to_channel(at(ig)), to_channel(at(ib))});
  }
  return cloud;
}

ColoredPointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_ply(in);
}

void write_ply(std::ostream& out, const ColoredPointCloud& cloud, PlyFormat format) {
  out << "ply\nformat " << (format == PlyFormat::ascii ? "ascii" : "binary_little_endian")
      << " 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::array<float, 3> xyz{static_cast<float>(cloud.points[i].x()),
                                   static_cast<float>(cloud.points[i].y()),
                                   static_cast<float>(cloud.points[i].z())};
    const auto& c = cloud.colors[i];
    if (format == PlyFormat::ascii) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %u %u %u\n", xyz[0], xyz[1], xyz[2], c.r, c.g, c.b);
      out << buf;
    } else {
      char rec[15];
      std::memcpy(rec, xyz.data(), 12);
      rec[12] = static_cast<char>(c.r);
      rec[13] = static_cast<char>(c.g);
      rec[14] = static_cast<char>(c.b);
      out.write(rec, sizeof rec);
    }
  }
  if (!out) throw DataError("ply: write failed");
}

void write_ply(const std::filesystem::path& path, const ColoredPointCloud& cloud, PlyFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_ply(out, cloud, format);
}

}  // namespace topocolor
