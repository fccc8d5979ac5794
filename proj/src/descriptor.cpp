#include "topocolor/descriptor.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "topocolor/error.hpp"

namespace topocolor {

PersistenceImageParams DescriptorParams::image_params() const {
  PersistenceImageParams p;
  p.height = image_height;
  p.width = image_width;
  const double range = image_range > 0.0 ? image_range : static_cast<double>(n_s_max) * sigma2;
  p.birth_min = 0.0;
  p.birth_max = range;
  p.pers_min = 0.0;
  p.pers_max = range;
  p.sigma = kernel_sigma > 0.0 ? kernel_sigma : sigma2;
  return p;
}

std::vector<double> ColorCounts::values() const {
  std::vector<double> out(numerators.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<double>(numerators[i]) / static_cast<double>(denominator);
  return out;
}

std::uint64_t share_denominator(const ColorNetwork& network) {
  std::uint64_t l = 1;
  for (std::uint64_t k = 2; k <= network.max_region_count(); ++k) l = std::lcm(l, k);
  return l;
}

ColorCounts color_counts(const ColoredPointCloud& cloud, std::span<const std::size_t> members,
                         const ColorNetwork& network) {
  ColorCounts out;
  out.denominator = share_denominator(network);
  out.numerators.assign(network.size(), 0);
  for (auto i : members) {
    const auto regions = network.regions_of(cloud.colors[i]);
    const std::uint64_t share = out.denominator / regions.size();
    for (auto r : regions) out.numerators[r] += share;
  }
  return out;
}

std::vector<double> color_vector(const ColoredPointCloud& cloud, std::span<const std::size_t> members,
                                 const ColorNetwork& network) {
  return color_counts(cloud, members, network).values();
}

Eigen::MatrixXd color_matrix(const ColoredPointCloud& cloud, const Slice& s, double sigma2,
                             std::size_t n_s_max, const ColorNetwork& network) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_s_max),
                                            static_cast<Eigen::Index>(network.size()));
  const auto bands = strips(cloud, s, sigma2);
  if (bands.size() > n_s_max)
    throw DescriptorOverflow("slice " + std::to_string(s.index) + " has " + std::to_string(bands.size()) +
                             " strips, more than n_s_max = " + std::to_string(n_s_max));
  for (std::size_t j = 0; j < bands.size(); ++j) {
    const auto phi = color_vector(cloud, bands[j].members, network);
    for (std::size_t l = 0; l < phi.size(); ++l)
      c(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = phi[l];
  }
  return c;
}

Eigen::MatrixXd color_embedding(const Eigen::MatrixXd& c, const Eigen::MatrixXd& delta) {
  if (delta.rows() != delta.cols() || c.cols() != delta.rows())
    throw InvalidArgument("color_embedding: similarity matrix is " + std::to_string(delta.rows()) + "x" +
                          std::to_string(delta.cols()) + " but the color matrix has " +
                          std::to_string(c.cols()) + " columns");
  return (c * delta).transpose();
}

std::vector<double> slice_image(const ColoredPointCloud& rotated, const Slice& s,
                                const DescriptorParams& params) {
  const auto pi = params.image_params();
  if (s.members.empty()) return std::vector<double>(params.image_length(), 0.0);
  auto flat = flatten_slice_z(rotated, s, params.sigma1);
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  for (const auto& p : flat.points) {
    x_min = std::min(x_min, p.x());
    x_max = std::max(x_max, p.x());
  }
  for (auto& p : flat.points) p.x() -= x_min;
  const double w = x_max - x_min;
  const auto f = slice_filtration(flat.points, params.radius());
  return persistence_image(h0_persistence(f, w + params.sigma2), pi);
}

namespace {

void check_params(const DescriptorParams& p) {
  if (!(p.sigma1 > 0.0 && p.sigma2 > 0.0)) throw InvalidArgument("descriptor: thicknesses must be positive");
  if (p.max_slices < 1 || p.n_s_max < 1) throw InvalidArgument("descriptor: empty layout");
}

DescriptorPair compute(const ColoredPointCloud& cloud, const ColorNetwork* network,
                       const DescriptorParams& params) {
  check_params(params);
  if (cloud.empty()) throw InvalidArgument("descriptor: empty cloud");
  const auto rotated = rotate_for_slicing(cloud, params.alpha);
  const auto slices = slice(rotated, params.sigma1);
  if (slices.size() > params.max_slices)
    throw DescriptorOverflow("cloud needs " + std::to_string(slices.size()) +
                             " slices, more than max_slices = " + std::to_string(params.max_slices));
  const std::size_t hw = params.image_length();
  DescriptorPair out;
  out.tops.kind = DescriptorKind::tops;
  out.tops.slices = params.max_slices;
  out.tops.block = hw;
  out.tops.image_length = hw;
  out.tops.used_slices = slices.size();
  out.tops.values.assign(params.max_slices * hw, 0.0);
  std::size_t emb = 0;
  if (network) {
    if (network->similarity().rows() != static_cast<Eigen::Index>(network->size()))
      throw InvalidArgument("descriptor: network similarity matrix does not match its nodes");
    emb = network->size() * params.n_s_max;
    out.tops2.kind = DescriptorKind::tops2;
    out.tops2.slices = params.max_slices;
    out.tops2.block = hw + emb;
    out.tops2.image_length = hw;
    out.tops2.used_slices = slices.size();
    out.tops2.values.assign(params.max_slices * (hw + emb), 0.0);
  }
  for (const auto& s : slices) {
    const auto img = slice_image(rotated, s, params);
    std::copy(img.begin(), img.end(), out.tops.values.begin() + static_cast<std::ptrdiff_t>(s.index * hw));
    if (!network) continue;
    auto dst = out.tops2.values.begin() + static_cast<std::ptrdiff_t>(s.index * (hw + emb));
    std::copy(img.begin(), img.end(), dst);
    const Eigen::MatrixXd c = color_matrix(rotated, s, params.sigma2, params.n_s_max, *network);
    const Eigen::MatrixXd e = color_embedding(c, network->similarity());
    dst += static_cast<std::ptrdiff_t>(hw);
    for (Eigen::Index r = 0; r < e.rows(); ++r)
      for (Eigen::Index k = 0; k < e.cols(); ++k) *dst++ = e(r, k);
  }
  if (!network) {
    // Strip overflow is a layout error for both descriptors.
    for (const auto& s : slices) {
      const auto n = strips(rotated, s, params.sigma2).size();
      if (n > params.n_s_max)
        throw DescriptorOverflow("slice " + std::to_string(s.index) + " has " + std::to_string(n) +
                                 " strips, more than n_s_max = " + std::to_string(params.n_s_max));
    }
  }
  return out;
}

constexpr char kMagic[4] = {'T', 'C', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw DataError("descriptor: truncated record");
  return v;
}

}  // namespace

Descriptor tops_descriptor(const ColoredPointCloud& cloud, const DescriptorParams& params) {
  return compute(cloud, nullptr, params).tops;
}

Descriptor tops2_descriptor(const ColoredPointCloud& cloud, const ColorNetwork& network,
                            const DescriptorParams& params) {
  return compute(cloud, &network, params).tops2;
}

DescriptorPair compute_descriptors(const ColoredPointCloud& cloud, const ColorNetwork& network,
                                   const DescriptorParams& params) {
  return compute(cloud, &network, params);
}

void write_descriptor(std::ostream& out, const Descriptor& d) {
  if (d.values.size() != d.slices * d.block) throw InvalidArgument("descriptor: inconsistent layout");
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.kind));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.slices));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.block));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.image_length));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.used_slices));
  for (double v : d.values) put<float>(out, static_cast<float>(v));
  if (!out) throw DataError("descriptor: write failed");
}

Descriptor read_descriptor(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw DataError("descriptor: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion)
    throw VersionMismatch("descriptor: format version " + std::to_string(version) + ", expected " +
                          std::to_string(kVersion));
  Descriptor d;
  const auto kind = get<std::uint32_t>(in);
  if (kind != 1 && kind != 2) throw DataError("descriptor: unknown kind");
  d.kind = static_cast<DescriptorKind>(kind);
  d.slices = get<std::uint32_t>(in);
  d.block = get<std::uint32_t>(in);
  d.image_length = get<std::uint32_t>(in);
  d.used_slices = get<std::uint32_t>(in);
  if (d.image_length > d.block || d.used_slices > d.slices) throw DataError("descriptor: bad layout");
  d.values.resize(d.slices * d.block);
  for (auto& v : d.values) v = get<float>(in);
  return d;
}

void write_descriptor(const std::filesystem::path& path, const Descriptor& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_descriptor(out, d);
}

Descriptor read_descriptor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_descriptor(in);
}

void dump_descriptor(std::ostream& out, const Descriptor& d) {
  out << "kind " << (d.kind == DescriptorKind::tops ? "tops" : "tops2") << "\nslices " << d.slices
      << "\nused_slices " << d.used_slices << "\nblock " << d.block << "\nimage_length " << d.image_length
      << '\n';
  char buf[32];
  for (std::size_t s = 0; s < d.slices; ++s) {
    out << "slice " << s;
    for (double v : d.slice_block(s)) {
      std::snprintf(buf, sizeof buf, " %.9g", v);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace topocolor
