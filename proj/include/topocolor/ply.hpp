#pragma once

// PLY reading and writing for colored point clouds: x/y/z as float32,
// red/green/blue as uint8. Reads ASCII and binary little-endian files and
// ignores any other vertex properties.

#include <filesystem>
#include <iosfwd>

#include "topocolor/pointcloud.hpp"

namespace topocolor {

enum class PlyFormat { ascii, binary_little_endian };

ColoredPointCloud read_ply(std::istream& in);
ColoredPointCloud read_ply(const std::filesystem::path& path);

void write_ply(std::ostream& out, const ColoredPointCloud& cloud,
               PlyFormat format = PlyFormat::binary_little_endian);
void write_ply(const std::filesystem::path& path, const ColoredPointCloud& cloud,
               PlyFormat format = PlyFormat::binary_little_endian);

}  // namespace topocolor
