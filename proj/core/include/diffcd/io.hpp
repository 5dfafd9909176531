#pragma once

#include "diffcd/types.hpp"

#include <filesystem>

namespace diffcd {

/// Whitespace-separated rows of x y [z] with optional trailing normal components.
/// `dim` 0 infers the dimension from the column count (2/4 columns: 2D, 3/6: 3D).
PointCloud read_xyz(const std::filesystem::path& path, int dim = 0);

/// ASCII or binary_little_endian PLY; reads x/y/z and optional nx/ny/nz of the vertex element.
PointCloud read_ply(const std::filesystem::path& path);

/// Dispatches on extension: .ply → read_ply, anything else → read_xyz.
PointCloud read_point_cloud(const std::filesystem::path& path);

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace diffcd
