#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "voxmatch/errors.hpp"

namespace voxmatch {

/// Dense 3D grid of 64-bit voxel intensities in x-fastest storage order.
/// Immutable by convention once built: the pipeline only ever constructs
/// new volumes, never edits one in place.
struct Volume {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t nz = 0;
  std::array<float, 3> spacing{1.0f, 1.0f, 1.0f};  // voxel size, mm
  std::vector<double> data;                        // length nx*ny*nz
  std::string label;

  std::size_t voxel_count() const { return nx * ny * nz; }

  double at(std::size_t x, std::size_t y, std::size_t z) const {
    return data[x + nx * (y + ny * z)];
  }

  bool same_dims(const Volume& other) const {
    return nx == other.nx && ny == other.ny && nz == other.nz;
  }
};

/// Checked constructor: data length must match the grid.
inline Volume make_volume(std::size_t nx, std::size_t ny, std::size_t nz,
                          std::vector<double> data, std::string label = {},
                          std::array<float, 3> spacing = {1.0f, 1.0f, 1.0f}) {
  if (data.size() != nx * ny * nz)
    throw BadDims("volume data length " + std::to_string(data.size()) +
                  " does not match " + std::to_string(nx) + "x" +
                  std::to_string(ny) + "x" + std::to_string(nz));
  return Volume{nx, ny, nz, spacing, std::move(data), std::move(label)};
}

}  // namespace voxmatch
