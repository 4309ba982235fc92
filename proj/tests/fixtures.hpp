// Shared test scaffolding: raw NIfTI header fixtures assembled by byte
// offset (so reader tests never depend on the library's own writer), a
// whole-buffer byteswap oracle, temp dirs, and volume generators.
#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "voxmatch/volume.hpp"

namespace fixtures {

inline constexpr std::size_t kHeaderSize = 348;

template <typename T>
void put(std::vector<std::byte>& buf, std::size_t offset, T value) {
  std::memcpy(buf.data() + offset, &value, sizeof value);
}

template <typename T>
void put_swapped(std::vector<std::byte>& buf, std::size_t offset, T value) {
  unsigned char raw[sizeof value];
  std::memcpy(raw, &value, sizeof value);
  std::reverse(raw, raw + sizeof value);
  std::memcpy(buf.data() + offset, raw, sizeof value);
}

/// Minimal valid single-file header for the given dims and datatype,
/// assembled field by field at the offsets from the NIfTI-1 standard.
inline std::vector<std::byte> make_header(std::int16_t rank, std::int16_t nx,
                                          std::int16_t ny, std::int16_t nz,
                                          std::int16_t nt, std::int16_t datatype,
                                          std::int16_t bitpix,
                                          float vox_offset = 352.0f,
                                          float slope = 1.0f, float inter = 0.0f) {
  std::vector<std::byte> h(kHeaderSize, std::byte{0});
  put<std::int32_t>(h, 0, 348);
  put<std::int16_t>(h, 40, rank);        // dim[0]
  put<std::int16_t>(h, 42, nx);          // dim[1]
  put<std::int16_t>(h, 44, ny);          // dim[2]
  put<std::int16_t>(h, 46, nz);          // dim[3]
  put<std::int16_t>(h, 48, nt);          // dim[4]
  put<std::int16_t>(h, 50, 1);
  put<std::int16_t>(h, 52, 1);
  put<std::int16_t>(h, 54, 1);
  put<std::int16_t>(h, 70, datatype);
  put<std::int16_t>(h, 72, bitpix);
  put<float>(h, 76, 1.0f);               // pixdim[0] (qfac)
  put<float>(h, 80, 2.0f);               // pixdim[1..3]: spacing
  put<float>(h, 84, 2.5f);
  put<float>(h, 88, 3.0f);
  put<float>(h, 108, vox_offset);
  put<float>(h, 112, slope);
  put<float>(h, 116, inter);
  h[344] = std::byte{'n'};
  h[345] = std::byte{'+'};
  h[346] = std::byte{'1'};
  h[347] = std::byte{0};
  return h;
}

struct Field {
  std::size_t offset;
  std::size_t width;  // element width in bytes
  std::size_t count;
};

/// Every multi-byte field of a NIfTI-1 header, per the standard's layout.
inline const std::vector<Field>& header_fields() {
  static const std::vector<Field> fields = {
      {0, 4, 1},                        // sizeof_hdr
      {4, 1, 10}, {14, 1, 18},          // data_type, db_name (char, no swap)
      {32, 4, 1},                       // extents
      {36, 2, 1},                       // session_error
      {38, 1, 2},                       // regular, dim_info
      {40, 2, 8},                       // dim
      {56, 4, 3},                       // intent_p1..p3
      {68, 2, 1},                       // intent_code
      {70, 2, 1}, {72, 2, 1}, {74, 2, 1},  // datatype, bitpix, slice_start
      {76, 4, 8},                       // pixdim
      {108, 4, 1}, {112, 4, 1}, {116, 4, 1},  // vox_offset, scl_slope, scl_inter
      {120, 2, 1},                      // slice_end
      {122, 1, 2},                      // slice_code, xyzt_units
      {124, 4, 1}, {128, 4, 1}, {132, 4, 1},  // cal_max, cal_min, slice_duration
      {136, 4, 1}, {140, 4, 1}, {144, 4, 1},  // toffset, glmax, glmin
      {148, 1, 80}, {228, 1, 24},       // descrip, aux_file
      {252, 2, 1}, {254, 2, 1},         // qform_code, sform_code
      {256, 4, 6},                      // quatern_b..d, qoffset_x..z
      {280, 4, 12},                     // srow_x, srow_y, srow_z
      {328, 1, 16},                     // intent_name
      {344, 1, 4},                      // magic
  };
  return fields;
}

/// Reverses the bytes of every multi-byte header field, simulating a file
/// written on an opposite-endian machine. Voxel data is not touched.
inline std::vector<std::byte> byteswap_header(std::vector<std::byte> h) {
  for (const Field& f : header_fields()) {
    if (f.width == 1) continue;
    for (std::size_t i = 0; i < f.count; ++i) {
      auto* begin = h.data() + f.offset + i * f.width;
      std::reverse(begin, begin + f.width);
    }
  }
  return h;
}

template <typename Sample>
std::vector<std::byte> nifti_bytes(std::vector<std::byte> header,
                                   const std::vector<Sample>& samples,
                                   bool swap_samples = false) {
  std::vector<std::byte> out = std::move(header);
  out.resize(352, std::byte{0});  // 4-byte empty extension block
  const std::size_t base = out.size();
  out.resize(base + samples.size() * sizeof(Sample));
  std::memcpy(out.data() + base, samples.data(), samples.size() * sizeof(Sample));
  if (swap_samples && sizeof(Sample) > 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      auto* begin = out.data() + base + i * sizeof(Sample);
      std::reverse(begin, begin + sizeof(Sample));
    }
  }
  return out;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("voxmatch_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline voxmatch::Volume random_volume(std::mt19937_64& rng, std::size_t nx,
                                      std::size_t ny, std::size_t nz,
                                      double lo = -10.0, double hi = 10.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> data(nx * ny * nz);
  for (double& d : data) d = dist(rng);
  return voxmatch::make_volume(nx, ny, nz, std::move(data));
}

}  // namespace fixtures
