#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <zlib.h>

#include "voxmatch/errors.hpp"
#include "voxmatch/volume.hpp"

namespace voxmatch {

enum class ByteOrder { native, swapped };

// NIfTI-1 datatype codes accepted by the reader.
constexpr std::int16_t DT_UINT8 = 2;
constexpr std::int16_t DT_INT16 = 4;
constexpr std::int16_t DT_INT32 = 8;
constexpr std::int16_t DT_FLOAT32 = 16;
constexpr std::int16_t DT_FLOAT64 = 64;

constexpr std::size_t kNiftiHeaderSize = 348;
constexpr float kNiftiVoxOffset = 352.0f;  // header + 4 extension bytes

/// Decoded NIfTI-1 header, all fields in host byte order. `byte_order`
/// records how the source bytes were stored. The q/s-form block is carried
/// along verbatim so a rewrite keeps the original orientation untouched.
struct NiftiHeader {
  std::int32_t sizeof_hdr = 348;
  std::array<std::int16_t, 8> dim{};
  std::int16_t datatype_code = 0;
  std::int16_t bitpix = 0;
  std::array<float, 8> pixdim{};
  float vox_offset = kNiftiVoxOffset;
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
  std::array<char, 4> magic{};
  ByteOrder byte_order = ByteOrder::native;

  // orientation block, not interpreted
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  float quatern_b = 0, quatern_c = 0, quatern_d = 0;
  float qoffset_x = 0, qoffset_y = 0, qoffset_z = 0;
  std::array<float, 4> srow_x{};
  std::array<float, 4> srow_y{};
  std::array<float, 4> srow_z{};
  std::array<char, 16> intent_name{};

  int rank() const { return dim[0]; }
  std::size_t nx() const { return static_cast<std::size_t>(dim[1]); }
  std::size_t ny() const { return rank() >= 2 ? static_cast<std::size_t>(dim[2]) : 1; }
  std::size_t nz() const { return rank() >= 3 ? static_cast<std::size_t>(dim[3]) : 1; }
  std::size_t nt() const { return rank() >= 4 ? static_cast<std::size_t>(dim[4]) : 1; }

  bool operator==(const NiftiHeader&) const = default;
};

/// Voxel-level bookkeeping from a load: the decoded header and how many
/// non-finite voxels were zeroed out.
struct LoadReport {
  NiftiHeader header;
  std::size_t nonfinite_replaced = 0;
};

namespace detail {

/// On-disk layout of the 348-byte NIfTI-1 header. Natural alignment on all
/// supported targets matches the file layout exactly.
struct RawNifti1Header {
  std::int32_t sizeof_hdr;     //   0
  char data_type[10];          //   4
  char db_name[18];            //  14
  std::int32_t extents;        //  32
  std::int16_t session_error;  //  36
  char regular;                //  38
  char dim_info;               //  39
  std::int16_t dim[8];         //  40
  float intent_p1;             //  56
  float intent_p2;             //  60
  float intent_p3;             //  64
  std::int16_t intent_code;    //  68
  std::int16_t datatype;       //  70
  std::int16_t bitpix;         //  72
  std::int16_t slice_start;    //  74
  float pixdim[8];             //  76
  float vox_offset;            // 108
  float scl_slope;             // 112
  float scl_inter;             // 116
  std::int16_t slice_end;      // 120
  char slice_code;             // 122
  char xyzt_units;             // 123
  float cal_max;               // 124
  float cal_min;               // 128
  float slice_duration;        // 132
  float toffset;               // 136
  std::int32_t glmax;          // 140
  std::int32_t glmin;          // 144
  char descrip[80];            // 148
  char aux_file[24];           // 228
  std::int16_t qform_code;     // 252
  std::int16_t sform_code;     // 254
  float quatern_b;             // 256
  float quatern_c;             // 260
  float quatern_d;             // 264
  float qoffset_x;             // 268
  float qoffset_y;             // 272
  float qoffset_z;             // 276
  float srow_x[4];             // 280
  float srow_y[4];             // 296
  float srow_z[4];             // 312
  char intent_name[16];        // 328
  char magic[4];               // 344
};
static_assert(sizeof(RawNifti1Header) == kNiftiHeaderSize,
              "NIfTI-1 header layout requires no padding");

template <typename T>
T byteswapped(T value) {
  auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

inline void swap_header_fields(RawNifti1Header& h) {
  auto swap = [](auto& field) { field = byteswapped(field); };
  swap(h.sizeof_hdr);
  swap(h.extents);
  swap(h.session_error);
  for (auto& d : h.dim) swap(d);
  swap(h.intent_p1);
  swap(h.intent_p2);
  swap(h.intent_p3);
  swap(h.intent_code);
  swap(h.datatype);
  swap(h.bitpix);
  swap(h.slice_start);
  for (auto& p : h.pixdim) swap(p);
  swap(h.vox_offset);
  swap(h.scl_slope);
  swap(h.scl_inter);
  swap(h.slice_end);
  swap(h.cal_max);
  swap(h.cal_min);
  swap(h.slice_duration);
  swap(h.toffset);
  swap(h.glmax);
  swap(h.glmin);
  swap(h.qform_code);
  swap(h.sform_code);
  swap(h.quatern_b);
  swap(h.quatern_c);
  swap(h.quatern_d);
  swap(h.qoffset_x);
  swap(h.qoffset_y);
  swap(h.qoffset_z);
  for (auto& s : h.srow_x) swap(s);
  for (auto& s : h.srow_y) swap(s);
  for (auto& s : h.srow_z) swap(s);
}

constexpr std::int16_t expected_bitpix(std::int16_t datatype) {
  switch (datatype) {
    case DT_UINT8: return 8;
    case DT_INT16: return 16;
    case DT_INT32: return 32;
    case DT_FLOAT32: return 32;
    case DT_FLOAT64: return 64;
    default: return 0;
  }
}

struct InflateStream {
  z_stream strm{};
  InflateStream() {
    if (inflateInit2(&strm, 15 + 16) != Z_OK)  // gzip container only
      throw IoError("zlib: inflateInit2 failed");
  }
  ~InflateStream() { inflateEnd(&strm); }
  InflateStream(const InflateStream&) = delete;
  InflateStream& operator=(const InflateStream&) = delete;
};

struct DeflateStream {
  z_stream strm{};
  DeflateStream() {
    // fixed level so equal inputs always yield equal bytes
    if (deflateInit2(&strm, 6, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
      throw IoError("zlib: deflateInit2 failed");
  }
  ~DeflateStream() { deflateEnd(&strm); }
  DeflateStream(const DeflateStream&) = delete;
  DeflateStream& operator=(const DeflateStream&) = delete;
};

inline std::vector<std::byte> gunzip(std::span<const std::byte> in) {
  InflateStream zs;
  zs.strm.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(in.data()));
  zs.strm.avail_in = static_cast<uInt>(in.size());
  std::vector<std::byte> out;
  std::array<std::byte, 1 << 16> buf;
  for (;;) {
    zs.strm.next_out = reinterpret_cast<Bytef*>(buf.data());
    zs.strm.avail_out = static_cast<uInt>(buf.size());
    const int ret = inflate(&zs.strm, Z_NO_FLUSH);
    out.insert(out.end(), buf.begin(),
               buf.begin() + (buf.size() - zs.strm.avail_out));
    if (ret == Z_STREAM_END) return out;
    if (ret == Z_OK || ret == Z_BUF_ERROR) {
      if (zs.strm.avail_in == 0 && zs.strm.avail_out != 0)
        throw TruncatedData("gzip stream ends before the compressed data does");
      continue;
    }
    throw IoError(std::string("gzip: ") +
                  (zs.strm.msg ? zs.strm.msg : "corrupt stream"));
  }
}

inline std::vector<std::byte> gzip_compress(std::span<const std::byte> in) {
  DeflateStream zs;
  zs.strm.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(in.data()));
  zs.strm.avail_in = static_cast<uInt>(in.size());
  std::vector<std::byte> out;
  std::array<std::byte, 1 << 16> buf;
  int ret = Z_OK;
  do {
    zs.strm.next_out = reinterpret_cast<Bytef*>(buf.data());
    zs.strm.avail_out = static_cast<uInt>(buf.size());
    ret = deflate(&zs.strm, Z_FINISH);
    if (ret != Z_OK && ret != Z_STREAM_END && ret != Z_BUF_ERROR)
      throw IoError("gzip: deflate failed");
    out.insert(out.end(), buf.begin(),
               buf.begin() + (buf.size() - zs.strm.avail_out));
  } while (ret != Z_STREAM_END);
  return out;
}

template <typename Sample>
void decode_samples(std::span<const std::byte> src, std::size_t count,
                    bool swap, bool rescale, double slope, double inter,
                    std::vector<double>& out, std::size_t& nonfinite) {
  for (std::size_t i = 0; i < count; ++i) {
    Sample s;
    std::memcpy(&s, src.data() + i * sizeof(Sample), sizeof(Sample));
    if (swap) s = byteswapped(s);
    double value = static_cast<double>(s);
    if (rescale) value = slope * value + inter;
    if (!std::isfinite(value)) {
      value = 0.0;
      ++nonfinite;
    }
    out.push_back(value);
  }
}

}  // namespace detail

inline bool looks_gzipped(std::span<const std::byte> bytes) {
  return bytes.size() >= 2 && bytes[0] == std::byte{0x1F} &&
         bytes[1] == std::byte{0x8B};
}

/// Decides byte order from the first four header bytes: sizeof_hdr must
/// decode to 348 in one of the two orders.
inline ByteOrder detect_endianness(std::span<const std::byte> bytes) {
  if (bytes.size() < 4) throw NotNifti("fewer than 4 bytes available");
  std::int32_t value;
  std::memcpy(&value, bytes.data(), 4);
  if (value == 348) return ByteOrder::native;
  if (detail::byteswapped(value) == 348) return ByteOrder::swapped;
  throw NotNifti("sizeof_hdr is not 348 in either byte order");
}

/// Decodes and validates a 348-byte NIfTI-1 header.
inline NiftiHeader parse_header(std::span<const std::byte> bytes) {
  if (bytes.size() < kNiftiHeaderSize)
    throw NotNifti("header needs 348 bytes, got " + std::to_string(bytes.size()));
  const ByteOrder order = detect_endianness(bytes);
  detail::RawNifti1Header raw;
  std::memcpy(&raw, bytes.data(), sizeof raw);
  if (order == ByteOrder::swapped) detail::swap_header_fields(raw);

  static constexpr char kSingle[4] = {'n', '+', '1', '\0'};
  static constexpr char kPaired[4] = {'n', 'i', '1', '\0'};
  if (std::memcmp(raw.magic, kPaired, 4) == 0)
    throw NotNifti("paired .hdr/.img files are not supported");
  if (std::memcmp(raw.magic, kSingle, 4) != 0)
    throw NotNifti("bad magic, expected \"n+1\"");

  if (raw.dim[0] < 1 || raw.dim[0] > 4)
    throw BadDims("rank must be 1..4, got " + std::to_string(raw.dim[0]));
  for (int i = 1; i <= raw.dim[0]; ++i)
    if (raw.dim[i] < 1)
      throw BadDims("dim[" + std::to_string(i) + "] = " +
                    std::to_string(raw.dim[i]));

  const std::int16_t want_bitpix = detail::expected_bitpix(raw.datatype);
  if (want_bitpix == 0)
    throw UnsupportedDatatype("datatype code " + std::to_string(raw.datatype));
  if (raw.bitpix != want_bitpix)
    throw UnsupportedDatatype("bitpix " + std::to_string(raw.bitpix) +
                              " inconsistent with datatype code " +
                              std::to_string(raw.datatype));

  NiftiHeader h;
  h.sizeof_hdr = raw.sizeof_hdr;
  std::copy(std::begin(raw.dim), std::end(raw.dim), h.dim.begin());
  h.datatype_code = raw.datatype;
  h.bitpix = raw.bitpix;
  std::copy(std::begin(raw.pixdim), std::end(raw.pixdim), h.pixdim.begin());
  h.vox_offset = raw.vox_offset;
  h.scl_slope = raw.scl_slope;
  h.scl_inter = raw.scl_inter;
  std::copy(std::begin(raw.magic), std::end(raw.magic), h.magic.begin());
  h.byte_order = order;
  h.qform_code = raw.qform_code;
  h.sform_code = raw.sform_code;
  h.quatern_b = raw.quatern_b;
  h.quatern_c = raw.quatern_c;
  h.quatern_d = raw.quatern_d;
  h.qoffset_x = raw.qoffset_x;
  h.qoffset_y = raw.qoffset_y;
  h.qoffset_z = raw.qoffset_z;
  std::copy(std::begin(raw.srow_x), std::end(raw.srow_x), h.srow_x.begin());
  std::copy(std::begin(raw.srow_y), std::end(raw.srow_y), h.srow_y.begin());
  std::copy(std::begin(raw.srow_z), std::end(raw.srow_z), h.srow_z.begin());
  std::copy(std::begin(raw.intent_name), std::end(raw.intent_name),
            h.intent_name.begin());
  return h;
}

/// NIfTI-1 intensity scaling: slope 0 means "no scaling stored".
inline double apply_scaling(double raw, double slope, double inter) {
  return slope == 0.0 ? raw : slope * raw + inter;
}

/// Decodes every volume in a single-file NIfTI-1 image already in memory
/// (one per time point). Voxels are widened to float64 with scaling
/// applied; non-finite values become 0.0 and are tallied in `report`.
inline std::vector<Volume> read_volumes_from_bytes(std::span<const std::byte> bytes,
                                                   std::string_view name,
                                                   LoadReport* report = nullptr) {
  const NiftiHeader h = parse_header(bytes);

  const float vox_offset = h.vox_offset;
  if (!(vox_offset >= static_cast<float>(kNiftiHeaderSize)) ||
      !(vox_offset <= 1e15f))
    throw NotNifti("vox_offset " + std::to_string(vox_offset) + " is invalid");
  const std::uint64_t offset = static_cast<std::uint64_t>(vox_offset);

  const std::uint64_t per_volume =
      static_cast<std::uint64_t>(h.nx()) * h.ny() * h.nz();
  const std::uint64_t total = per_volume * h.nt();
  const std::uint64_t sample_bytes = static_cast<std::uint64_t>(h.bitpix) / 8;
  const std::uint64_t needed = total * sample_bytes;
  if (offset > bytes.size() || bytes.size() - offset < needed)
    throw TruncatedData("file promises " + std::to_string(needed) +
                        " voxel bytes at offset " + std::to_string(offset) +
                        " but only " +
                        std::to_string(bytes.size() > offset ? bytes.size() - offset : 0) +
                        " are present");

  const bool swap = h.byte_order == ByteOrder::swapped;
  const double slope = static_cast<double>(h.scl_slope);
  const double inter = static_cast<double>(h.scl_inter);
  // slope 1 / inter 0 is skipped as well so stored float64 bits pass
  // through untouched
  const bool rescale = !(slope == 0.0) && !(slope == 1.0 && inter == 0.0);

  std::size_t nonfinite = 0;
  std::vector<Volume> volumes;
  volumes.reserve(h.nt());
  for (std::size_t t = 0; t < h.nt(); ++t) {
    std::vector<double> data;
    data.reserve(per_volume);
    const auto slice = bytes.subspan(offset + t * per_volume * sample_bytes,
                                     per_volume * sample_bytes);
    switch (h.datatype_code) {
      case DT_UINT8:
        detail::decode_samples<std::uint8_t>(slice, per_volume, swap, rescale,
                                             slope, inter, data, nonfinite);
        break;
      case DT_INT16:
        detail::decode_samples<std::int16_t>(slice, per_volume, swap, rescale,
                                             slope, inter, data, nonfinite);
        break;
      case DT_INT32:
        detail::decode_samples<std::int32_t>(slice, per_volume, swap, rescale,
                                             slope, inter, data, nonfinite);
        break;
      case DT_FLOAT32:
        detail::decode_samples<float>(slice, per_volume, swap, rescale, slope,
                                      inter, data, nonfinite);
        break;
      case DT_FLOAT64:
        detail::decode_samples<double>(slice, per_volume, swap, rescale, slope,
                                       inter, data, nonfinite);
        break;
      default:
        throw UnsupportedDatatype("datatype code " +
                                  std::to_string(h.datatype_code));
    }
    Volume v;
    v.nx = h.nx();
    v.ny = h.ny();
    v.nz = h.nz();
    v.spacing = {h.pixdim[1], h.pixdim[2], h.pixdim[3]};
    v.data = std::move(data);
    v.label = h.nt() == 1 ? std::string(name)
                          : std::string(name) + "[" + std::to_string(t) + "]";
    volumes.push_back(std::move(v));
  }
  if (report) {
    report->header = h;
    report->nonfinite_replaced = nonfinite;
  }
  return volumes;
}

inline std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::byte> bytes;
  in.seekg(0, std::ios::end);
  const auto size = in.tellg();
  if (size < 0) throw IoError("cannot read " + path.string());
  bytes.resize(static_cast<std::size_t>(size));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!in) throw IoError("short read on " + path.string());
  return bytes;
}

/// Loads a .nii or .nii.gz file. Gzip is detected from the leading bytes,
/// not the extension.
inline std::vector<Volume> read_volumes(const std::filesystem::path& path,
                                        LoadReport* report = nullptr) {
  std::vector<std::byte> bytes = read_file_bytes(path);
  if (looks_gzipped(bytes)) bytes = detail::gunzip(bytes);
  return read_volumes_from_bytes(bytes, path.filename().string(), report);
}

/// Serializes one volume as a single-file NIfTI-1 image: float64 samples in
/// host order, scl_slope 1 / scl_inter 0, vox_offset 352. When a reference
/// header is given its dims must match and its orientation block is copied
/// through unchanged.
inline std::vector<std::byte> write_volume_bytes(const Volume& v,
                                                 const NiftiHeader* reference = nullptr) {
  if (v.data.size() != v.voxel_count())
    throw BadDims("volume data length does not match its dims");
  if (v.voxel_count() == 0) throw BadDims("cannot write an empty volume");
  if (reference) {
    if (reference->nx() != v.nx || reference->ny() != v.ny ||
        reference->nz() != v.nz)
      throw DimMismatch("volume dims do not match the reference header");
  }

  detail::RawNifti1Header raw{};
  raw.sizeof_hdr = 348;
  raw.regular = 'r';
  raw.dim[0] = 3;
  raw.dim[1] = static_cast<std::int16_t>(v.nx);
  raw.dim[2] = static_cast<std::int16_t>(v.ny);
  raw.dim[3] = static_cast<std::int16_t>(v.nz);
  for (int i = 4; i < 8; ++i) raw.dim[i] = 1;
  raw.datatype = DT_FLOAT64;
  raw.bitpix = 64;
  raw.pixdim[0] = reference && reference->pixdim[0] != 0.0f ? reference->pixdim[0] : 1.0f;
  raw.pixdim[1] = v.spacing[0];
  raw.pixdim[2] = v.spacing[1];
  raw.pixdim[3] = v.spacing[2];
  if (reference)
    for (int i = 4; i < 8; ++i) raw.pixdim[i] = reference->pixdim[i];
  raw.vox_offset = kNiftiVoxOffset;
  raw.scl_slope = 1.0f;
  raw.scl_inter = 0.0f;
  raw.xyzt_units = 10;  // mm | sec
  if (reference) {
    raw.qform_code = reference->qform_code;
    raw.sform_code = reference->sform_code;
    raw.quatern_b = reference->quatern_b;
    raw.quatern_c = reference->quatern_c;
    raw.quatern_d = reference->quatern_d;
    raw.qoffset_x = reference->qoffset_x;
    raw.qoffset_y = reference->qoffset_y;
    raw.qoffset_z = reference->qoffset_z;
    std::copy(reference->srow_x.begin(), reference->srow_x.end(), raw.srow_x);
    std::copy(reference->srow_y.begin(), reference->srow_y.end(), raw.srow_y);
    std::copy(reference->srow_z.begin(), reference->srow_z.end(), raw.srow_z);
    std::copy(reference->intent_name.begin(), reference->intent_name.end(),
              raw.intent_name);
  } else {
    raw.sform_code = 1;
    raw.srow_x[0] = v.spacing[0];
    raw.srow_y[1] = v.spacing[1];
    raw.srow_z[2] = v.spacing[2];
  }
  raw.magic[0] = 'n';
  raw.magic[1] = '+';
  raw.magic[2] = '1';
  raw.magic[3] = '\0';

  std::vector<std::byte> bytes(352 + v.data.size() * sizeof(double));
  std::memcpy(bytes.data(), &raw, sizeof raw);
  // bytes 348..351 stay zero: no header extensions
  std::memcpy(bytes.data() + 352, v.data.data(), v.data.size() * sizeof(double));
  return bytes;
}

/// Writes a volume to disk; a path ending in .gz gets a gzip container.
inline void write_volume(const std::filesystem::path& path, const Volume& v,
                         const NiftiHeader* reference = nullptr) {
  std::vector<std::byte> bytes = write_volume_bytes(v, reference);
  if (path.extension() == ".gz") bytes = detail::gzip_compress(bytes);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write on " + path.string());
}

}  // namespace voxmatch
