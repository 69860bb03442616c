#pragma once

// NIfTI-1 single-file (.nii / .nii.gz) reader and writer.
//
// Only the little-endian "n+1" layout is handled. The affine (qform/sform) is
// carried through as opaque metadata; all downstream math is in voxel indices.

#include <zlib.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "bratsos/error.hpp"
#include "bratsos/volume.hpp"

namespace bratsos {

static_assert(std::endian::native == std::endian::little,
              "NIfTI I/O assumes a little-endian host");

enum class NiftiDatatype : std::int16_t {
  kUint8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
};

inline int bytes_per_voxel(NiftiDatatype t) {
  switch (t) {
    case NiftiDatatype::kUint8: return 1;
    case NiftiDatatype::kInt16: return 2;
    case NiftiDatatype::kInt32: return 4;
    case NiftiDatatype::kFloat32: return 4;
    case NiftiDatatype::kFloat64: return 8;
  }
  return 0;
}

inline bool is_supported_datatype(std::int16_t code) {
  return code == 2 || code == 4 || code == 8 || code == 16 || code == 64;
}

struct NiftiHeader {
  NiftiDatatype datatype = NiftiDatatype::kFloat64;
  std::array<std::int16_t, 8> dim{};
  std::array<float, 8> pixdim{};
  float vox_offset = 352.0f;
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
  std::uint8_t xyzt_units = 2;  // NIFTI_UNITS_MM
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  std::array<float, 6> quatern{};  // b, c, d, qoffset x, y, z
  std::array<float, 12> srow{};    // srow_x, srow_y, srow_z
  std::string descrip;
};

namespace nifti_detail {

inline constexpr std::size_t kHeaderSize = 348;
inline constexpr std::size_t kDefaultVoxOffset = 352;

template <typename T>
T load(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename T>
void store(unsigned char* p, T v) {
  std::memcpy(p, &v, sizeof(T));
}

struct GzCloser {
  void operator()(gzFile f) const {
    if (f) gzclose(f);
  }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

// gzread reads plain files unchanged, so one path serves .nii and .nii.gz.
inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  GzHandle f(gzopen(path.string().c_str(), "rb"));
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> buf;
  std::array<unsigned char, 1 << 16> chunk{};
  for (;;) {
    int n = gzread(f.get(), chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      int errnum = 0;
      const char* msg = gzerror(f.get(), &errnum);
      throw IoError("read error in " + path.string() + ": " + (msg ? msg : "unknown"));
    }
    if (n == 0) break;
    buf.insert(buf.end(), chunk.begin(), chunk.begin() + n);
  }
  return buf;
}

inline bool ends_with_gz(const std::filesystem::path& path) {
  return path.extension() == ".gz";
}

template <typename T>
void decode(const unsigned char* p, std::size_t n, std::vector<double>& out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(load<T>(p + i * sizeof(T)));
}

template <typename T>
void encode(const std::vector<double>& values, unsigned char* p) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    double v = values[i];
    if constexpr (std::is_integral_v<T>) {
      if (v != std::floor(v) || v < static_cast<double>(std::numeric_limits<T>::min()) ||
          v > static_cast<double>(std::numeric_limits<T>::max()))
        throw ArgumentError("write_nifti: value " + std::to_string(v) +
                            " not representable in the requested integer datatype");
    }
    store<T>(p + i * sizeof(T), static_cast<T>(v));
  }
}

}  // namespace nifti_detail

struct NiftiImage {
  VolumeGrid grid;
  NiftiHeader header;
};

/// Reads a NIfTI-1 volume. The returned grid is tagged with `kind`, so label
/// and atlas alphabets are validated on load.
inline NiftiImage read_nifti(const std::filesystem::path& path,
                             ValueKind kind = ValueKind::kIntensity) {
  using namespace nifti_detail;
  const std::vector<unsigned char> buf = slurp(path);
  if (buf.size() < kHeaderSize) throw IoError(path.string() + ": truncated header");
  const unsigned char* h = buf.data();

  const auto sizeof_hdr = load<std::int32_t>(h);
  if (sizeof_hdr == 540) throw UnsupportedError(path.string() + ": NIfTI-2 is not supported");
  if (sizeof_hdr != 348) {
    std::int32_t swapped = static_cast<std::int32_t>(__builtin_bswap32(static_cast<std::uint32_t>(sizeof_hdr)));
    if (swapped == 348)
      throw UnsupportedError(path.string() + ": big-endian NIfTI is not supported");
    throw FormatError(path.string() + ": sizeof_hdr is not 348");
  }
  if (std::memcmp(h + 344, "n+1\0", 4) != 0) {
    if (std::memcmp(h + 344, "ni1\0", 4) == 0)
      throw FormatError(path.string() + ": two-file NIfTI (.hdr/.img) is not supported");
    throw FormatError(path.string() + ": bad magic, expected \"n+1\"");
  }

  NiftiHeader hdr;
  for (int i = 0; i < 8; ++i) {
    hdr.dim[i] = load<std::int16_t>(h + 40 + 2 * i);
    hdr.pixdim[i] = load<float>(h + 76 + 4 * i);
  }
  const auto code = load<std::int16_t>(h + 70);
  if (!is_supported_datatype(code))
    throw UnsupportedError(path.string() + ": unsupported datatype code " + std::to_string(code));
  hdr.datatype = static_cast<NiftiDatatype>(code);
  hdr.vox_offset = load<float>(h + 108);
  hdr.scl_slope = load<float>(h + 112);
  hdr.scl_inter = load<float>(h + 116);
  hdr.xyzt_units = h[123];
  hdr.qform_code = load<std::int16_t>(h + 252);
  hdr.sform_code = load<std::int16_t>(h + 254);
  for (int i = 0; i < 6; ++i) hdr.quatern[i] = load<float>(h + 256 + 4 * i);
  for (int i = 0; i < 12; ++i) hdr.srow[i] = load<float>(h + 280 + 4 * i);
  hdr.descrip.assign(reinterpret_cast<const char*>(h + 148), strnlen(reinterpret_cast<const char*>(h + 148), 80));

  const int ndim = hdr.dim[0];
  if (ndim < 1 || ndim > 7) throw FormatError(path.string() + ": dim[0] out of range");
  Dims dims{1, 1, 1};
  for (int a = 0; a < 3; ++a) {
    if (a < ndim) {
      if (hdr.dim[a + 1] <= 0) throw FormatError(path.string() + ": non-positive dim");
      dims[a] = static_cast<std::size_t>(hdr.dim[a + 1]);
    }
  }
  for (int a = 4; a <= ndim; ++a)
    if (hdr.dim[a] > 1)
      throw UnsupportedError(path.string() + ": only 3D volumes are supported (dim[" +
                             std::to_string(a) + "] > 1)");
  Spacing spacing{1.0, 1.0, 1.0};
  for (int a = 0; a < 3; ++a) {
    if (a < ndim) {
      double s = std::fabs(static_cast<double>(hdr.pixdim[a + 1]));
      if (!(s > 0.0) || !std::isfinite(s))
        throw FormatError(path.string() + ": pixdim must be positive");
      spacing[a] = s;
    }
  }
  if (hdr.vox_offset < 352.0f) throw FormatError(path.string() + ": vox_offset < 352");

  const std::size_t n = voxel_count(dims);
  const auto offset = static_cast<std::size_t>(hdr.vox_offset);
  const std::size_t payload = n * static_cast<std::size_t>(bytes_per_voxel(hdr.datatype));
  if (buf.size() < offset + payload)
    throw IoError(path.string() + ": truncated payload (" + std::to_string(buf.size() - std::min(buf.size(), offset)) +
                  " of " + std::to_string(payload) + " bytes)");

  std::vector<double> values(n);
  const unsigned char* p = buf.data() + offset;
  switch (hdr.datatype) {
    case NiftiDatatype::kUint8: decode<std::uint8_t>(p, n, values); break;
    case NiftiDatatype::kInt16: decode<std::int16_t>(p, n, values); break;
    case NiftiDatatype::kInt32: decode<std::int32_t>(p, n, values); break;
    case NiftiDatatype::kFloat32: decode<float>(p, n, values); break;
    case NiftiDatatype::kFloat64: decode<double>(p, n, values); break;
  }
  if (hdr.scl_slope != 0.0f && std::isfinite(hdr.scl_slope)) {
    const double slope = hdr.scl_slope;
    const double inter = std::isfinite(hdr.scl_inter) ? hdr.scl_inter : 0.0;
    if (slope != 1.0 || inter != 0.0)
      for (double& v : values) v = v * slope + inter;
  }
  return {VolumeGrid(dims, spacing, std::move(values), kind), hdr};
}

// Storage type picked when the caller does not choose one.
inline NiftiDatatype default_datatype(ValueKind kind) {
  return kind == ValueKind::kIntensity ? NiftiDatatype::kFloat64 : NiftiDatatype::kUint8;
}

/// Writes grid as NIfTI-1; gzip-compressed when the path ends in ".gz".
/// `meta` supplies the opaque orientation fields; dims, spacing and datatype
/// always come from the grid and `datatype`.
inline void write_nifti(const VolumeGrid& grid, const std::filesystem::path& path,
                        NiftiDatatype datatype, const NiftiHeader* meta = nullptr) {
  using namespace nifti_detail;
  for (std::size_t a = 0; a < 3; ++a)
    if (grid.dims()[a] > static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max()))
      throw ArgumentError("write_nifti: extent exceeds NIfTI-1 limit of 32767");

  const std::size_t bpv = static_cast<std::size_t>(bytes_per_voxel(datatype));
  std::vector<unsigned char> buf(kDefaultVoxOffset + grid.size() * bpv, 0);
  unsigned char* h = buf.data();
  store<std::int32_t>(h, 348);
  std::array<std::int16_t, 8> dim{3, static_cast<std::int16_t>(grid.dims()[0]),
                                  static_cast<std::int16_t>(grid.dims()[1]),
                                  static_cast<std::int16_t>(grid.dims()[2]), 1, 1, 1, 1};
  std::array<float, 8> pixdim{meta ? meta->pixdim[0] : 1.0f,
                              static_cast<float>(grid.spacing()[0]),
                              static_cast<float>(grid.spacing()[1]),
                              static_cast<float>(grid.spacing()[2]), 0.0f, 0.0f, 0.0f, 0.0f};
  if (pixdim[0] != -1.0f) pixdim[0] = 1.0f;
  for (int i = 0; i < 8; ++i) {
    store<std::int16_t>(h + 40 + 2 * i, dim[i]);
    store<float>(h + 76 + 4 * i, pixdim[i]);
  }
  store<std::int16_t>(h + 70, static_cast<std::int16_t>(datatype));
  store<std::int16_t>(h + 72, static_cast<std::int16_t>(bpv * 8));
  store<float>(h + 108, static_cast<float>(kDefaultVoxOffset));
  store<float>(h + 112, 0.0f);  // no intensity scaling
  store<float>(h + 116, 0.0f);
  h[123] = meta ? meta->xyzt_units : 2;
  if (meta) {
    store<std::int16_t>(h + 252, meta->qform_code);
    store<std::int16_t>(h + 254, meta->sform_code);
    for (int i = 0; i < 6; ++i) store<float>(h + 256 + 4 * i, meta->quatern[i]);
    for (int i = 0; i < 12; ++i) store<float>(h + 280 + 4 * i, meta->srow[i]);
    std::memcpy(h + 148, meta->descrip.data(), std::min<std::size_t>(meta->descrip.size(), 79));
  }
  std::memcpy(h + 344, "n+1\0", 4);

  unsigned char* p = buf.data() + kDefaultVoxOffset;
  switch (datatype) {
    case NiftiDatatype::kUint8: encode<std::uint8_t>(grid.data(), p); break;
    case NiftiDatatype::kInt16: encode<std::int16_t>(grid.data(), p); break;
    case NiftiDatatype::kInt32: encode<std::int32_t>(grid.data(), p); break;
    case NiftiDatatype::kFloat32: encode<float>(grid.data(), p); break;
    case NiftiDatatype::kFloat64: encode<double>(grid.data(), p); break;
  }

  const char* mode = ends_with_gz(path) ? "wb6" : "wbT";  // T: transparent, no compression
  GzHandle f(gzopen(path.string().c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  std::size_t written = 0;
  while (written < buf.size()) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(buf.size() - written, 1u << 30));
    int n = gzwrite(f.get(), buf.data() + written, chunk);
    if (n <= 0) throw IoError("write error on " + path.string());
    written += static_cast<std::size_t>(n);
  }
  if (gzclose(f.release()) != Z_OK) throw IoError("close failed on " + path.string());
}

inline void write_nifti(const VolumeGrid& grid, const std::filesystem::path& path) {
  write_nifti(grid, path, default_datatype(grid.kind()));
}

}  // namespace bratsos
