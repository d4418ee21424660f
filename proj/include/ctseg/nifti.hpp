// NIfTI-1 volume I/O. Reads scalar CT images (with HU rescale applied) and
// label maps from .nii / .nii.gz single files, and from .hdr/.img pairs when
// the header carries the "ni1" magic. Writes single-file .nii(.gz):
// label maps as uint8, scalar volumes as float32.
//
// Format subset (see docs/formats.md): 348-byte header; consumed fields are
// dim[0..3], datatype, bitpix, pixdim[0..3], vox_offset, scl_slope,
// scl_inter, qform_code, sform_code, quatern_*, qoffset_*, srow_x/y/z and
// magic. Supported datatype codes: 2 (uint8), 4 (int16), 8 (int32),
// 16 (float32), 64 (float64), 512 (uint16). Both endiannesses are read
// (detected via sizeof_hdr); files are written little-endian.
//
// Grid selection is deterministic: sform when sform_code > 0 and the rows
// are invertible, else qform when qform_code > 0, else a pixdim diagonal.
// scl_slope == 0 is treated as 1 per the format's convention.

#pragma once

#include <zlib.h>

#include <cstddef>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "ctseg/core.hpp"

namespace ctseg {

namespace nifti {

struct Header {
  std::int32_t sizeof_hdr;     // offset 0
  char data_type[10];          // 4
  char db_name[18];            // 14
  std::int32_t extents;        // 32
  std::int16_t session_error;  // 36
  char regular;                // 38
  char dim_info;               // 39
  std::int16_t dim[8];         // 40
  float intent_p1;             // 56
  float intent_p2;             // 60
  float intent_p3;             // 64
  std::int16_t intent_code;    // 68
  std::int16_t datatype;       // 70
  std::int16_t bitpix;         // 72
  std::int16_t slice_start;    // 74
  float pixdim[8];             // 76
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

static_assert(sizeof(Header) == 348, "NIfTI-1 header must be 348 bytes");
static_assert(offsetof(Header, dim) == 40);
static_assert(offsetof(Header, datatype) == 70);
static_assert(offsetof(Header, pixdim) == 76);
static_assert(offsetof(Header, vox_offset) == 108);
static_assert(offsetof(Header, scl_slope) == 112);
static_assert(offsetof(Header, qform_code) == 252);
static_assert(offsetof(Header, srow_x) == 280);
static_assert(offsetof(Header, magic) == 344);

enum DatatypeCode : std::int16_t {
  kUint8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
  kUint16 = 512,
};

namespace detail {

inline void swap_bytes(void* p, std::size_t size) {
  auto* b = static_cast<unsigned char*>(p);
  for (std::size_t i = 0; i < size / 2; ++i) std::swap(b[i], b[size - 1 - i]);
}

template <class T>
void swap_field(T& v) {
  swap_bytes(&v, sizeof(T));
}

inline void swap_header(Header& h) {
  swap_field(h.sizeof_hdr);
  swap_field(h.extents);
  swap_field(h.session_error);
  for (auto& d : h.dim) swap_field(d);
  swap_field(h.intent_p1);
  swap_field(h.intent_p2);
  swap_field(h.intent_p3);
  swap_field(h.intent_code);
  swap_field(h.datatype);
  swap_field(h.bitpix);
  swap_field(h.slice_start);
  for (auto& p : h.pixdim) swap_field(p);
  swap_field(h.vox_offset);
  swap_field(h.scl_slope);
  swap_field(h.scl_inter);
  swap_field(h.slice_end);
  swap_field(h.cal_max);
  swap_field(h.cal_min);
  swap_field(h.slice_duration);
  swap_field(h.toffset);
  swap_field(h.glmax);
  swap_field(h.glmin);
  swap_field(h.qform_code);
  swap_field(h.sform_code);
  swap_field(h.quatern_b);
  swap_field(h.quatern_c);
  swap_field(h.quatern_d);
  swap_field(h.qoffset_x);
  swap_field(h.qoffset_y);
  swap_field(h.qoffset_z);
  for (auto& v : h.srow_x) swap_field(v);
  for (auto& v : h.srow_y) swap_field(v);
  for (auto& v : h.srow_z) swap_field(v);
}

struct GzCloser {
  void operator()(gzFile f) const {
    if (f) gzclose(f);
  }
};
using GzPtr = std::unique_ptr<gzFile_s, GzCloser>;

inline GzPtr gz_open_read(const std::string& path) {
  GzPtr f(gzopen(path.c_str(), "rb"));
  if (!f) throw Error("cannot open file for reading: " + path);
  return f;
}

inline void gz_read_exact(gzFile f, void* buf, std::size_t bytes,
                          const std::string& path, std::size_t offset,
                          const char* what) {
  auto* p = static_cast<unsigned char*>(buf);
  std::size_t done = 0;
  while (done < bytes) {
    const unsigned chunk = static_cast<unsigned>(
        std::min<std::size_t>(bytes - done, 1u << 24));
    const int got = gzread(f, p + done, chunk);
    if (got <= 0) {
      throw Error(ctseg::detail::strfmt(
          "%s: truncated %s, expected %zu bytes at offset %zu, got %zu",
          path.c_str(), what, bytes, offset, done));
    }
    done += static_cast<std::size_t>(got);
  }
}

inline void gz_skip(gzFile f, std::size_t bytes, const std::string& path) {
  unsigned char scratch[4096];
  std::size_t done = 0;
  while (done < bytes) {
    const unsigned chunk =
        static_cast<unsigned>(std::min<std::size_t>(bytes - done, sizeof(scratch)));
    const int got = gzread(f, scratch, chunk);
    if (got <= 0)
      throw Error(ctseg::detail::strfmt("%s: truncated file while seeking to data at offset %zu",
                                        path.c_str(), bytes));
    done += static_cast<std::size_t>(got);
  }
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct Parsed {
  Header hdr;
  bool swapped = false;
  Grid grid;
  std::size_t voxels = 0;
  std::size_t value_bytes = 0;
};

inline std::size_t datatype_bytes(std::int16_t code, const std::string& path) {
  switch (code) {
    case kUint8: return 1;
    case kInt16: return 2;
    case kInt32: return 4;
    case kFloat32: return 4;
    case kFloat64: return 8;
    case kUint16: return 2;
    default:
      throw Error(ctseg::detail::strfmt(
          "%s: unsupported datatype code %d at offset 70 (supported: 2, 4, 8, 16, 64, 512)",
          path.c_str(), code));
  }
}

inline Affine affine_from_qform(const Header& h) {
  double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
  double norm = b * b + c * c + d * d;
  if (norm > 1.0 + 1e-5)
    throw Error(ctseg::detail::strfmt(
        "malformed qform quaternion at offset 256: |(b,c,d)|^2 = %.9g > 1", norm));
  if (norm > 1.0) {
    const double s = std::sqrt(norm);
    b /= s;
    c /= s;
    d /= s;
    norm = 1.0;
  }
  const double a = std::sqrt(1.0 - norm);
  const double r[3][3] = {
      {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
      {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
      {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c}};
  const double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
  const double sp[3] = {h.pixdim[1], h.pixdim[2], h.pixdim[3] * qfac};
  Affine aff;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) aff.at(row, col) = r[row][col] * sp[col];
  }
  aff.at(0, 3) = h.qoffset_x;
  aff.at(1, 3) = h.qoffset_y;
  aff.at(2, 3) = h.qoffset_z;
  return aff;
}

inline Parsed parse_header(const Header& raw, bool swapped, const std::string& path) {
  Parsed p;
  p.hdr = raw;
  p.swapped = swapped;
  const Header& h = p.hdr;

  const bool magic_n1 = std::memcmp(h.magic, "n+1", 4) == 0;
  const bool magic_ni1 = std::memcmp(h.magic, "ni1", 4) == 0;
  if (!magic_n1 && !magic_ni1)
    throw Error(path + ": not a NIfTI-1 file, bad magic at offset 344 "
                       "(expected \"n+1\" or \"ni1\")");

  if (h.dim[0] < 1 || h.dim[0] > 3)
    throw Error(ctseg::detail::strfmt(
        "%s: dim[0] = %d at offset 40; only 3D volumes are supported "
        "(multi-frame/time-series are out of scope)",
        path.c_str(), h.dim[0]));

  p.value_bytes = datatype_bytes(h.datatype, path);
  const int expect_bitpix = static_cast<int>(p.value_bytes) * 8;
  if (h.bitpix != expect_bitpix)
    throw Error(ctseg::detail::strfmt(
        "%s: bitpix %d at offset 72 contradicts datatype code %d (expected %d)",
        path.c_str(), h.bitpix, h.datatype, expect_bitpix));

  Grid& g = p.grid;
  for (int axis = 0; axis < 3; ++axis) {
    const std::int16_t extent = axis < h.dim[0] ? h.dim[axis + 1] : 1;
    if (extent < 1)
      throw Error(ctseg::detail::strfmt("%s: dim[%d] = %d at offset %d must be >= 1",
                                        path.c_str(), axis + 1, extent,
                                        40 + 2 * (axis + 1)));
    g.dims[static_cast<std::size_t>(axis)] = std::max<std::int16_t>(extent, 1);
  }

  // Grid selection order: sform > qform > pixdim diagonal.
  bool have_affine = false;
  if (h.sform_code > 0) {
    Affine aff;
    for (int col = 0; col < 4; ++col) {
      aff.at(0, col) = h.srow_x[col];
      aff.at(1, col) = h.srow_y[col];
      aff.at(2, col) = h.srow_z[col];
    }
    if (std::abs(aff.det3()) > 1e-12) {
      g.affine = aff;
      have_affine = true;
    }
  }
  if (!have_affine && h.qform_code > 0) {
    g.affine = affine_from_qform(h);
    have_affine = true;
  }
  if (!have_affine) {
    for (int axis = 0; axis < 3; ++axis) {
      const float pd = h.pixdim[axis + 1];
      if (!(pd > 0))
        throw Error(ctseg::detail::strfmt(
            "%s: pixdim[%d] = %g at offset %d must be positive (no valid sform/qform)",
            path.c_str(), axis + 1, static_cast<double>(pd), 76 + 4 * (axis + 1)));
    }
    g.affine = Affine::diagonal({h.pixdim[1], h.pixdim[2], h.pixdim[3]});
  }
  g.spacing = g.affine.column_norms();
  try {
    g.validate();
  } catch (const Error& e) {
    throw Error(path + ": invalid grid geometry: " + e.what());
  }
  p.voxels = g.voxel_count();
  return p;
}

inline Parsed read_header(const std::string& path) {
  auto f = gz_open_read(path);
  Header raw;
  gz_read_exact(f.get(), &raw, sizeof(raw), path, 0, "header");
  bool swapped = false;
  if (raw.sizeof_hdr != 348) {
    std::int32_t flipped = raw.sizeof_hdr;
    swap_field(flipped);
    if (flipped != 348)
      throw Error(ctseg::detail::strfmt(
          "%s: malformed header, sizeof_hdr at offset 0 is %d (expected 348 in "
          "either byte order); NIfTI-2 and Analyze 7.5 are not supported",
          path.c_str(), raw.sizeof_hdr));
    swap_header(raw);
    swapped = true;
  }
  return parse_header(raw, swapped, path);
}

// Path of the voxel data: the file itself for "n+1", the .img sibling for
// the two-file "ni1" layout.
inline std::string data_path_for(const std::string& hdr_path, const Parsed& p) {
  if (std::memcmp(p.hdr.magic, "n+1", 4) == 0) return hdr_path;
  std::string base = hdr_path;
  bool gz = false;
  if (ends_with(base, ".gz")) {
    base = base.substr(0, base.size() - 3);
    gz = true;
  }
  const auto dot = base.find_last_of('.');
  if (dot != std::string::npos) base = base.substr(0, dot);
  const std::string img = base + ".img";
  std::ifstream probe_plain(img, std::ios::binary);
  if (probe_plain.good()) return img;
  std::ifstream probe_gz(img + ".gz", std::ios::binary);
  if (probe_gz.good()) return img + ".gz";
  (void)gz;
  throw Error(hdr_path + ": magic \"ni1\" names a two-file volume, but no " + img +
              "(.gz) data file exists next to it");
}

inline std::vector<double> read_raw_values(const std::string& hdr_path, const Parsed& p) {
  const std::string data_path = data_path_for(hdr_path, p);
  const bool separate = data_path != hdr_path;
  // For single-file volumes the data follows the header at vox_offset
  // (>= 352); for .img files the offset is whatever the header says
  // (usually 0).
  const double vox_offset = p.hdr.vox_offset;
  std::size_t offset = 0;
  if (separate) {
    offset = vox_offset > 0 ? static_cast<std::size_t>(vox_offset) : 0;
  } else {
    if (vox_offset < 348)
      throw Error(ctseg::detail::strfmt(
          "%s: malformed vox_offset %g at offset 108 for a single-file volume",
          hdr_path.c_str(), vox_offset));
    offset = static_cast<std::size_t>(vox_offset);
  }

  auto f = gz_open_read(data_path);
  gz_skip(f.get(), offset, data_path);
  const std::size_t bytes = p.voxels * p.value_bytes;
  std::vector<unsigned char> buf(bytes);
  gz_read_exact(f.get(), buf.data(), bytes, data_path, offset, "data section");

  std::vector<double> values(p.voxels);
  const unsigned char* src = buf.data();
  auto convert = [&](auto tag) {
    using T = decltype(tag);
    for (std::size_t i = 0; i < p.voxels; ++i) {
      T v;
      std::memcpy(&v, src + i * sizeof(T), sizeof(T));
      if (p.swapped) swap_field(v);
      values[i] = static_cast<double>(v);
    }
  };
  switch (p.hdr.datatype) {
    case kUint8: convert(std::uint8_t{}); break;
    case kInt16: convert(std::int16_t{}); break;
    case kInt32: convert(std::int32_t{}); break;
    case kFloat32: convert(float{}); break;
    case kFloat64: convert(double{}); break;
    case kUint16: convert(std::uint16_t{}); break;
    default: throw std::logic_error("unreachable datatype");
  }
  return values;
}

}  // namespace detail

}  // namespace nifti

// Loads a scalar volume with HU rescale applied: value = raw * scl_slope +
// scl_inter, where a slope of 0 is treated as 1.
inline Volume3D load_volume(const std::string& path) {
  const auto parsed = nifti::detail::read_header(path);
  auto values = nifti::detail::read_raw_values(path, parsed);
  const double slope = parsed.hdr.scl_slope == 0.0f
                           ? 1.0
                           : static_cast<double>(parsed.hdr.scl_slope);
  const double inter = parsed.hdr.scl_inter;
  if (slope != 1.0 || inter != 0.0) {
    for (auto& v : values) v = v * slope + inter;
  }
  Volume3D vol;
  vol.grid = parsed.grid;
  vol.data = std::move(values);
  vol.validate();
  return vol;
}

// Loads a label map: no rescale, values must be non-negative integers and
// registered structure IDs (<= 104).
inline LabelMap load_labelmap(const std::string& path) {
  const auto parsed = nifti::detail::read_header(path);
  const auto values = nifti::detail::read_raw_values(path, parsed);
  LabelMap map;
  map.grid = parsed.grid;
  map.data.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (v != std::floor(v) || std::isnan(v))
      throw Error(ctseg::detail::strfmt("%s: non-integer value %g in label file at voxel %zu",
                                        path.c_str(), v, i));
    if (v < 0)
      throw Error(ctseg::detail::strfmt("%s: negative label %g at voxel %zu",
                                        path.c_str(), v, i));
    if (v > kMaxStructureId)
      throw Error(ctseg::detail::strfmt(
          "%s: unregistered label %.0f at voxel %zu (structure IDs end at %d)",
          path.c_str(), v, i, static_cast<int>(kMaxStructureId)));
    map.data[i] = static_cast<std::uint16_t>(v);
  }
  map.validate();
  return map;
}

namespace nifti::detail {

inline Header make_write_header(const Grid& g, std::int16_t datatype, std::int16_t bitpix) {
  Header h;
  std::memset(&h, 0, sizeof(h));
  h.sizeof_hdr = 348;
  h.regular = 'r';
  h.dim[0] = 3;
  for (int axis = 0; axis < 3; ++axis)
    h.dim[axis + 1] = static_cast<std::int16_t>(g.dims[static_cast<std::size_t>(axis)]);
  for (int axis = 3; axis < 7; ++axis) h.dim[axis + 1] = 1;
  h.datatype = datatype;
  h.bitpix = bitpix;
  h.pixdim[0] = 1.0f;
  for (int axis = 0; axis < 3; ++axis)
    h.pixdim[axis + 1] = static_cast<float>(g.spacing[static_cast<std::size_t>(axis)]);
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.qform_code = 0;
  h.sform_code = 1;
  for (int col = 0; col < 4; ++col) {
    h.srow_x[col] = static_cast<float>(g.affine.at(0, col));
    h.srow_y[col] = static_cast<float>(g.affine.at(1, col));
    h.srow_z[col] = static_cast<float>(g.affine.at(2, col));
  }
  std::memcpy(h.magic, "n+1", 4);
  return h;
}

inline void write_file(const std::string& path, const Header& h, const void* data,
                       std::size_t bytes) {
  const char extender[4] = {0, 0, 0, 0};
  if (ends_with(path, ".gz")) {
    GzPtr f(gzopen(path.c_str(), "wb"));
    if (!f) throw Error("cannot open file for writing: " + path);
    if (gzwrite(f.get(), &h, sizeof(h)) != static_cast<int>(sizeof(h)) ||
        gzwrite(f.get(), extender, 4) != 4 ||
        (bytes > 0 && gzwrite(f.get(), data, static_cast<unsigned>(bytes)) !=
                          static_cast<int>(bytes)))
      throw Error("write failed: " + path);
  } else {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open file for writing: " + path);
    f.write(reinterpret_cast<const char*>(&h), sizeof(h));
    f.write(extender, 4);
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!f) throw Error("write failed: " + path);
  }
}

}  // namespace nifti::detail

// Writes a label map as uint8 NIfTI-1 (gzip when the path ends in ".gz").
// A round-trip load yields identical label data and the same grid to 1e-6.
inline void save_labelmap(const LabelMap& map, const std::string& path) {
  map.validate();
  for (std::size_t i = 0; i < map.data.size(); ++i) {
    if (map.data[i] > kMaxStructureId)
      throw Error(ctseg::detail::strfmt("label %u at voxel %zu exceeds the structure ID range",
                                        map.data[i], i));
  }
  std::vector<std::uint8_t> bytes(map.data.size());
  for (std::size_t i = 0; i < map.data.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(map.data[i]);
  const auto h = nifti::detail::make_write_header(map.grid, nifti::kUint8, 8);
  nifti::detail::write_file(path, h, bytes.data(), bytes.size());
}

// Writes a scalar volume as float32 NIfTI-1 (gzip when the path ends ".gz").
inline void save_volume(const Volume3D& vol, const std::string& path) {
  vol.validate();
  std::vector<float> bytes(vol.data.size());
  for (std::size_t i = 0; i < vol.data.size(); ++i)
    bytes[i] = static_cast<float>(vol.data[i]);
  const auto h = nifti::detail::make_write_header(vol.grid, nifti::kFloat32, 32);
  nifti::detail::write_file(path, h, bytes.data(), bytes.size() * sizeof(float));
}

}  // namespace ctseg
