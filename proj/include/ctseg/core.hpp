// Core value types shared by the whole toolkit: a 4x4 voxel-to-world
// affine, the voxel grid it describes, and the scalar / label / binary
// volumes living on that grid. All of these are plain immutable-by-value
// data; loading, resampling and every metric below treat them as inputs
// and produce fresh values, so they are safe to share across threads.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctseg {

// Input or data errors (bad files, mismatched grids, invalid arguments).
// The CLI maps these to exit code 1. Anything derived from std::logic_error
// means a broken internal invariant and exits with code 2 instead.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

template <class... Args>
std::string strfmt(const char* fmt, Args... args) {
  char buf[768];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return std::string(buf);
}

}  // namespace detail

using Index3 = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

// Structure IDs are 1..104; 0 is background. Label volumes are stored as
// uint16 so instance labelings (ribs etc.) have headroom past 104.
inline constexpr std::uint16_t kMaxStructureId = 104;

// Hounsfield value used to pad resampled CT volumes (air).
inline constexpr double kAirHu = -1024.0;

// Row-major homogeneous 4x4 transform mapping voxel indices to world mm.
// The bottom row is always [0 0 0 1].
struct Affine {
  std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  double& at(int r, int c) { return m[static_cast<std::size_t>(r * 4 + c)]; }
  double at(int r, int c) const { return m[static_cast<std::size_t>(r * 4 + c)]; }

  static Affine diagonal(const Vec3& spacing, const Vec3& origin = {0, 0, 0}) {
    Affine a;
    for (int i = 0; i < 3; ++i) {
      a.at(i, i) = spacing[static_cast<std::size_t>(i)];
      a.at(i, 3) = origin[static_cast<std::size_t>(i)];
    }
    return a;
  }

  Vec3 apply(const Vec3& p) const {
    Vec3 out;
    for (int r = 0; r < 3; ++r) {
      out[static_cast<std::size_t>(r)] =
          at(r, 0) * p[0] + at(r, 1) * p[1] + at(r, 2) * p[2] + at(r, 3);
    }
    return out;
  }

  Affine mul(const Affine& rhs) const {
    Affine out;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        double s = 0;
        for (int k = 0; k < 4; ++k) s += at(r, k) * rhs.at(k, c);
        out.at(r, c) = s;
      }
    }
    return out;
  }

  // Determinant of the upper-left 3x3 (rotation * spacing part).
  double det3() const {
    return at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1)) -
           at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0)) +
           at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0));
  }

  // Euclidean norms of the three direction columns; for a shear-free
  // affine these are the voxel spacings.
  Vec3 column_norms() const {
    Vec3 out;
    for (int c = 0; c < 3; ++c) {
      out[static_cast<std::size_t>(c)] = std::sqrt(
          at(0, c) * at(0, c) + at(1, c) * at(1, c) + at(2, c) * at(2, c));
    }
    return out;
  }

  Affine inverse() const {
    const double det = det3();
    if (std::abs(det) < 1e-300) throw Error("affine is not invertible");
    Affine inv;
    // Inverse of [R t; 0 1] is [R^-1, -R^-1 t; 0 1].
    const double c00 = at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1);
    const double c01 = at(0, 2) * at(2, 1) - at(0, 1) * at(2, 2);
    const double c02 = at(0, 1) * at(1, 2) - at(0, 2) * at(1, 1);
    const double c10 = at(1, 2) * at(2, 0) - at(1, 0) * at(2, 2);
    const double c11 = at(0, 0) * at(2, 2) - at(0, 2) * at(2, 0);
    const double c12 = at(0, 2) * at(1, 0) - at(0, 0) * at(1, 2);
    const double c20 = at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0);
    const double c21 = at(0, 1) * at(2, 0) - at(0, 0) * at(2, 1);
    const double c22 = at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
    inv.at(0, 0) = c00 / det;
    inv.at(0, 1) = c01 / det;
    inv.at(0, 2) = c02 / det;
    inv.at(1, 0) = c10 / det;
    inv.at(1, 1) = c11 / det;
    inv.at(1, 2) = c12 / det;
    inv.at(2, 0) = c20 / det;
    inv.at(2, 1) = c21 / det;
    inv.at(2, 2) = c22 / det;
    for (int r = 0; r < 3; ++r) {
      inv.at(r, 3) = -(inv.at(r, 0) * at(0, 3) + inv.at(r, 1) * at(1, 3) +
                       inv.at(r, 2) * at(2, 3));
    }
    return inv;
  }

  bool approx_equal(const Affine& o, double tol = 1e-6) const {
    for (std::size_t i = 0; i < 16; ++i) {
      if (std::abs(m[i] - o.m[i]) > tol) return false;
    }
    return true;
  }
};

// Voxel lattice: dimensions, spacing in mm/voxel and the voxel-to-world
// affine. Data arrays index x fastest: idx = i + nx*(j + ny*k).
struct Grid {
  Index3 dims{0, 0, 0};
  Vec3 spacing{1, 1, 1};
  Affine affine;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) +
                static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
  }

  bool contains(int i, int j, int k) const {
    return i >= 0 && i < dims[0] && j >= 0 && j < dims[1] && k >= 0 && k < dims[2];
  }

  // World coordinate of a (possibly fractional) voxel index.
  Vec3 world(double i, double j, double k) const { return affine.apply({i, j, k}); }

  double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }

  bool same_geometry(const Grid& o, double tol = 1e-6) const {
    return dims == o.dims && affine.approx_equal(o.affine, tol);
  }

  // Enforces the grid invariants: positive dims and spacing, invertible
  // affine whose |det| matches the spacing product (i.e. no shear).
  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (dims[static_cast<std::size_t>(a)] <= 0)
        throw Error(detail::strfmt("grid dims must be positive, got %d on axis %d",
                                   dims[static_cast<std::size_t>(a)], a));
      if (!(spacing[static_cast<std::size_t>(a)] > 0))
        throw Error(detail::strfmt("grid spacing must be positive, got %g on axis %d",
                                   spacing[static_cast<std::size_t>(a)], a));
    }
    const double det = std::abs(affine.det3());
    const double prod = spacing[0] * spacing[1] * spacing[2];
    if (std::abs(det - prod) > 1e-6 * std::max(det, prod)) {
      throw Error(detail::strfmt(
          "affine is sheared or inconsistent with spacing: |det|=%.9g, "
          "spacing product=%.9g",
          det, prod));
    }
    (void)affine.inverse();
  }
};

// Scalar CT volume in Hounsfield units (rescale already applied).
struct Volume3D {
  Grid grid;
  std::vector<double> data;

  void validate() const {
    grid.validate();
    if (data.size() != grid.voxel_count())
      throw Error(detail::strfmt("volume data length %zu does not match dims product %zu",
                                 data.size(), grid.voxel_count()));
  }
};

// Integer volume on the same kind of grid; 0 = background, 1..104 = structures.
struct LabelMap {
  Grid grid;
  std::vector<std::uint16_t> data;

  void validate() const {
    grid.validate();
    if (data.size() != grid.voxel_count())
      throw Error(detail::strfmt("label data length %zu does not match dims product %zu",
                                 data.size(), grid.voxel_count()));
  }
};

// Per-structure boolean view of a LabelMap, on the same grid.
struct BinaryMask {
  Grid grid;
  std::vector<std::uint8_t> data;

  std::size_t cardinality() const {
    std::size_t n = 0;
    for (auto v : data) n += v ? 1 : 0;
    return n;
  }
};

}  // namespace ctseg
