// Resampling onto an isotropic target grid, preserving world-space
// geometry. Target voxel centers are mapped through the target affine and
// the inverse source affine to a continuous source index (voxel-center
// alignment: the source origin and direction cosines are kept, only the
// voxel size changes).
//
// Scalars interpolate trilinearly (or nearest on request) with an
// out-of-bounds fill of -1024 HU; labels always use nearest neighbor with
// fill 0, so the output label set can never grow. Nearest rounding is
// round-half-away-from-zero, pinned here because half-voxel ties otherwise
// differ across platforms.

#pragma once

#include <cmath>

#include "ctseg/core.hpp"
#include "ctseg/parallel.hpp"

namespace ctseg {

enum class Interp { trilinear, nearest };

// Smallest grid at the requested isotropic spacing whose world bounding box
// covers the source's: dims = ceil(src_dims * src_spacing / spacing_iso)
// per axis, direction cosines and origin taken from the source.
inline Grid build_target_grid(const Grid& src, double spacing_iso) {
  if (!(spacing_iso > 0)) throw Error("target spacing must be positive");
  src.validate();
  Grid target;
  target.spacing = {spacing_iso, spacing_iso, spacing_iso};
  for (int axis = 0; axis < 3; ++axis) {
    const auto a = static_cast<std::size_t>(axis);
    const double extent = static_cast<double>(src.dims[a]) * src.spacing[a];
    // The tiny slack keeps exact ratios (e.g. same spacing) from picking up
    // one extra voxel through floating-point noise.
    target.dims[a] = std::max(1, static_cast<int>(std::ceil(extent / spacing_iso - 1e-9)));
  }
  for (int col = 0; col < 3; ++col) {
    const auto c = static_cast<std::size_t>(col);
    const double norm = src.spacing[c];
    for (int row = 0; row < 3; ++row) {
      target.affine.at(row, col) = src.affine.at(row, col) / norm * spacing_iso;
    }
  }
  for (int row = 0; row < 3; ++row) target.affine.at(row, 3) = src.affine.at(row, 3);
  target.validate();
  return target;
}

namespace detail {

// c = (source affine)^-1 * target affine, applied per target voxel.
template <class Sampler>
void map_target_voxels(const Grid& src, const Grid& target, int threads, Sampler&& sample) {
  const Affine to_source = src.affine.inverse().mul(target.affine);
  parallel_for(static_cast<std::size_t>(target.dims[2]), threads, [&](std::size_t kz) {
    const auto k = static_cast<double>(kz);
    for (int j = 0; j < target.dims[1]; ++j) {
      for (int i = 0; i < target.dims[0]; ++i) {
        const Vec3 c = to_source.apply({static_cast<double>(i), static_cast<double>(j), k});
        sample(target.index(i, j, static_cast<int>(kz)), c);
      }
    }
  });
}

template <class T>
T nearest_at(const Grid& grid, const std::vector<T>& data, const Vec3& c, T fill) {
  const int i = static_cast<int>(std::round(c[0]));
  const int j = static_cast<int>(std::round(c[1]));
  const int k = static_cast<int>(std::round(c[2]));
  if (!grid.contains(i, j, k)) return fill;
  return data[grid.index(i, j, k)];
}

inline double trilinear_at(const Grid& grid, const std::vector<double>& data,
                           const Vec3& c, double fill) {
  const double fi = std::floor(c[0]);
  const double fj = std::floor(c[1]);
  const double fk = std::floor(c[2]);
  const int i0 = static_cast<int>(fi);
  const int j0 = static_cast<int>(fj);
  const int k0 = static_cast<int>(fk);
  const double wx = c[0] - fi, wy = c[1] - fj, wz = c[2] - fk;
  double acc = 0;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? wx : 1 - wx) * (dy ? wy : 1 - wy) * (dz ? wz : 1 - wz);
        if (w == 0) continue;
        const int i = i0 + dx, j = j0 + dy, k = k0 + dz;
        acc += w * (grid.contains(i, j, k) ? data[grid.index(i, j, k)] : fill);
      }
    }
  }
  return acc;
}

}  // namespace detail

inline Volume3D resample_scalar(const Volume3D& src, const Grid& target,
                                Interp mode = Interp::trilinear, int threads = 1) {
  src.validate();
  target.validate();
  Volume3D out;
  out.grid = target;
  out.data.assign(target.voxel_count(), kAirHu);
  if (mode == Interp::trilinear) {
    detail::map_target_voxels(src.grid, target, threads, [&](std::size_t idx, const Vec3& c) {
      out.data[idx] = detail::trilinear_at(src.grid, src.data, c, kAirHu);
    });
  } else {
    detail::map_target_voxels(src.grid, target, threads, [&](std::size_t idx, const Vec3& c) {
      out.data[idx] = detail::nearest_at(src.grid, src.data, c, kAirHu);
    });
  }
  return out;
}

// Labels resample with nearest neighbor only; trilinear would invent labels.
inline LabelMap resample_labels(const LabelMap& src, const Grid& target, int threads = 1) {
  src.validate();
  target.validate();
  LabelMap out;
  out.grid = target;
  out.data.assign(target.voxel_count(), 0);
  detail::map_target_voxels(src.grid, target, threads, [&](std::size_t idx, const Vec3& c) {
    out.data[idx] = detail::nearest_at<std::uint16_t>(src.grid, src.data, c, 0);
  });
  return out;
}

}  // namespace ctseg
