// Exact squared Euclidean distance transform on a voxel grid with
// anisotropic spacing, by the separable lower-envelope-of-parabolas method
// (one 1D pass per axis on squared distances). Distances are in world mm
// between voxel centers, which is exact for the shear-free affines the
// toolkit admits.

#pragma once

#include <algorithm>
#include <vector>

#include "ctseg/core.hpp"

namespace ctseg {

namespace detail {

inline constexpr double kEdtInf = 1e30;

// 1D squared-distance transform along samples at positions i*step.
// f holds the incoming squared costs, d the output; v/z are scratch.
inline void edt_pass_1d(const double* f, double* d, int n, double step, int* v,
                        double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kEdtInf;
  z[1] = kEdtInf;
  for (int q = 1; q < n; ++q) {
    const double qp = static_cast<double>(q) * step;
    double s;
    for (;;) {
      const double vp = static_cast<double>(v[k]) * step;
      s = ((f[q] + qp * qp) - (f[v[k]] + vp * vp)) / (2 * qp - 2 * vp);
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kEdtInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    const double qp = static_cast<double>(q) * step;
    while (z[k + 1] < qp) ++k;
    const double diff = qp - static_cast<double>(v[k]) * step;
    d[q] = diff * diff + f[v[k]];
  }
}

}  // namespace detail

// Squared distance (mm^2) from every voxel center to the nearest seed
// voxel center. Voxels with no seed anywhere keep a huge sentinel value.
inline std::vector<double> squared_edt(const Grid& grid,
                                       const std::vector<std::uint8_t>& seeds) {
  if (seeds.size() != grid.voxel_count())
    throw Error("squared_edt: seed array does not match the grid");
  const int nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
  std::vector<double> dist(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i)
    dist[i] = seeds[i] ? 0.0 : detail::kEdtInf;

  const int nmax = std::max({nx, ny, nz});
  std::vector<double> f(static_cast<std::size_t>(nmax));
  std::vector<double> d(static_cast<std::size_t>(nmax));
  std::vector<int> v(static_cast<std::size_t>(nmax));
  std::vector<double> z(static_cast<std::size_t>(nmax) + 1);

  // x pass
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      const std::size_t base = grid.index(0, j, k);
      for (int i = 0; i < nx; ++i) f[static_cast<std::size_t>(i)] = dist[base + static_cast<std::size_t>(i)];
      detail::edt_pass_1d(f.data(), d.data(), nx, grid.spacing[0], v.data(), z.data());
      for (int i = 0; i < nx; ++i) dist[base + static_cast<std::size_t>(i)] = d[static_cast<std::size_t>(i)];
    }
  }
  // y pass
  for (int k = 0; k < nz; ++k) {
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) f[static_cast<std::size_t>(j)] = dist[grid.index(i, j, k)];
      detail::edt_pass_1d(f.data(), d.data(), ny, grid.spacing[1], v.data(), z.data());
      for (int j = 0; j < ny; ++j) dist[grid.index(i, j, k)] = d[static_cast<std::size_t>(j)];
    }
  }
  // z pass
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      for (int k = 0; k < nz; ++k) f[static_cast<std::size_t>(k)] = dist[grid.index(i, j, k)];
      detail::edt_pass_1d(f.data(), d.data(), nz, grid.spacing[2], v.data(), z.data());
      for (int k = 0; k < nz; ++k) dist[grid.index(i, j, k)] = d[static_cast<std::size_t>(k)];
    }
  }
  return dist;
}

}  // namespace ctseg
