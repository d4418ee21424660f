// Label-volume algebra: merging per-part model outputs into one 104-class
// map, extracting per-structure binary masks, 3D connected components and
// splitting a merged rib mask into per-rib instances.

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ctseg/core.hpp"
#include "ctseg/taxonomy.hpp"

namespace ctseg {

struct MergeResult {
  LabelMap map;
  std::size_t conflict_voxels = 0;  // voxels claimed by more than one part
};

// Merges the per-part predictions (parts[i] holds part i+1) into one map.
// Overlaps resolve first-wins by part index; the conflict count makes the
// disagreement visible. Every part must share one grid and contain only
// IDs assigned to it.
inline MergeResult merge_parts(const std::vector<LabelMap>& parts,
                               const StructureRegistry& registry) {
  if (parts.empty()) throw Error("merge_parts: no parts given");
  for (const auto& p : parts) p.validate();
  const Grid& grid = parts[0].grid;
  for (std::size_t pi = 1; pi < parts.size(); ++pi) {
    if (!parts[pi].grid.same_geometry(grid))
      throw Error(detail::strfmt("merge_parts: part %zu is on a different grid", pi + 1));
  }
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    for (std::size_t v = 0; v < parts[pi].data.size(); ++v) {
      const auto label = parts[pi].data[v];
      if (label == 0) continue;
      const auto& entry = registry.by_id(label);
      if (entry.part != static_cast<int>(pi) + 1)
        throw Error(detail::strfmt(
            "merge_parts: part %zu contains ID %d (\"%s\") which belongs to part %d",
            pi + 1, entry.id, entry.name.c_str(), entry.part));
    }
  }
  MergeResult out;
  out.map.grid = grid;
  out.map.data.assign(grid.voxel_count(), 0);
  std::vector<std::uint8_t> claims(grid.voxel_count(), 0);
  for (const auto& part : parts) {
    for (std::size_t v = 0; v < part.data.size(); ++v) {
      if (part.data[v] == 0) continue;
      if (claims[v] == 0) out.map.data[v] = part.data[v];
      ++claims[v];
    }
  }
  for (auto c : claims) {
    if (c > 1) ++out.conflict_voxels;
  }
  return out;
}

// True exactly where the map carries the given structure ID.
inline BinaryMask extract_mask(const LabelMap& map, int id) {
  StructureRegistry::instance().by_id(id);  // validates the ID
  BinaryMask mask;
  mask.grid = map.grid;
  mask.data.resize(map.data.size());
  const auto want = static_cast<std::uint16_t>(id);
  for (std::size_t v = 0; v < map.data.size(); ++v) mask.data[v] = map.data[v] == want;
  return mask;
}

struct InstanceLabeling {
  Grid grid;
  std::vector<std::uint32_t> data;  // 0 background, 1..count instances
  std::uint32_t count = 0;
};

namespace detail {

inline std::vector<Index3> connectivity_offsets(int connectivity) {
  if (connectivity != 6 && connectivity != 26)
    throw Error(strfmt("connectivity must be 6 or 26, got %d", connectivity));
  std::vector<Index3> offs;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        if (connectivity == 6 && std::abs(dx) + std::abs(dy) + std::abs(dz) != 1) continue;
        offs.push_back({dx, dy, dz});
      }
    }
  }
  return offs;
}

}  // namespace detail

// Flood-fill connected components in raster-scan seed order, so instance
// IDs are deterministic: component 1 contains the first foreground voxel.
inline InstanceLabeling connected_components(const BinaryMask& mask, int connectivity) {
  const auto offsets = detail::connectivity_offsets(connectivity);
  InstanceLabeling out;
  out.grid = mask.grid;
  out.data.assign(mask.data.size(), 0);
  std::vector<std::size_t> stack;
  const auto& dims = mask.grid.dims;
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        const std::size_t seed = mask.grid.index(i, j, k);
        if (!mask.data[seed] || out.data[seed] != 0) continue;
        ++out.count;
        out.data[seed] = out.count;
        stack.assign(1, seed);
        while (!stack.empty()) {
          const std::size_t cur = stack.back();
          stack.pop_back();
          const int ck = static_cast<int>(cur / (static_cast<std::size_t>(dims[0]) * dims[1]));
          const std::size_t rem = cur % (static_cast<std::size_t>(dims[0]) * dims[1]);
          const int cj = static_cast<int>(rem / static_cast<std::size_t>(dims[0]));
          const int ci = static_cast<int>(rem % static_cast<std::size_t>(dims[0]));
          for (const auto& o : offsets) {
            const int ni = ci + o[0], nj = cj + o[1], nk = ck + o[2];
            if (!mask.grid.contains(ni, nj, nk)) continue;
            const std::size_t nidx = mask.grid.index(ni, nj, nk);
            if (mask.data[nidx] && out.data[nidx] == 0) {
              out.data[nidx] = out.count;
              stack.push_back(nidx);
            }
          }
        }
      }
    }
  }
  return out;
}

// One 26-neighborhood dilation step.
inline BinaryMask dilate(const BinaryMask& mask) {
  const auto offsets = detail::connectivity_offsets(26);
  BinaryMask out;
  out.grid = mask.grid;
  out.data = mask.data;
  const auto& dims = mask.grid.dims;
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        if (!mask.data[mask.grid.index(i, j, k)]) continue;
        for (const auto& o : offsets) {
          const int ni = i + o[0], nj = j + o[1], nk = k + o[2];
          if (mask.grid.contains(ni, nj, nk)) out.data[mask.grid.index(ni, nj, nk)] = 1;
        }
      }
    }
  }
  return out;
}

enum class Side { left, right };

struct RibInstance {
  int rib_number = 0;  // 1 = most cranial
  BinaryMask mask;
};

struct RibSplitResult {
  std::vector<RibInstance> ribs;
  std::vector<std::string> warnings;
};

// Splits a one-sided merged rib mask into per-rib instances:
// 26-connected components, ordered by centroid world-z descending (most
// cranial first, honoring the affine's z axis rather than array order).
//
// Fragment handling, fixed here: components below 0.2 ml merge into the
// nearest larger component whose one-voxel dilation touches theirs (a gap
// of up to two voxels bridges), otherwise they are dropped with a warning.
// Larger components never merge with each other; more than 12 of them
// means the input is fragmented and is an error.
inline RibSplitResult split_rib_instances(const BinaryMask& mask, Side side) {
  (void)side;  // the side only names outputs; geometry is identical
  constexpr double kMinFragmentMl = 0.2;
  RibSplitResult out;
  const auto comps = connected_components(mask, 26);
  if (comps.count == 0) return out;

  const double voxel_ml = mask.grid.voxel_volume_mm3() / 1000.0;
  std::vector<double> volume_ml(comps.count + 1, 0.0);
  std::vector<double> centroid_z(comps.count + 1, 0.0);
  std::vector<double> centroid_xyz(3 * (comps.count + 1), 0.0);
  std::vector<std::size_t> voxels(comps.count + 1, 0);
  const auto& dims = mask.grid.dims;
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        const auto c = comps.data[mask.grid.index(i, j, k)];
        if (!c) continue;
        const Vec3 w = mask.grid.world(i, j, k);
        centroid_xyz[3 * c + 0] += w[0];
        centroid_xyz[3 * c + 1] += w[1];
        centroid_xyz[3 * c + 2] += w[2];
        ++voxels[c];
      }
    }
  }
  for (std::uint32_t c = 1; c <= comps.count; ++c) {
    volume_ml[c] = static_cast<double>(voxels[c]) * voxel_ml;
    centroid_z[c] = centroid_xyz[3 * c + 2] / static_cast<double>(voxels[c]);
  }

  // Bridge small fragments into a dilation-connected larger component.
  std::vector<std::uint32_t> merged_into(comps.count + 1, 0);
  for (std::uint32_t c = 1; c <= comps.count; ++c) merged_into[c] = c;
  const auto dilated_comps = connected_components(dilate(mask), 26);
  std::vector<std::uint32_t> dilated_group(comps.count + 1, 0);
  for (std::size_t v = 0; v < comps.data.size(); ++v) {
    if (comps.data[v]) dilated_group[comps.data[v]] = dilated_comps.data[v];
  }
  for (std::uint32_t c = 1; c <= comps.count; ++c) {
    if (volume_ml[c] >= kMinFragmentMl) continue;
    std::uint32_t best = 0;
    double best_dist = 0;
    for (std::uint32_t other = 1; other <= comps.count; ++other) {
      if (other == c || volume_ml[other] < kMinFragmentMl) continue;
      if (dilated_group[other] != dilated_group[c]) continue;
      double d2 = 0;
      for (int axis = 0; axis < 3; ++axis) {
        const double diff =
            centroid_xyz[3 * c + static_cast<std::uint32_t>(axis)] / static_cast<double>(voxels[c]) -
            centroid_xyz[3 * other + static_cast<std::uint32_t>(axis)] / static_cast<double>(voxels[other]);
        d2 += diff * diff;
      }
      if (best == 0 || d2 < best_dist) {
        best = other;
        best_dist = d2;
      }
    }
    if (best != 0) {
      merged_into[c] = best;
    } else {
      merged_into[c] = 0;  // dropped
      out.warnings.push_back(detail::strfmt(
          "dropped fragment of %.3f ml (no larger component within the bridge distance)",
          volume_ml[c]));
    }
  }

  std::vector<std::uint32_t> kept;
  for (std::uint32_t c = 1; c <= comps.count; ++c) {
    if (merged_into[c] == c && volume_ml[c] >= kMinFragmentMl) kept.push_back(c);
  }
  // A lone sub-threshold component with nothing to merge into is still the
  // whole input; keep it rather than erase the mask.
  if (kept.empty()) {
    for (std::uint32_t c = 1; c <= comps.count; ++c) {
      if (merged_into[c] == c) kept.push_back(c);
    }
    out.warnings.clear();
  }
  if (kept.size() > 12)
    throw Error(detail::strfmt(
        "rib mask has %zu components above %.1f ml; a hemithorax has at most 12 ribs "
        "(fragmented input?)",
        kept.size(), kMinFragmentMl));

  std::sort(kept.begin(), kept.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (centroid_z[a] != centroid_z[b]) return centroid_z[a] > centroid_z[b];
    return a < b;
  });

  std::vector<std::uint32_t> rib_of(comps.count + 1, 0);
  for (std::size_t r = 0; r < kept.size(); ++r) rib_of[kept[r]] = static_cast<std::uint32_t>(r + 1);
  for (std::uint32_t c = 1; c <= comps.count; ++c) {
    if (merged_into[c] != c && merged_into[c] != 0) rib_of[c] = rib_of[merged_into[c]];
  }

  out.ribs.resize(kept.size());
  for (std::size_t r = 0; r < kept.size(); ++r) {
    out.ribs[r].rib_number = static_cast<int>(r + 1);
    out.ribs[r].mask.grid = mask.grid;
    out.ribs[r].mask.data.assign(mask.data.size(), 0);
  }
  for (std::size_t v = 0; v < comps.data.size(); ++v) {
    const auto c = comps.data[v];
    if (!c || rib_of[c] == 0) continue;
    out.ribs[rib_of[c] - 1].mask.data[v] = 1;
  }
  return out;
}

}  // namespace ctseg
