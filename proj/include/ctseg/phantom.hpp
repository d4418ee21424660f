// Synthetic (CT, label map) pairs with analytically known volumes and
// attenuations, and synthetic cohorts with planted age trends. These are
// the oracles for the measurement and statistics pipeline: rasterization
// is voxel-center-in-geometry (no anti-aliasing), so the volume error of a
// shape is bounded by its surface-voxel count, and the CT background is
// -1024 HU to match the resampler's fill.
//
// Everything is deterministic: voxel noise is drawn from
// Rng::stream(seed, voxel_index) and per-case values from
// Rng::stream(seed, case_index), so thread counts cannot change outputs.

#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ctseg/core.hpp"
#include "ctseg/morphometry.hpp"
#include "ctseg/parallel.hpp"
#include "ctseg/rng.hpp"
#include "ctseg/taxonomy.hpp"

namespace ctseg {

enum class ShapeKind { sphere, box };

struct PhantomShape {
  int structure_id = 0;
  ShapeKind kind = ShapeKind::sphere;
  Vec3 center_mm{0, 0, 0};
  double radius_mm = 0;    // sphere
  Vec3 box_size_mm{0, 0, 0};  // box full edge lengths
  double hu = 0;
};

struct PhantomSpec {
  Index3 dims{0, 0, 0};
  Vec3 spacing{1.5, 1.5, 1.5};
  double noise_sd = 0;
  std::uint64_t seed = 0;
  std::vector<PhantomShape> shapes;
};

struct ShapeTruth {
  int structure_id = 0;
  double volume_ml = 0;  // analytic
  double mean_hu = 0;    // noise-free shape attenuation
};

struct PhantomResult {
  Volume3D ct;
  LabelMap labels;
  std::vector<ShapeTruth> truth;
};

namespace detail {

inline bool inside_shape(const PhantomShape& s, const Vec3& p) {
  if (s.kind == ShapeKind::sphere) {
    const double dx = p[0] - s.center_mm[0];
    const double dy = p[1] - s.center_mm[1];
    const double dz = p[2] - s.center_mm[2];
    return dx * dx + dy * dy + dz * dz <= s.radius_mm * s.radius_mm;
  }
  for (int axis = 0; axis < 3; ++axis) {
    const auto a = static_cast<std::size_t>(axis);
    if (std::abs(p[a] - s.center_mm[a]) > 0.5 * s.box_size_mm[a]) return false;
  }
  return true;
}

inline double analytic_volume_mm3(const PhantomShape& s) {
  if (s.kind == ShapeKind::sphere)
    return 4.0 / 3.0 * std::numbers::pi * s.radius_mm * s.radius_mm * s.radius_mm;
  return s.box_size_mm[0] * s.box_size_mm[1] * s.box_size_mm[2];
}

}  // namespace detail

inline PhantomResult generate(const PhantomSpec& spec) {
  Grid grid;
  grid.dims = spec.dims;
  grid.spacing = spec.spacing;
  grid.affine = Affine::diagonal(spec.spacing);
  grid.validate();

  for (const auto& s : spec.shapes) {
    StructureRegistry::instance().by_id(s.structure_id);
    const double half = s.kind == ShapeKind::sphere
                            ? s.radius_mm
                            : 0.5 * std::max({s.box_size_mm[0], s.box_size_mm[1], s.box_size_mm[2]});
    for (int axis = 0; axis < 3; ++axis) {
      const auto a = static_cast<std::size_t>(axis);
      const double lo = s.center_mm[a] - half;
      const double hi = s.center_mm[a] + half;
      const double grid_hi = static_cast<double>(grid.dims[a] - 1) * grid.spacing[a];
      if (lo < -0.5 * grid.spacing[a] || hi > grid_hi + 0.5 * grid.spacing[a])
        throw Error(detail::strfmt(
            "phantom shape for structure %d extends outside the grid on axis %d",
            s.structure_id, axis));
    }
  }

  PhantomResult out;
  out.labels.grid = grid;
  out.labels.data.assign(grid.voxel_count(), 0);
  out.ct.grid = grid;
  out.ct.data.assign(grid.voxel_count(), kAirHu);

  std::vector<double> shape_hu(spec.shapes.size());
  for (std::size_t si = 0; si < spec.shapes.size(); ++si) {
    const auto& s = spec.shapes[si];
    shape_hu[si] = s.hu;
    for (int k = 0; k < grid.dims[2]; ++k) {
      for (int j = 0; j < grid.dims[1]; ++j) {
        for (int i = 0; i < grid.dims[0]; ++i) {
          const Vec3 p = grid.world(i, j, k);
          if (!detail::inside_shape(s, p)) continue;
          const std::size_t idx = grid.index(i, j, k);
          if (out.labels.data[idx] != 0)
            throw Error(detail::strfmt(
                "phantom shapes overlap at voxel (%d, %d, %d) (structures %d and %d)", i, j,
                k, out.labels.data[idx], s.structure_id));
          out.labels.data[idx] = static_cast<std::uint16_t>(s.structure_id);
          out.ct.data[idx] = s.hu;
        }
      }
    }
    ShapeTruth t;
    t.structure_id = s.structure_id;
    t.volume_ml = detail::analytic_volume_mm3(s) / 1000.0;
    t.mean_hu = s.hu;
    out.truth.push_back(t);
  }

  if (spec.noise_sd > 0) {
    for (std::size_t idx = 0; idx < out.ct.data.size(); ++idx) {
      if (out.labels.data[idx] == 0) continue;
      out.ct.data[idx] += spec.noise_sd * Rng::stream(spec.seed, idx).normal();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cohorts with planted trends
// ---------------------------------------------------------------------------

// Linear age trends for one structure: at age a the sphere is generated
// with volume base_volume_ml + volume_slope * a and attenuation
// base_hu + hu_slope * a, plus optional per-case Gaussian jitter.
struct PlantedTrend {
  int structure_id = 0;
  double base_volume_ml = 0;
  double volume_slope_ml_per_year = 0;
  double base_hu = 0;
  double hu_slope_per_year = 0;
  double volume_jitter_ml = 0;
  double hu_jitter = 0;
};

struct PhantomCohortSpec {
  int n_cases = 0;
  Index3 dims{48, 48, 48};
  Vec3 spacing{1.5, 1.5, 1.5};
  double voxel_noise_sd = 0;
  std::uint64_t seed = 0;
  std::vector<PlantedTrend> trends;
};

struct PhantomCohortCase {
  std::string patient_id;
  double age = 0;
  Sex sex = Sex::unknown;
  PhantomResult volumes;
};

// Ages are uniform in [18, 100] (the aging cohort's range). Case c draws
// everything from Rng::stream(seed, c): first the age, then per trend the
// jitters, in declaration order.
inline std::vector<PhantomCohortCase> generate_cohort(const PhantomCohortSpec& spec,
                                                      int threads = 1) {
  if (spec.n_cases < 8) throw Error("generate_cohort: need at least 8 cases");
  if (spec.trends.empty()) throw Error("generate_cohort: no planted trends given");
  std::vector<PhantomCohortCase> cohort(static_cast<std::size_t>(spec.n_cases));
  parallel_for(cohort.size(), threads, [&](std::size_t c) {
    Rng rng = Rng::stream(spec.seed, c);
    PhantomCohortCase item;
    item.patient_id = detail::strfmt("case_%04zu", c);
    item.age = rng.uniform(18.0, 100.0);
    item.sex = c % 2 == 0 ? Sex::male : Sex::female;

    PhantomSpec ps;
    ps.dims = spec.dims;
    ps.spacing = spec.spacing;
    ps.noise_sd = spec.voxel_noise_sd;
    ps.seed = spec.seed ^ (0x9E3779B97F4A7C15ULL * (c + 1));
    const Vec3 extent = {static_cast<double>(spec.dims[0] - 1) * spec.spacing[0],
                         static_cast<double>(spec.dims[1] - 1) * spec.spacing[1],
                         static_cast<double>(spec.dims[2] - 1) * spec.spacing[2]};
    const double stride = extent[0] / static_cast<double>(spec.trends.size());
    for (std::size_t t = 0; t < spec.trends.size(); ++t) {
      const auto& tr = spec.trends[t];
      double volume_ml = tr.base_volume_ml + tr.volume_slope_ml_per_year * item.age;
      if (tr.volume_jitter_ml > 0) volume_ml += tr.volume_jitter_ml * rng.normal();
      double hu = tr.base_hu + tr.hu_slope_per_year * item.age;
      if (tr.hu_jitter > 0) hu += tr.hu_jitter * rng.normal();
      if (volume_ml <= 0)
        throw Error(detail::strfmt(
            "planted volume for structure %d is not positive (%.3f ml) at age %.1f",
            tr.structure_id, volume_ml, item.age));
      PhantomShape shape;
      shape.structure_id = tr.structure_id;
      shape.kind = ShapeKind::sphere;
      shape.radius_mm = std::cbrt(volume_ml * 1000.0 * 3.0 / (4.0 * std::numbers::pi));
      shape.center_mm = {(static_cast<double>(t) + 0.5) * stride, 0.5 * extent[1],
                         0.5 * extent[2]};
      shape.hu = hu;
      ps.shapes.push_back(shape);
    }
    item.volumes = generate(ps);
    cohort[c] = std::move(item);
  });
  return cohort;
}

}  // namespace ctseg
