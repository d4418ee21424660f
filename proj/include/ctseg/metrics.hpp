// Overlap and surface agreement between predicted and reference
// segmentations: Dice and the normalized surface distance (NSD), per-case
// evaluation over the structure registry, bootstrap aggregation across a
// test set and the paired comparison of two prediction runs.
//
// Conventions, fixed for reproducibility:
//  - both masks empty: the metric is absent and excluded from averages
//    (a correctly predicted missing organ should not inflate them);
//    exactly one empty scores 0;
//  - surfaces are foreground voxels with a 6-neighbor background voxel,
//    where the volume edge counts as background;
//  - NSD is the symmetric acceptance fraction
//    (|S_a within tau of S_b| + |S_b within tau of S_a|) / (|S_a| + |S_b|)
//    with strict distance < tau, Euclidean in world mm;
//  - a case's mean is the mean over its present structures, and the
//    overall mean averages those per-case means;
//  - bootstrap resamples cases (the independent units), never structures,
//    after sorting by case ID, so input order cannot change results.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctseg/core.hpp"
#include "ctseg/edt.hpp"
#include "ctseg/labelops.hpp"
#include "ctseg/parallel.hpp"
#include "ctseg/resample.hpp"
#include "ctseg/rng.hpp"
#include "ctseg/stats.hpp"
#include "ctseg/taxonomy.hpp"

namespace ctseg {

inline constexpr double kDefaultNsdTauMm = 3.0;

inline std::optional<double> dice(const BinaryMask& a, const BinaryMask& b) {
  if (!a.grid.same_geometry(b.grid)) throw Error("dice: masks are on different grids");
  std::size_t ca = 0, cb = 0, inter = 0;
  for (std::size_t v = 0; v < a.data.size(); ++v) {
    const bool va = a.data[v] != 0, vb = b.data[v] != 0;
    ca += va;
    cb += vb;
    inter += va && vb;
  }
  if (ca == 0 && cb == 0) return std::nullopt;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(ca + cb);
}

namespace detail {

struct Box {
  Index3 lo{0, 0, 0};
  Index3 hi{-1, -1, -1};  // inclusive; empty when hi < lo
  bool empty() const { return hi[0] < lo[0]; }
};

inline Box bounding_box(const BinaryMask& m) {
  Box box;
  box.lo = {m.grid.dims[0], m.grid.dims[1], m.grid.dims[2]};
  box.hi = {-1, -1, -1};
  for (int k = 0; k < m.grid.dims[2]; ++k) {
    for (int j = 0; j < m.grid.dims[1]; ++j) {
      for (int i = 0; i < m.grid.dims[0]; ++i) {
        if (!m.data[m.grid.index(i, j, k)]) continue;
        box.lo = {std::min(box.lo[0], i), std::min(box.lo[1], j), std::min(box.lo[2], k)};
        box.hi = {std::max(box.hi[0], i), std::max(box.hi[1], j), std::max(box.hi[2], k)};
      }
    }
  }
  return box;
}

inline Box join(const Box& a, const Box& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  Box out;
  for (int axis = 0; axis < 3; ++axis) {
    out.lo[static_cast<std::size_t>(axis)] =
        std::min(a.lo[static_cast<std::size_t>(axis)], b.lo[static_cast<std::size_t>(axis)]);
    out.hi[static_cast<std::size_t>(axis)] =
        std::max(a.hi[static_cast<std::size_t>(axis)], b.hi[static_cast<std::size_t>(axis)]);
  }
  return out;
}

// Boundary voxels: foreground with a 6-neighbor background or volume edge.
inline std::vector<std::uint8_t> surface_voxels(const Grid& grid,
                                                const std::vector<std::uint8_t>& mask) {
  std::vector<std::uint8_t> surf(mask.size(), 0);
  const auto& dims = grid.dims;
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        const std::size_t idx = grid.index(i, j, k);
        if (!mask[idx]) continue;
        bool boundary = i == 0 || i == dims[0] - 1 || j == 0 || j == dims[1] - 1 ||
                        k == 0 || k == dims[2] - 1;
        if (!boundary) {
          boundary = !mask[grid.index(i - 1, j, k)] || !mask[grid.index(i + 1, j, k)] ||
                     !mask[grid.index(i, j - 1, k)] || !mask[grid.index(i, j + 1, k)] ||
                     !mask[grid.index(i, j, k - 1)] || !mask[grid.index(i, j, k + 1)];
        }
        surf[idx] = boundary;
      }
    }
  }
  return surf;
}

// Copies the joint bounding box (plus a one-voxel margin, clamped to the
// volume) of both masks; surfaces and distances inside the crop equal
// those of the full volume, because every foreground voxel stays interior
// to the crop except where it already touched the volume edge.
struct CroppedPair {
  Grid grid;
  std::vector<std::uint8_t> a, b;
};

inline CroppedPair crop_pair(const BinaryMask& a, const BinaryMask& b) {
  const Box box = join(bounding_box(a), bounding_box(b));
  CroppedPair out;
  Index3 lo, hi;
  for (int axis = 0; axis < 3; ++axis) {
    const auto ax = static_cast<std::size_t>(axis);
    lo[ax] = std::max(0, box.lo[ax] - 1);
    hi[ax] = std::min(a.grid.dims[ax] - 1, box.hi[ax] + 1);
    out.grid.dims[ax] = hi[ax] - lo[ax] + 1;
    out.grid.spacing[ax] = a.grid.spacing[ax];
  }
  out.grid.affine = Affine::diagonal(out.grid.spacing);
  out.a.resize(out.grid.voxel_count());
  out.b.resize(out.grid.voxel_count());
  for (int k = 0; k < out.grid.dims[2]; ++k) {
    for (int j = 0; j < out.grid.dims[1]; ++j) {
      for (int i = 0; i < out.grid.dims[0]; ++i) {
        const std::size_t src = a.grid.index(i + lo[0], j + lo[1], k + lo[2]);
        const std::size_t dst = out.grid.index(i, j, k);
        out.a[dst] = a.data[src];
        out.b[dst] = b.data[src];
      }
    }
  }
  return out;
}

}  // namespace detail

// Normalized surface distance at tolerance tau (mm), symmetric form with
// strict inequality. Absent when both masks are empty, 0 when exactly one is.
inline std::optional<double> nsd(const BinaryMask& a, const BinaryMask& b,
                                 double tau_mm = kDefaultNsdTauMm) {
  if (!a.grid.same_geometry(b.grid)) throw Error("nsd: masks are on different grids");
  if (!(tau_mm > 0)) throw Error("nsd: tau must be positive");
  const std::size_t ca = a.cardinality(), cb = b.cardinality();
  if (ca == 0 && cb == 0) return std::nullopt;
  if (ca == 0 || cb == 0) return 0.0;

  const auto crop = detail::crop_pair(a, b);
  const auto surf_a = detail::surface_voxels(crop.grid, crop.a);
  const auto surf_b = detail::surface_voxels(crop.grid, crop.b);
  const auto dist_to_a = squared_edt(crop.grid, surf_a);
  const auto dist_to_b = squared_edt(crop.grid, surf_b);

  const double tau2 = tau_mm * tau_mm;
  std::size_t na = 0, nb = 0, hit_a = 0, hit_b = 0;
  for (std::size_t v = 0; v < surf_a.size(); ++v) {
    if (surf_a[v]) {
      ++na;
      hit_a += dist_to_b[v] < tau2;
    }
    if (surf_b[v]) {
      ++nb;
      hit_b += dist_to_a[v] < tau2;
    }
  }
  return static_cast<double>(hit_a + hit_b) / static_cast<double>(na + nb);
}

struct StructureMetrics {
  std::optional<double> dice;
  std::optional<double> nsd;
  bool gt_present = false;
  bool pred_present = false;
};

struct CaseMetrics {
  std::string case_id;
  std::map<int, StructureMetrics> per_structure;

  std::optional<double> mean_dice() const {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& [id, m] : per_structure) {
      (void)id;
      if (m.dice) {
        sum += *m.dice;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }

  std::optional<double> mean_nsd() const {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& [id, m] : per_structure) {
      (void)id;
      if (m.nsd) {
        sum += *m.nsd;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
};

// Dice and NSD for every requested structure (default: all registered).
// If the prediction sits on a different grid it is first resampled to the
// ground-truth grid with nearest neighbor.
inline CaseMetrics evaluate_case(const LabelMap& gt, const LabelMap& pred_in,
                                 const StructureRegistry& registry,
                                 double tau_mm = kDefaultNsdTauMm,
                                 std::vector<int> ids = {}, int threads = 1) {
  gt.validate();
  pred_in.validate();
  const LabelMap* pred = &pred_in;
  LabelMap resampled;
  if (!pred_in.grid.same_geometry(gt.grid)) {
    resampled = resample_labels(pred_in, gt.grid, threads);
    pred = &resampled;
  }
  if (ids.empty()) ids = registry.all_ids();

  // One pass over both volumes collects the per-label counts Dice needs.
  std::vector<std::size_t> gt_count(kMaxStructureId + 1, 0);
  std::vector<std::size_t> pred_count(kMaxStructureId + 1, 0);
  std::vector<std::size_t> inter_count(kMaxStructureId + 1, 0);
  for (std::size_t v = 0; v < gt.data.size(); ++v) {
    const auto g = gt.data[v];
    const auto p = pred->data[v];
    if (g) ++gt_count[g];
    if (p) ++pred_count[p];
    if (g && g == p) ++inter_count[g];
  }

  CaseMetrics out;
  for (int id : ids) {
    registry.by_id(id);
    out.per_structure.emplace(id, StructureMetrics{});
  }
  std::vector<int> todo(ids.begin(), ids.end());
  std::vector<StructureMetrics> results(todo.size());
  parallel_for(todo.size(), threads, [&](std::size_t t) {
    const int id = todo[t];
    StructureMetrics m;
    const std::size_t cg = gt_count[static_cast<std::size_t>(id)];
    const std::size_t cp = pred_count[static_cast<std::size_t>(id)];
    m.gt_present = cg > 0;
    m.pred_present = cp > 0;
    if (cg == 0 && cp == 0) {
      results[t] = m;
      return;
    }
    m.dice = 2.0 * static_cast<double>(inter_count[static_cast<std::size_t>(id)]) /
             static_cast<double>(cg + cp);
    const auto mask_gt = extract_mask(gt, id);
    const auto mask_pred = extract_mask(*pred, id);
    m.nsd = nsd(mask_gt, mask_pred, tau_mm);
    results[t] = m;
  });
  for (std::size_t t = 0; t < todo.size(); ++t) out.per_structure[todo[t]] = results[t];
  return out;
}

struct MeanCi {
  std::optional<double> mean;
  std::optional<double> ci_lower;
  std::optional<double> ci_upper;
  std::size_t n = 0;  // observations contributing to the mean
};

struct AggregateReport {
  std::map<int, MeanCi> dice_by_structure;
  std::map<int, MeanCi> nsd_by_structure;
  MeanCi overall_dice;
  MeanCi overall_nsd;
  std::size_t n_cases = 0;
};

namespace detail {

// Per-structure / per-case value matrix used by the bootstrap loops.
struct MetricTable {
  std::vector<int> ids;
  std::size_t n_cases = 0;
  // value[s * n_cases + c], present[s * n_cases + c]
  std::vector<double> value;
  std::vector<std::uint8_t> present;
  std::vector<double> case_mean;          // mean over present structures
  std::vector<std::uint8_t> case_defined;

  double structure_mean(std::size_t s, const std::vector<std::size_t>& case_idx,
                        std::size_t* count_out = nullptr) const {
    double sum = 0;
    std::size_t cnt = 0;
    for (const std::size_t c : case_idx) {
      if (present[s * n_cases + c]) {
        sum += value[s * n_cases + c];
        ++cnt;
      }
    }
    if (count_out) *count_out = cnt;
    return cnt ? sum / static_cast<double>(cnt) : 0.0;
  }

  double overall_mean(const std::vector<std::size_t>& case_idx,
                      std::size_t* count_out = nullptr) const {
    double sum = 0;
    std::size_t cnt = 0;
    for (const std::size_t c : case_idx) {
      if (case_defined[c]) {
        sum += case_mean[c];
        ++cnt;
      }
    }
    if (count_out) *count_out = cnt;
    return cnt ? sum / static_cast<double>(cnt) : 0.0;
  }
};

inline MetricTable build_table(const std::vector<CaseMetrics>& cases, bool use_dice) {
  MetricTable t;
  t.n_cases = cases.size();
  std::map<int, bool> id_union;
  for (const auto& c : cases) {
    for (const auto& [id, m] : c.per_structure) {
      (void)m;
      id_union[id] = true;
    }
  }
  for (const auto& [id, flag] : id_union) {
    (void)flag;
    t.ids.push_back(id);
  }
  t.value.assign(t.ids.size() * t.n_cases, 0.0);
  t.present.assign(t.ids.size() * t.n_cases, 0);
  t.case_mean.assign(t.n_cases, 0.0);
  t.case_defined.assign(t.n_cases, 0);
  for (std::size_t c = 0; c < cases.size(); ++c) {
    double sum = 0;
    std::size_t cnt = 0;
    for (std::size_t s = 0; s < t.ids.size(); ++s) {
      const auto it = cases[c].per_structure.find(t.ids[s]);
      if (it == cases[c].per_structure.end()) continue;
      const auto& opt = use_dice ? it->second.dice : it->second.nsd;
      if (opt) {
        t.value[s * t.n_cases + c] = *opt;
        t.present[s * t.n_cases + c] = 1;
        sum += *opt;
        ++cnt;
      }
    }
    if (cnt) {
      t.case_mean[c] = sum / static_cast<double>(cnt);
      t.case_defined[c] = 1;
    }
  }
  return t;
}

}  // namespace detail

// Means with 95% percentile-bootstrap CIs, resampling cases with
// replacement. Iteration i draws indices from Rng::stream(seed, i), so the
// result is independent of thread count.
inline AggregateReport aggregate(std::vector<CaseMetrics> cases, int iterations = 10000,
                                 std::uint64_t seed = 0, int threads = 1,
                                 double level = 0.95) {
  if (cases.empty()) throw Error("aggregate: no cases");
  if (iterations < 1) throw Error("aggregate: iterations must be >= 1");
  std::sort(cases.begin(), cases.end(),
            [](const CaseMetrics& a, const CaseMetrics& b) { return a.case_id < b.case_id; });
  for (std::size_t i = 1; i < cases.size(); ++i) {
    if (cases[i].case_id == cases[i - 1].case_id)
      throw Error("aggregate: duplicate case ID \"" + cases[i].case_id + "\"");
  }
  const auto dice_table = detail::build_table(cases, true);
  const auto nsd_table = detail::build_table(cases, false);
  const std::size_t n_cases = cases.size();
  const std::size_t n_structs = dice_table.ids.size();

  AggregateReport report;
  report.n_cases = n_cases;
  std::vector<std::size_t> identity(n_cases);
  for (std::size_t c = 0; c < n_cases; ++c) identity[c] = c;

  for (std::size_t s = 0; s < n_structs; ++s) {
    for (const auto* table : {&dice_table, &nsd_table}) {
      std::size_t cnt = 0;
      const double mean = table->structure_mean(s, identity, &cnt);
      MeanCi mc;
      mc.n = cnt;
      if (cnt) mc.mean = mean;
      auto& dest = table == &dice_table ? report.dice_by_structure : report.nsd_by_structure;
      dest[table->ids[s]] = mc;
    }
  }
  {
    std::size_t cnt = 0;
    const double mean = dice_table.overall_mean(identity, &cnt);
    report.overall_dice.n = cnt;
    if (cnt) report.overall_dice.mean = mean;
    cnt = 0;
    const double mean_n = nsd_table.overall_mean(identity, &cnt);
    report.overall_nsd.n = cnt;
    if (cnt) report.overall_nsd.mean = mean_n;
  }

  // Bootstrap: one shared sequence of case draws feeds every statistic.
  const auto its = static_cast<std::size_t>(iterations);
  std::vector<double> boot_overall_dice(its), boot_overall_nsd(its);
  std::vector<std::uint8_t> boot_overall_dice_def(its), boot_overall_nsd_def(its);
  std::vector<double> boot_struct_dice(its * n_structs), boot_struct_nsd(its * n_structs);
  std::vector<std::uint8_t> boot_struct_dice_def(its * n_structs),
      boot_struct_nsd_def(its * n_structs);

  parallel_for(its, threads, [&](std::size_t it) {
    Rng rng = Rng::stream(seed, it);
    std::vector<std::size_t> draw(n_cases);
    for (std::size_t c = 0; c < n_cases; ++c) draw[c] = rng.bounded(n_cases);
    std::size_t cnt = 0;
    boot_overall_dice[it] = dice_table.overall_mean(draw, &cnt);
    boot_overall_dice_def[it] = cnt > 0;
    boot_overall_nsd[it] = nsd_table.overall_mean(draw, &cnt);
    boot_overall_nsd_def[it] = cnt > 0;
    for (std::size_t s = 0; s < n_structs; ++s) {
      boot_struct_dice[it * n_structs + s] = dice_table.structure_mean(s, draw, &cnt);
      boot_struct_dice_def[it * n_structs + s] = cnt > 0;
      boot_struct_nsd[it * n_structs + s] = nsd_table.structure_mean(s, draw, &cnt);
      boot_struct_nsd_def[it * n_structs + s] = cnt > 0;
    }
  });

  const double alpha = (1.0 - level) / 2.0;
  auto finish = [&](MeanCi& mc, std::vector<double>&& samples) {
    if (!mc.mean || samples.empty()) return;
    std::sort(samples.begin(), samples.end());
    mc.ci_lower = stats::percentile_sorted(samples, alpha);
    mc.ci_upper = stats::percentile_sorted(samples, 1.0 - alpha);
  };

  {
    std::vector<double> vals;
    vals.reserve(its);
    for (std::size_t it = 0; it < its; ++it)
      if (boot_overall_dice_def[it]) vals.push_back(boot_overall_dice[it]);
    finish(report.overall_dice, std::move(vals));
    vals.clear();
    for (std::size_t it = 0; it < its; ++it)
      if (boot_overall_nsd_def[it]) vals.push_back(boot_overall_nsd[it]);
    finish(report.overall_nsd, std::move(vals));
  }
  for (std::size_t s = 0; s < n_structs; ++s) {
    std::vector<double> vals;
    vals.reserve(its);
    for (std::size_t it = 0; it < its; ++it)
      if (boot_struct_dice_def[it * n_structs + s])
        vals.push_back(boot_struct_dice[it * n_structs + s]);
    finish(report.dice_by_structure[dice_table.ids[s]], std::move(vals));
    vals.clear();
    for (std::size_t it = 0; it < its; ++it)
      if (boot_struct_nsd_def[it * n_structs + s])
        vals.push_back(boot_struct_nsd[it * n_structs + s]);
    finish(report.nsd_by_structure[nsd_table.ids[s]], std::move(vals));
  }
  return report;
}

struct RunComparison {
  stats::TestResult dice_test;
  stats::TestResult nsd_test;
  double mean_dice_a = 0, mean_dice_b = 0;
  double mean_nsd_a = 0, mean_nsd_b = 0;
  std::size_t n_pairs = 0;
};

// Two-sided paired Wilcoxon signed-rank on per-case mean Dice (and NSD)
// between two runs over the same cases.
inline RunComparison compare_runs(const std::vector<CaseMetrics>& run_a,
                                  const std::vector<CaseMetrics>& run_b) {
  std::map<std::string, const CaseMetrics*> by_id_a, by_id_b;
  for (const auto& c : run_a) {
    if (!by_id_a.emplace(c.case_id, &c).second)
      throw Error("compare_runs: duplicate case ID in run A: " + c.case_id);
  }
  for (const auto& c : run_b) {
    if (!by_id_b.emplace(c.case_id, &c).second)
      throw Error("compare_runs: duplicate case ID in run B: " + c.case_id);
  }
  if (by_id_a.size() != by_id_b.size())
    throw Error("compare_runs: runs cover different case sets");
  std::vector<double> d_dice, d_nsd;
  RunComparison out;
  for (const auto& [id, ca] : by_id_a) {
    const auto it = by_id_b.find(id);
    if (it == by_id_b.end())
      throw Error("compare_runs: case \"" + id + "\" missing from run B");
    const auto ma = ca->mean_dice(), mb = it->second->mean_dice();
    const auto na = ca->mean_nsd(), nb = it->second->mean_nsd();
    if (!ma || !mb || !na || !nb) continue;  // nothing present on one side
    d_dice.push_back(*ma - *mb);
    d_nsd.push_back(*na - *nb);
    out.mean_dice_a += *ma;
    out.mean_dice_b += *mb;
    out.mean_nsd_a += *na;
    out.mean_nsd_b += *nb;
    ++out.n_pairs;
  }
  if (out.n_pairs == 0) throw Error("compare_runs: no comparable case pairs");
  const auto n = static_cast<double>(out.n_pairs);
  out.mean_dice_a /= n;
  out.mean_dice_b /= n;
  out.mean_nsd_a /= n;
  out.mean_nsd_b /= n;
  out.dice_test = stats::wilcoxon_signed_rank(d_dice);
  out.nsd_test = stats::wilcoxon_signed_rank(d_nsd);
  return out;
}

}  // namespace ctseg
