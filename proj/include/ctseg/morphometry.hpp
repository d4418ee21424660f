// Cohort morphometry: per-structure volume and mean attenuation from a
// (CT, label map) pair, plausibility filtering against the registry
// cutoffs, batch extraction over a cohort manifest, and the aging analysis
// (Spearman vs. age, age-quartile Kruskal-Wallis with pairwise post-hoc
// rank-sum tests, all flagged at the Bonferroni threshold).

#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ctseg/core.hpp"
#include "ctseg/nifti.hpp"
#include "ctseg/parallel.hpp"
#include "ctseg/resample.hpp"
#include "ctseg/stats.hpp"
#include "ctseg/taxonomy.hpp"

namespace ctseg {

enum class Sex { male, female, unknown };

inline std::string_view sex_name(Sex s) {
  switch (s) {
    case Sex::male: return "male";
    case Sex::female: return "female";
    case Sex::unknown: return "unknown";
  }
  return "unknown";
}

inline Sex parse_sex(std::string_view s) {
  if (s == "male" || s == "m" || s == "M") return Sex::male;
  if (s == "female" || s == "f" || s == "F") return Sex::female;
  if (s == "unknown" || s.empty()) return Sex::unknown;
  throw Error("unrecognized sex value \"" + std::string(s) + "\" (male/female/unknown)");
}

// Voxel count times voxel volume; an absent structure is simply 0 ml.
inline double structure_volume_ml(const LabelMap& map, int id) {
  StructureRegistry::instance().by_id(id);
  std::size_t count = 0;
  const auto want = static_cast<std::uint16_t>(id);
  for (const auto v : map.data) count += v == want;
  return static_cast<double>(count) * map.grid.voxel_volume_mm3() / 1000.0;
}

// Mean HU over the structure's voxels; absent when the structure is empty.
inline std::optional<double> structure_mean_hu(const Volume3D& ct, const LabelMap& map,
                                               int id) {
  StructureRegistry::instance().by_id(id);
  if (!ct.grid.same_geometry(map.grid))
    throw Error("structure_mean_hu: CT and label map are on different grids");
  const auto want = static_cast<std::uint16_t>(id);
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t v = 0; v < map.data.size(); ++v) {
    if (map.data[v] == want) {
      sum += ct.data[v];
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

struct StructureMeasure {
  double volume_ml = 0.0;
  std::optional<double> mean_hu;
  bool valid = false;  // false exactly when volume_ml < registry cutoff
};

struct CohortRecord {
  std::string patient_id;
  double age = 0.0;
  Sex sex = Sex::unknown;
  std::map<int, StructureMeasure> per_structure;
};

// Applies the plausibility rule: a structure fails when its volume is
// strictly below the cutoff ("too small to be anatomically plausible");
// boundary equality passes. Idempotent.
inline void plausibility_filter(CohortRecord& record, const StructureRegistry& registry) {
  for (auto& [id, m] : record.per_structure) {
    m.valid = m.volume_ml >= registry.by_id(id).cutoff_ml && !(m.volume_ml < 0);
  }
}

// Measures every registered structure on one (CT, label map) pair. Mean HU
// is computed on the native grid of the pair; when the grids differ, the
// labels are resampled to the CT grid (nearest) to avoid interpolating HU.
inline CohortRecord extract_record(const Volume3D& ct, const LabelMap& seg_in,
                                   std::string patient_id, double age, Sex sex,
                                   const StructureRegistry& registry) {
  const LabelMap* seg = &seg_in;
  LabelMap resampled;
  if (!seg_in.grid.same_geometry(ct.grid)) {
    resampled = resample_labels(seg_in, ct.grid);
    seg = &resampled;
  }
  CohortRecord rec;
  rec.patient_id = std::move(patient_id);
  rec.age = age;
  rec.sex = sex;

  const double voxel_ml = seg->grid.voxel_volume_mm3() / 1000.0;
  std::vector<std::size_t> counts(kMaxStructureId + 1, 0);
  std::vector<double> sums(kMaxStructureId + 1, 0.0);
  for (std::size_t v = 0; v < seg->data.size(); ++v) {
    const auto label = seg->data[v];
    if (!label) continue;
    ++counts[label];
    sums[label] += ct.data[v];
  }
  for (const auto& entry : registry.entries()) {
    StructureMeasure m;
    const auto c = counts[static_cast<std::size_t>(entry.id)];
    m.volume_ml = static_cast<double>(c) * voxel_ml;
    if (c) m.mean_hu = sums[static_cast<std::size_t>(entry.id)] / static_cast<double>(c);
    rec.per_structure[entry.id] = m;
  }
  plausibility_filter(rec, registry);
  return rec;
}

struct CohortCase {
  std::string patient_id;
  std::string ct_path;
  std::string seg_path;
  double age = 0.0;
  Sex sex = Sex::unknown;
};

struct SkipEntry {
  std::string patient_id;
  std::string reason;
};

struct CohortResult {
  std::vector<CohortRecord> records;
  std::vector<SkipEntry> skipped;
};

// Loads and measures each case; a failing case lands in the skip report
// and never aborts the rest of the cohort.
inline CohortResult cohort_extract(const std::vector<CohortCase>& cases,
                                   const StructureRegistry& registry, int threads = 1) {
  {
    std::map<std::string, int> seen;
    for (const auto& c : cases) {
      if (++seen[c.patient_id] > 1)
        throw Error("cohort_extract: duplicate patient_id \"" + c.patient_id + "\"");
    }
  }
  std::vector<std::optional<CohortRecord>> slots(cases.size());
  std::vector<std::optional<SkipEntry>> errors(cases.size());
  parallel_for(cases.size(), threads, [&](std::size_t i) {
    const auto& c = cases[i];
    try {
      const auto ct = load_volume(c.ct_path);
      const auto seg = load_labelmap(c.seg_path);
      slots[i] = extract_record(ct, seg, c.patient_id, c.age, c.sex, registry);
    } catch (const std::exception& e) {
      errors[i] = SkipEntry{c.patient_id, e.what()};
    }
  });
  CohortResult out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (slots[i]) out.records.push_back(std::move(*slots[i]));
    if (errors[i]) out.skipped.push_back(std::move(*errors[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aging analysis
// ---------------------------------------------------------------------------

// Quartile pairs tested post hoc, indices into Q1..Q4.
inline constexpr std::array<std::pair<int, int>, 6> kQuartilePairs = {
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

struct QuantityAging {
  std::size_t n = 0;  // valid observations used
  std::optional<stats::SpearmanResult> spearman;
  std::optional<stats::TestResult> kruskal_wallis;
  std::array<std::optional<double>, 6> posthoc_p;  // kQuartilePairs order
  bool spearman_significant = false;
  bool kw_significant = false;
  std::string skip_reason;  // nonempty when the quantity was not analyzed
};

struct StructureAging {
  QuantityAging volume;
  QuantityAging attenuation;
};

struct AgingReport {
  std::size_t n_records = 0;
  stats::QuartileScheme quartiles;
  std::map<int, StructureAging> per_structure;
};

namespace detail {

inline QuantityAging analyze_quantity(const std::vector<double>& ages,
                                      const std::vector<double>& values,
                                      const stats::QuartileScheme& scheme,
                                      std::size_t min_n) {
  QuantityAging out;
  out.n = values.size();
  if (values.size() < min_n) {
    out.skip_reason = strfmt("insufficient valid records (%zu < %zu)", values.size(), min_n);
    return out;
  }
  try {
    out.spearman = stats::spearman(ages, values);
    out.spearman_significant = stats::bonferroni_significant(out.spearman->p_value);
  } catch (const Error& e) {
    out.skip_reason = e.what();
    return out;
  }
  std::array<std::vector<double>, 4> by_quartile;
  for (std::size_t i = 0; i < values.size(); ++i)
    by_quartile[static_cast<std::size_t>(stats::quartile_of(scheme, ages[i]))].push_back(values[i]);
  std::vector<std::vector<double>> groups;
  for (auto& g : by_quartile) {
    if (!g.empty()) groups.push_back(g);
  }
  if (groups.size() >= 2) {
    out.kruskal_wallis = stats::kruskal_wallis(groups);
    out.kw_significant = stats::bonferroni_significant(out.kruskal_wallis->p_value);
  }
  for (std::size_t p = 0; p < kQuartilePairs.size(); ++p) {
    const auto& ga = by_quartile[static_cast<std::size_t>(kQuartilePairs[p].first)];
    const auto& gb = by_quartile[static_cast<std::size_t>(kQuartilePairs[p].second)];
    if (ga.empty() || gb.empty()) continue;
    out.posthoc_p[p] = stats::mann_whitney_u(ga, gb).p_value;
  }
  return out;
}

}  // namespace detail

// Runs the per-structure aging statistics over a cohort. Only records whose
// plausibility flag is set contribute to a structure; per structure the
// sample size used is reported, and structures (or quantities) that cannot
// be analyzed are skipped with a reason instead of failing the run.
inline AgingReport aging_analysis(std::vector<CohortRecord> records,
                                  const StructureRegistry& registry,
                                  std::size_t min_n = 8) {
  if (records.size() < min_n)
    throw Error(detail::strfmt("aging_analysis: need at least %zu records, got %zu", min_n,
                               records.size()));
  std::sort(records.begin(), records.end(),
            [](const CohortRecord& a, const CohortRecord& b) {
              return a.patient_id < b.patient_id;
            });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].patient_id == records[i - 1].patient_id)
      throw Error("aging_analysis: duplicate patient_id \"" + records[i].patient_id + "\"");
  }
  AgingReport report;
  report.n_records = records.size();
  std::vector<double> all_ages;
  all_ages.reserve(records.size());
  for (const auto& r : records) all_ages.push_back(r.age);
  report.quartiles = stats::quartile_split(all_ages);

  for (const auto& entry : registry.entries()) {
    StructureAging aging;
    std::vector<double> ages_vol, volumes, ages_hu, hus;
    for (const auto& r : records) {
      const auto it = r.per_structure.find(entry.id);
      if (it == r.per_structure.end() || !it->second.valid) continue;
      ages_vol.push_back(r.age);
      volumes.push_back(it->second.volume_ml);
      if (it->second.mean_hu) {
        ages_hu.push_back(r.age);
        hus.push_back(*it->second.mean_hu);
      }
    }
    aging.volume = detail::analyze_quantity(ages_vol, volumes, report.quartiles, min_n);
    aging.attenuation = detail::analyze_quantity(ages_hu, hus, report.quartiles, min_n);
    report.per_structure[entry.id] = std::move(aging);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Manifest and cohort-table CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace detail

// Manifest format: header "patient_id,ct_path,seg_path,age,sex", one case
// per row. Relative paths are taken as-is (resolve against the cwd).
inline std::vector<CohortCase> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest: " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty manifest");
  const auto header = detail::split_csv_line(line);
  const std::vector<std::string> expected = {"patient_id", "ct_path", "seg_path", "age", "sex"};
  if (header != expected)
    throw Error(path + ": manifest header must be \"patient_id,ct_path,seg_path,age,sex\"");
  std::vector<CohortCase> cases;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 5)
      throw Error(detail::strfmt("%s:%zu: expected 5 fields, got %zu", path.c_str(), line_no,
                                 f.size()));
    CohortCase c;
    c.patient_id = f[0];
    c.ct_path = f[1];
    c.seg_path = f[2];
    try {
      c.age = std::stod(f[3]);
    } catch (const std::exception&) {
      throw Error(detail::strfmt("%s:%zu: invalid age \"%s\"", path.c_str(), line_no,
                                 f[3].c_str()));
    }
    c.sex = parse_sex(f[4]);
    cases.push_back(std::move(c));
  }
  return cases;
}

// One row per patient; per structure (registry ID order) three columns:
// <name>_volume_ml, <name>_mean_hu (empty when absent) and <name>_valid.
inline std::string cohort_csv(const std::vector<CohortRecord>& records,
                              const StructureRegistry& registry) {
  std::ostringstream out;
  out << "patient_id,age,sex";
  auto column_name = [](const std::string& name) {
    std::string c = name;
    for (auto& ch : c) {
      if (ch == ' ') ch = '_';
    }
    return c;
  };
  for (const auto& e : registry.entries()) {
    const auto c = column_name(e.name);
    out << ',' << c << "_volume_ml" << ',' << c << "_mean_hu" << ',' << c << "_valid";
  }
  out << '\n';
  char buf[64];
  for (const auto& r : records) {
    out << r.patient_id << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.age);
    out << buf << ',' << sex_name(r.sex);
    for (const auto& e : registry.entries()) {
      const auto it = r.per_structure.find(e.id);
      if (it == r.per_structure.end()) {
        out << ",,,0";
        continue;
      }
      std::snprintf(buf, sizeof(buf), "%.17g", it->second.volume_ml);
      out << ',' << buf << ',';
      if (it->second.mean_hu) {
        std::snprintf(buf, sizeof(buf), "%.17g", *it->second.mean_hu);
        out << buf;
      }
      out << ',' << (it->second.valid ? '1' : '0');
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace ctseg
