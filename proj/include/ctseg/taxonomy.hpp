// Registry of the 104 segmented structures: IDs, canonical names,
// anatomical groups, the five-part model split, volume plausibility cutoffs
// in ml and the 13-structure abdominal comparison subset.
//
// The table is embedded below as CSV text; data/structures.csv in the repo
// holds the identical bytes (a test asserts this) and `taxonomy dump`
// exports it. IDs are 1..104 in listing order; the part assignment is
// contiguous by ID (1-21, 22-42, 43-63, 64-84, 85-104), giving four parts
// of 21 classes and one of 20.
//
// Naming notes: canonical names are ASCII ("clavicula left"); the accented
// spelling and the "iliac vena" variants are accepted as lookup aliases.

#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ctseg/core.hpp"

namespace ctseg {

enum class Group { organ, bone, muscle, vessel, other };

inline std::string_view group_name(Group g) {
  switch (g) {
    case Group::organ: return "organ";
    case Group::bone: return "bone";
    case Group::muscle: return "muscle";
    case Group::vessel: return "vessel";
    case Group::other: return "other";
  }
  return "other";
}

struct StructureEntry {
  int id = 0;
  std::string name;
  Group group = Group::other;
  int part = 0;
  double cutoff_ml = 0.0;
  bool btcv = false;
};

namespace taxonomy_detail {

inline constexpr std::string_view kRegistryCsv =
    R"(id,name,group,part,cutoff_ml,btcv
1,spleen,organ,1,40,1
2,kidney right,organ,1,50,1
3,kidney left,organ,1,30,1
4,gallbladder,organ,1,1,1
5,liver,organ,1,100,1
6,stomach,organ,1,70,1
7,aorta,vessel,1,80,1
8,inferior vena cava,vessel,1,20,1
9,portal vein and splenic vein,vessel,1,1,1
10,pancreas,organ,1,20,1
11,adrenal gland right,organ,1,1,1
12,adrenal gland left,organ,1,1,1
13,lung upper lobe left,organ,1,100,0
14,lung lower lobe left,organ,1,100,0
15,lung upper lobe right,organ,1,100,0
16,lung middle lobe right,organ,1,100,0
17,lung lower lobe right,organ,1,100,0
18,vertebrae L5,bone,1,40,0
19,vertebrae L4,bone,1,40,0
20,vertebrae L3,bone,1,30,0
21,vertebrae L2,bone,1,30,0
22,vertebrae L1,bone,2,30,0
23,vertebrae T12,bone,2,20,0
24,vertebrae T11,bone,2,20,0
25,vertebrae T10,bone,2,20,0
26,vertebrae T9,bone,2,20,0
27,vertebrae T8,bone,2,20,0
28,vertebrae T7,bone,2,10,0
29,vertebrae T6,bone,2,10,0
30,vertebrae T5,bone,2,10,0
31,vertebrae T4,bone,2,10,0
32,vertebrae T3,bone,2,10,0
33,vertebrae T2,bone,2,10,0
34,vertebrae T1,bone,2,10,0
35,vertebrae C7,bone,2,10,0
36,vertebrae C6,bone,2,1,0
37,vertebrae C5,bone,2,1,0
38,vertebrae C4,bone,2,1,0
39,vertebrae C3,bone,2,1,0
40,vertebrae C2,bone,2,1,0
41,vertebrae C1,bone,2,1,0
42,esophagus,organ,2,20,1
43,trachea,organ,3,20,0
44,heart myocardium,organ,3,70,0
45,heart atrium left,organ,3,40,0
46,heart ventricle left,organ,3,60,0
47,heart atrium right,organ,3,50,0
48,heart ventricle right,organ,3,80,0
49,pulmonary artery,vessel,3,30,0
50,brain,organ,3,1,0
51,iliac artery left,vessel,3,10,0
52,iliac artery right,vessel,3,10,0
53,iliac vein left,vessel,3,10,0
54,iliac vein right,vessel,3,10,0
55,small bowel,organ,3,100,0
56,duodenum,organ,3,20,0
57,colon,organ,3,100,0
58,rib left 1,bone,3,1,0
59,rib left 2,bone,3,10,0
60,rib left 3,bone,3,10,0
61,rib left 4,bone,3,10,0
62,rib left 5,bone,3,10,0
63,rib left 6,bone,3,10,0
64,rib left 7,bone,4,10,0
65,rib left 8,bone,4,10,0
66,rib left 9,bone,4,10,0
67,rib left 10,bone,4,10,0
68,rib left 11,bone,4,1,0
69,rib left 12,bone,4,1,0
70,rib right 1,bone,4,1,0
71,rib right 2,bone,4,10,0
72,rib right 3,bone,4,10,0
73,rib right 4,bone,4,10,0
74,rib right 5,bone,4,10,0
75,rib right 6,bone,4,10,0
76,rib right 7,bone,4,10,0
77,rib right 8,bone,4,10,0
78,rib right 9,bone,4,10,0
79,rib right 10,bone,4,10,0
80,rib right 11,bone,4,1,0
81,rib right 12,bone,4,1,0
82,humerus left,bone,4,30,0
83,humerus right,bone,4,20,0
84,scapula left,bone,4,60,0
85,scapula right,bone,5,60,0
86,clavicula left,bone,5,20,0
87,clavicula right,bone,5,20,0
88,femur left,bone,5,90,0
89,femur right,bone,5,90,0
90,hip left,bone,5,100,0
91,hip right,bone,5,100,0
92,sacrum,bone,5,100,0
93,face,organ,5,1,0
94,gluteus maximus left,muscle,5,100,0
95,gluteus maximus right,muscle,5,100,0
96,gluteus medius left,muscle,5,100,0
97,gluteus medius right,muscle,5,100,0
98,gluteus minimus left,muscle,5,30,0
99,gluteus minimus right,muscle,5,30,0
100,autochthon left,muscle,5,100,0
101,autochthon right,muscle,5,100,0
102,iliopsoas left,muscle,5,100,0
103,iliopsoas right,muscle,5,100,0
104,urinary bladder,organ,5,40,0
)";

// Lowercase, underscores to spaces, runs of spaces collapsed, and the
// accented "í" folded to "i" so the paper's alternate spellings resolve.
inline std::string normalize_name(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    unsigned char ch = static_cast<unsigned char>(raw[i]);
    if (ch == 0xC3 && i + 1 < raw.size() &&
        (static_cast<unsigned char>(raw[i + 1]) == 0xAD ||
         static_cast<unsigned char>(raw[i + 1]) == 0x8D)) {
      out.push_back('i');  // UTF-8 í / Í
      ++i;
      continue;
    }
    if (ch == '_') ch = ' ';
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<unsigned char>(ch - 'A' + 'a');
    if (ch == ' ' && (out.empty() || out.back() == ' ')) continue;
    out.push_back(static_cast<char>(ch));
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace taxonomy_detail

class StructureRegistry {
public:
  static const StructureRegistry& instance() {
    static const StructureRegistry registry;
    return registry;
  }

  static std::string_view csv() { return taxonomy_detail::kRegistryCsv; }

  const std::vector<StructureEntry>& entries() const { return entries_; }

  const StructureEntry& by_id(int id) const {
    if (id < 1 || id > static_cast<int>(entries_.size()))
      throw Error(detail::strfmt("unknown structure ID %d (valid range 1..%zu)", id,
                                 entries_.size()));
    return entries_[static_cast<std::size_t>(id - 1)];
  }

  // Case-insensitive; spaces and underscores are interchangeable. Unknown
  // names fail with nearest-name suggestions.
  const StructureEntry& by_name(std::string_view name) const {
    const std::string key = taxonomy_detail::normalize_name(name);
    const auto it = by_name_.find(key);
    if (it != by_name_.end()) return *it->second;
    std::vector<std::pair<std::size_t, const StructureEntry*>> scored;
    scored.reserve(entries_.size());
    for (const auto& e : entries_)
      scored.emplace_back(taxonomy_detail::edit_distance(key, e.name), &e);
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::string msg = "unknown structure name \"" + std::string(name) +
                      "\"; closest matches: ";
    for (std::size_t i = 0; i < 3 && i < scored.size(); ++i) {
      if (i) msg += ", ";
      msg += "\"" + scored[i].second->name + "\"";
    }
    throw Error(msg);
  }

  bool has_name(std::string_view name) const {
    return by_name_.count(taxonomy_detail::normalize_name(name)) > 0;
  }

  // The 13 structures shared with the public abdominal benchmark.
  const std::vector<int>& btcv_subset() const { return btcv_; }

  std::vector<int> all_ids() const {
    std::vector<int> ids;
    ids.reserve(entries_.size());
    for (const auto& e : entries_) ids.push_back(e.id);
    return ids;
  }

private:
  StructureRegistry() {
    parse();
    // The table is compiled in; a violated invariant here is a build defect.
    if (entries_.size() != kMaxStructureId)
      throw std::logic_error("structure table must have exactly 104 entries");
    std::array<int, 5> part_sizes{};
    std::map<Group, int> group_counts;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      if (e.id != static_cast<int>(i) + 1)
        throw std::logic_error("structure IDs must be 1..104 in order");
      if (e.part < 1 || e.part > 5) throw std::logic_error("part must be 1..5");
      if (e.cutoff_ml < 0) throw std::logic_error("cutoff must be non-negative");
      ++part_sizes[static_cast<std::size_t>(e.part - 1)];
      ++group_counts[e.group];
    }
    if (part_sizes != std::array<int, 5>{21, 21, 21, 21, 20})
      throw std::logic_error("parts must have sizes 21/21/21/21/20");
    if (group_counts[Group::organ] != 27 || group_counts[Group::bone] != 59 ||
        group_counts[Group::muscle] != 10 || group_counts[Group::vessel] != 8)
      throw std::logic_error("group counts must be 27 organs / 59 bones / 10 muscles / 8 vessels");
    if (btcv_.size() != 13) throw std::logic_error("comparison subset must have 13 entries");

    // Aliases for spellings that appear in the wild.
    add_alias("clav\xC3\xAD" "cula left", "clavicula left");
    add_alias("clav\xC3\xAD" "cula right", "clavicula right");
    add_alias("iliac vena left", "iliac vein left");
    add_alias("iliac vena right", "iliac vein right");
  }

  void parse() {
    const std::string_view csv = taxonomy_detail::kRegistryCsv;
    std::size_t pos = csv.find('\n') + 1;  // skip header row
    while (pos < csv.size()) {
      std::size_t end = csv.find('\n', pos);
      if (end == std::string_view::npos) end = csv.size();
      const std::string_view line = csv.substr(pos, end - pos);
      pos = end + 1;
      if (line.empty()) continue;
      std::array<std::string, 6> fields;
      std::size_t field = 0, start = 0;
      for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
          if (field >= fields.size()) throw std::logic_error("bad registry row");
          fields[field++] = std::string(line.substr(start, i - start));
          start = i + 1;
        }
      }
      if (field != 6) throw std::logic_error("bad registry row");
      StructureEntry e;
      e.id = std::stoi(fields[0]);
      e.name = fields[1];
      if (fields[2] == "organ") e.group = Group::organ;
      else if (fields[2] == "bone") e.group = Group::bone;
      else if (fields[2] == "muscle") e.group = Group::muscle;
      else if (fields[2] == "vessel") e.group = Group::vessel;
      else e.group = Group::other;
      e.part = std::stoi(fields[3]);
      e.cutoff_ml = std::stod(fields[4]);
      e.btcv = fields[5] == "1";
      entries_.push_back(std::move(e));
    }
    for (const auto& e : entries_) {
      const std::string key = taxonomy_detail::normalize_name(e.name);
      if (!by_name_.emplace(key, &e).second)
        throw std::logic_error("duplicate structure name: " + e.name);
      if (e.btcv) btcv_.push_back(e.id);
    }
  }

  void add_alias(std::string_view alias, std::string_view canonical) {
    const auto it = by_name_.find(taxonomy_detail::normalize_name(canonical));
    if (it == by_name_.end()) throw std::logic_error("alias target missing");
    by_name_.emplace(taxonomy_detail::normalize_name(alias), it->second);
  }

  std::vector<StructureEntry> entries_;
  std::map<std::string, const StructureEntry*> by_name_;
  std::vector<int> btcv_;
};

}  // namespace ctseg
