#pragma once

#include <string>
#include <vector>

#include "ctseg/json_out.hpp"

namespace ctseg::cli {

struct Global {
  bool json = false;  // structured summaries on stdout instead of prose
  int threads = 1;
};

// Writes content to a temp file in the target directory and renames it into
// place, so a failing run never leaves a partial report behind. The temp
// name keeps the final filename as suffix (gzip detection keys off it).
void atomic_write_text(const std::string& path, const std::string& content);

// Same rename discipline for binary volume writers: writer(tmp_path) runs
// first, then the rename.
void atomic_write_via(const std::string& path,
                      const std::function<void(const std::string&)>& writer);

// Standard report preamble: tool name/version plus the resolved config.
JsonValue report_envelope(const std::string& command, JsonValue config);

// Prints either the human summary or the structured one, per --json.
void emit_summary(const Global& g, const std::string& human, const JsonValue& structured);

// Sorted *.nii / *.nii.gz entries of a directory (filenames, not paths).
std::vector<std::string> list_nifti_files(const std::string& dir);

// "chest_12.nii.gz" -> "chest_12"
std::string case_id_from_filename(const std::string& filename);

}  // namespace ctseg::cli
