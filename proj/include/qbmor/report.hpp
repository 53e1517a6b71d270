#pragma once

// CSV exports and the run manifest.
//
//   sv.csv       method,index,sigma
//   errors.csv   method,r,E_abs,E_rel
//   failures.csv method,r,message
//   timing.csv   method,r,phase,seconds
//
// Floating-point fields use 17 significant digits. manifest.json echoes the
// configuration and lists every output file with its git blob SHA-1.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qbmor/experiments.hpp"

namespace qbmor {

/// SHA-1 of "blob <size>\0" + content, as computed by `git hash-object`.
std::string git_blob_sha1(std::string_view content);
std::string file_git_blob_sha1(const std::filesystem::path& file);

/// Formats with 17 significant digits.
std::string format_double(double v);

void write_sv_csv(std::ostream& out, const std::vector<SingularValueSet>& sets);
void write_errors_csv(std::ostream& out, const std::vector<CellResult>& cells);
void write_failures_csv(std::ostream& out, const std::vector<CellResult>& cells);
void write_timing_csv(std::ostream& out, const std::vector<PhaseTiming>& timings);

/// Writes manifest.json into `dir` for the listed files (relative to dir).
void write_manifest(const std::filesystem::path& dir, const std::string& config_json,
                    const std::vector<std::string>& files);

/// Writes every CSV of the report plus manifest.json; trajectories go to
/// trajectories/ when they were recorded. Returns the file names written.
std::vector<std::string> write_report(const std::filesystem::path& dir,
                                      const ExperimentConfig& cfg, const ExperimentReport& report);

}  // namespace qbmor
