#pragma once

// On-disk bundles. A system directory holds `system.json` naming Matrix
// Market files for A, B, M and x0; a reduced-model directory holds
// `rom.json` plus the reduced matrices.

#include <filesystem>

#include "qbmor/balancing.hpp"
#include "qbmor/core.hpp"

namespace qbmor {

inline constexpr int kBundleVersion = 1;

void save_system(const std::filesystem::path& dir, const LtiQuadraticSystem& sys);

/// Throws FormatError for a missing or malformed manifest, and the usual
/// construction errors for invalid matrices. A missing x0 entry means zero.
LtiQuadraticSystem load_system(const std::filesystem::path& dir,
                               StabilityCheck check = StabilityCheck::kVerify);

/// Writes the reduced matrices; W and V are included when `with_projection`.
void save_rom(const std::filesystem::path& dir, const ReducedModel& rom,
              bool with_projection = false);
ReducedModel load_rom(const std::filesystem::path& dir);

}  // namespace qbmor
