#pragma once

// Matrix Market exchange format, real field only.
//
// Reading accepts `array` (dense, column-major) and `coordinate` (sparse,
// 1-based triplets) with `general` or `symmetric` symmetry. Writing emits
// dense `array general` with 17 significant digits so files round-trip
// bit-exactly.

#include <filesystem>
#include <iosfwd>

#include "qbmor/core.hpp"

namespace qbmor::mm {

Matrix read(std::istream& in);
Matrix read_file(const std::filesystem::path& path);

void write(std::ostream& out, const Eigen::Ref<const Matrix>& m);
void write_file(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& m);

}  // namespace qbmor::mm
