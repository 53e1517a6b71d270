#pragma once

#include "qbmor/kernels.hpp"

namespace qbmor::kernels::detail {

const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in

}  // namespace qbmor::kernels::detail
