#pragma once

#include "kpirefine/kernels.hpp"

namespace kpirefine::kernels::impl {

#if defined(KPIREFINE_HAVE_AVX2)
const KernelTable& avx2_table_impl() noexcept;
#endif

}  // namespace kpirefine::kernels::impl
