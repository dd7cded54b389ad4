#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "kernels_impl.hpp"
#include "kpirefine/error.hpp"

namespace kpirefine::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(KPIREFINE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* table_for(Isa isa) noexcept {
  return isa == Isa::Scalar ? &scalar_table() : avx2_table();
}

const KernelTable* initial_table() noexcept {
  if (const char* env = std::getenv("KPIREFINE_ISA")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && is_supported(Isa::Avx2)) return avx2_table();
  }
  return is_supported(Isa::Avx2) ? avx2_table() : &scalar_table();
}

std::atomic<const KernelTable*>& active_slot() noexcept {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  return isa == Isa::Scalar ? "scalar" : "avx2";
}

const KernelTable* avx2_table() noexcept {
#if defined(KPIREFINE_HAVE_AVX2)
  return &impl::avx2_table_impl();
#else
  return nullptr;
#endif
}

bool is_supported(Isa isa) noexcept {
  if (isa == Isa::Scalar) return true;
  static const bool avx2 = avx2_table() != nullptr && cpu_has_avx2();
  return avx2;
}

const KernelTable& active() noexcept {
  return *active_slot().load(std::memory_order_acquire);
}

void set_active(Isa isa) {
  if (!is_supported(isa)) {
    raise(ErrorCode::InvalidArgument,
          std::string("kernel variant ") + std::string(to_string(isa)) + " is not supported here");
  }
  active_slot().store(table_for(isa), std::memory_order_release);
}

std::span<const Isa> supported() {
  static const std::vector<Isa> list = [] {
    std::vector<Isa> out{Isa::Scalar};
    if (is_supported(Isa::Avx2)) out.push_back(Isa::Avx2);
    return out;
  }();
  return list;
}

}  // namespace kpirefine::kernels
