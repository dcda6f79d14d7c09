#include <cstdlib>
#include <string>

#include "pulseline/kernels.hpp"

namespace pulseline::kernels {

#ifdef PULSELINE_HAVE_AVX2
namespace avx2 {
const KernelTable& table();
}
#endif

const KernelTable* avx2_table() {
#ifdef PULSELINE_HAVE_AVX2
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2::table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = []() -> const KernelTable& {
    const char* env = std::getenv("PULSELINE_ISA");
    if (env != nullptr && std::string(env) == "scalar") return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace pulseline::kernels
