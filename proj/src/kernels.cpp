#include "stgc/kernels.hpp"

#include <cstdlib>
#include <string>

namespace stgc::kernels {

bool avx2_supported() {
#if defined(STGC_BUILD_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

#if !defined(STGC_BUILD_AVX2)
const Ops& avx2_ops() { return scalar_ops(); }
#endif

namespace {

const Ops& select() {
  if (const char* env = std::getenv("STGC_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return scalar_ops();
    if (want == "avx2" && avx2_supported()) return avx2_ops();
  }
  return avx2_supported() ? avx2_ops() : scalar_ops();
}

}  // namespace

const Ops& active() {
  static const Ops& ops = select();
  return ops;
}

std::string active_name() { return active().name; }

}  // namespace stgc::kernels
