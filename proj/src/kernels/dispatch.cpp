#include <atomic>
#include <cstdlib>
#include <cstring>

#include "chordarc/errors.hpp"
#include "chordarc/kernels.hpp"

namespace chordarc::kernels {

namespace {

Backend detect() {
  const char* env = std::getenv("CHORDARC_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Backend::Scalar;
  return avx2_available() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

bool avx2_available() {
#if defined(CHORDARC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() { return current().load(); }

void set_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2_available()) throw InvalidInput("AVX2 backend is not available");
  current().store(b);
}

const char* backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

double potential(const SourceView& src, const Vec3& m) {
#if defined(CHORDARC_HAVE_AVX2)
  if (active_backend() == Backend::Avx2) return potential_avx2(src, m);
#endif
  return potential_scalar(src, m);
}

Vec3 gradient(const SourceView& src, const Vec3& m) {
#if defined(CHORDARC_HAVE_AVX2)
  if (active_backend() == Backend::Avx2) return gradient_avx2(src, m);
#endif
  return gradient_scalar(src, m);
}

}  // namespace chordarc::kernels
