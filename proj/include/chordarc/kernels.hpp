#pragma once

#include <cstddef>

#include "chordarc/vec3.hpp"

// Newtonian point-mass sums: sum_i q_i / |P_i - M| and its gradient in M,
// sum_i q_i (P_i - M) / |P_i - M|^3. Accumulation is Neumaier-compensated.
// A scalar reference and an AVX2/FMA variant exist; the active one is picked
// at startup from the CPU (CHORDARC_SIMD=scalar forces the reference).
namespace chordarc::kernels {

struct SourceView {
  const double* x = nullptr;
  const double* y = nullptr;
  const double* z = nullptr;
  const double* q = nullptr;
  std::size_t n = 0;

  SourceView slice(std::size_t begin, std::size_t end) const {
    return {x + begin, y + begin, z + begin, q + begin, end - begin};
  }
};

enum class Backend { Scalar, Avx2 };

bool avx2_available();
Backend active_backend();
// Throws InvalidInput when the backend is not available on this machine.
void set_backend(Backend b);
const char* backend_name(Backend b);

// Throw SingularInput when M coincides with a source.
double potential(const SourceView& src, const Vec3& m);
Vec3 gradient(const SourceView& src, const Vec3& m);

double potential_scalar(const SourceView& src, const Vec3& m);
Vec3 gradient_scalar(const SourceView& src, const Vec3& m);
#if defined(CHORDARC_HAVE_AVX2)
double potential_avx2(const SourceView& src, const Vec3& m);
Vec3 gradient_avx2(const SourceView& src, const Vec3& m);
#endif

// Compensated accumulator shared by the kernels and their callers.
struct Neumaier {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if ((sum < 0 ? -sum : sum) >= (x < 0 ? -x : x)) comp += (sum - t) + x;
    else comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace chordarc::kernels
