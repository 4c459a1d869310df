// Built with -mavx2 -mfma; only called after the runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "chordarc/errors.hpp"
#include "chordarc/kernels.hpp"

namespace chordarc::kernels {

namespace {

struct Lanes {
  __m256d sum = _mm256_setzero_pd();
  __m256d comp = _mm256_setzero_pd();

  void add(__m256d x) {
    const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFLL));
    const __m256d t = _mm256_add_pd(sum, x);
    const __m256d big_sum = _mm256_cmp_pd(_mm256_and_pd(sum, abs_mask), _mm256_and_pd(x, abs_mask), _CMP_GE_OQ);
    const __m256d c_sum = _mm256_add_pd(_mm256_sub_pd(sum, t), x);
    const __m256d c_x = _mm256_add_pd(_mm256_sub_pd(x, t), sum);
    comp = _mm256_add_pd(comp, _mm256_blendv_pd(c_x, c_sum, big_sum));
    sum = t;
  }

  // Lane sums folded in lane order, then lane compensations.
  void fold_into(Neumaier& out) const {
    alignas(32) double s[4], c[4];
    _mm256_store_pd(s, sum);
    _mm256_store_pd(c, comp);
    for (double v : s) out.add(v);
    for (double v : c) out.add(v);
  }
};

}  // namespace

double potential_avx2(const SourceView& src, const Vec3& m) {
  const __m256d mx = _mm256_set1_pd(m.x), my = _mm256_set1_pd(m.y), mz = _mm256_set1_pd(m.z);
  const __m256d zero = _mm256_setzero_pd();
  Lanes a, b;
  __m256d singular = zero;
  std::size_t i = 0;
  for (; i + 8 <= src.n; i += 8) {
    __m256d dx0 = _mm256_sub_pd(_mm256_loadu_pd(src.x + i), mx);
    __m256d dy0 = _mm256_sub_pd(_mm256_loadu_pd(src.y + i), my);
    __m256d dz0 = _mm256_sub_pd(_mm256_loadu_pd(src.z + i), mz);
    __m256d dx1 = _mm256_sub_pd(_mm256_loadu_pd(src.x + i + 4), mx);
    __m256d dy1 = _mm256_sub_pd(_mm256_loadu_pd(src.y + i + 4), my);
    __m256d dz1 = _mm256_sub_pd(_mm256_loadu_pd(src.z + i + 4), mz);
    __m256d r0 = _mm256_fmadd_pd(dz0, dz0, _mm256_fmadd_pd(dy0, dy0, _mm256_mul_pd(dx0, dx0)));
    __m256d r1 = _mm256_fmadd_pd(dz1, dz1, _mm256_fmadd_pd(dy1, dy1, _mm256_mul_pd(dx1, dx1)));
    singular = _mm256_or_pd(singular, _mm256_or_pd(_mm256_cmp_pd(r0, zero, _CMP_EQ_OQ),
                                                   _mm256_cmp_pd(r1, zero, _CMP_EQ_OQ)));
    a.add(_mm256_div_pd(_mm256_loadu_pd(src.q + i), _mm256_sqrt_pd(r0)));
    b.add(_mm256_div_pd(_mm256_loadu_pd(src.q + i + 4), _mm256_sqrt_pd(r1)));
  }
  if (_mm256_movemask_pd(singular) != 0) throw SingularInput("potential evaluated at a source position");
  Neumaier out;
  a.fold_into(out);
  b.fold_into(out);
  for (; i < src.n; ++i) {
    const double dx = src.x[i] - m.x, dy = src.y[i] - m.y, dz = src.z[i] - m.z;
    const double r2 = dx * dx + dy * dy + dz * dz;
    if (r2 == 0.0) throw SingularInput("potential evaluated at a source position");
    out.add(src.q[i] / std::sqrt(r2));
  }
  return out.value();
}

Vec3 gradient_avx2(const SourceView& src, const Vec3& m) {
  const __m256d mx = _mm256_set1_pd(m.x), my = _mm256_set1_pd(m.y), mz = _mm256_set1_pd(m.z);
  const __m256d zero = _mm256_setzero_pd();
  Lanes gx, gy, gz;
  __m256d singular = zero;
  std::size_t i = 0;
  for (; i + 4 <= src.n; i += 4) {
    __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(src.x + i), mx);
    __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(src.y + i), my);
    __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(src.z + i), mz);
    __m256d r2 = _mm256_fmadd_pd(dz, dz, _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dx, dx)));
    singular = _mm256_or_pd(singular, _mm256_cmp_pd(r2, zero, _CMP_EQ_OQ));
    __m256d w = _mm256_div_pd(_mm256_loadu_pd(src.q + i), _mm256_mul_pd(r2, _mm256_sqrt_pd(r2)));
    gx.add(_mm256_mul_pd(w, dx));
    gy.add(_mm256_mul_pd(w, dy));
    gz.add(_mm256_mul_pd(w, dz));
  }
  if (_mm256_movemask_pd(singular) != 0) throw SingularInput("gradient evaluated at a source position");
  Neumaier ox, oy, oz;
  gx.fold_into(ox);
  gy.fold_into(oy);
  gz.fold_into(oz);
  for (; i < src.n; ++i) {
    const double dx = src.x[i] - m.x, dy = src.y[i] - m.y, dz = src.z[i] - m.z;
    const double r2 = dx * dx + dy * dy + dz * dz;
    if (r2 == 0.0) throw SingularInput("gradient evaluated at a source position");
    const double w = src.q[i] / (r2 * std::sqrt(r2));
    ox.add(w * dx);
    oy.add(w * dy);
    oz.add(w * dz);
  }
  return {ox.value(), oy.value(), oz.value()};
}

}  // namespace chordarc::kernels
