#include <cmath>

#include "chordarc/errors.hpp"
#include "chordarc/kernels.hpp"

namespace chordarc::kernels {

double potential_scalar(const SourceView& src, const Vec3& m) {
  Neumaier acc;
  for (std::size_t i = 0; i < src.n; ++i) {
    const double dx = src.x[i] - m.x;
    const double dy = src.y[i] - m.y;
    const double dz = src.z[i] - m.z;
    const double r2 = dx * dx + dy * dy + dz * dz;
    if (r2 == 0.0) throw SingularInput("potential evaluated at a source position");
    acc.add(src.q[i] / std::sqrt(r2));
  }
  return acc.value();
}

Vec3 gradient_scalar(const SourceView& src, const Vec3& m) {
  Neumaier gx, gy, gz;
  for (std::size_t i = 0; i < src.n; ++i) {
    const double dx = src.x[i] - m.x;
    const double dy = src.y[i] - m.y;
    const double dz = src.z[i] - m.z;
    const double r2 = dx * dx + dy * dy + dz * dz;
    if (r2 == 0.0) throw SingularInput("gradient evaluated at a source position");
    const double w = src.q[i] / (r2 * std::sqrt(r2));
    gx.add(w * dx);
    gy.add(w * dy);
    gz.add(w * dz);
  }
  return {gx.value(), gy.value(), gz.value()};
}

}  // namespace chordarc::kernels
