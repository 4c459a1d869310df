#include "chordarc/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "chordarc/errors.hpp"

namespace chordarc {

GaussRule gauss_legendre(int n) {
  if (n < 1 || n > 256) throw InvalidInput("Gauss-Legendre order must lie in [1, 256]");
  GaussRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      // derivative at the converged node
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i), hi = static_cast<std::size_t>(n - 1 - i);
    r.nodes[lo] = -x;
    r.nodes[hi] = x;
    r.weights[lo] = w;
    r.weights[hi] = w;
  }
  if (n % 2 == 1) r.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return r;
}

SphereRule sphere_rule(int n_theta, int n_phi) {
  if (n_phi < 1) throw InvalidInput("sphere rule needs at least one azimuth");
  const GaussRule g = gauss_legendre(n_theta);
  SphereRule s;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const double ct = g.nodes[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / n_phi;
      s.dirs.push_back({st * std::cos(phi), st * std::sin(phi), ct});
      s.weights.push_back(0.5 * g.weights[i] / n_phi);
    }
  }
  return s;
}

double radical_inverse(unsigned i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

std::vector<Vec3> halton_ball(int count) {
  std::vector<Vec3> out;
  for (unsigned i = 1; static_cast<int>(out.size()) < count; ++i) {
    const Vec3 p{2.0 * radical_inverse(i, 2) - 1.0, 2.0 * radical_inverse(i, 3) - 1.0,
                 2.0 * radical_inverse(i, 5) - 1.0};
    if (norm2(p) <= 1.0) out.push_back(p);
  }
  return out;
}

const std::vector<Vec3>& cube_directions() {
  static const std::vector<Vec3> dirs = [] {
    std::vector<Vec3> v;
    for (int k = -1; k <= 1; ++k)
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
          if (i == 0 && j == 0 && k == 0) continue;
          const Vec3 d{double(i), double(j), double(k)};
          v.push_back(d / norm(d));
        }
    return v;
  }();
  return dirs;
}

}  // namespace chordarc
