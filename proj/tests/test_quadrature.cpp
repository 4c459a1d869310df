#include <doctest.h>

#include <cmath>

#include "chordarc/quadrature.hpp"

using namespace chordarc;

TEST_CASE("Gauss-Legendre integrates polynomials up to degree 2n-1 exactly") {
  for (int n : {1, 2, 5, 16}) {
    const auto g = gauss_legendre(n);
    REQUIRE(g.nodes.size() == static_cast<std::size_t>(n));
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double q = 0.0;
      for (int i = 0; i < n; ++i) q += g.weights[i] * std::pow(g.nodes[i], deg);
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      CHECK(q == doctest::Approx(exact).epsilon(1e-13));
    }
    // and not degree 2n (for large n the miss is below 1e-9, so only look at small rules)
    if (n <= 5) {
      double q = 0.0;
      for (int i = 0; i < n; ++i) q += g.weights[i] * std::pow(g.nodes[i], 2 * n);
      CHECK(std::abs(q - 2.0 / (2 * n + 1)) > 1e-4);
    }
  }
}

TEST_CASE("sphere rule averages spherical harmonics") {
  const auto s = sphere_rule(16, 32);
  double wsum = 0.0;
  for (double w : s.weights) wsum += w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
  auto avg = [&](auto fn) {
    double a = 0.0;
    for (std::size_t i = 0; i < s.dirs.size(); ++i) a += s.weights[i] * fn(s.dirs[i]);
    return a;
  };
  for (const auto& d : s.dirs) CHECK(norm(d) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(avg([](const Vec3& d) { return d.x; }) == doctest::Approx(0.0));
  CHECK(avg([](const Vec3& d) { return d.x * d.x; }) == doctest::Approx(1.0 / 3));
  CHECK(avg([](const Vec3& d) { return d.x * d.x * d.y * d.y; }) == doctest::Approx(1.0 / 15));
  CHECK(avg([](const Vec3& d) { return std::pow(d.z, 8); }) == doctest::Approx(1.0 / 9));
  CHECK(std::abs(avg([](const Vec3& d) { return d.x * d.y * d.z; })) < 1e-15);
}

TEST_CASE("low-discrepancy helpers") {
  CHECK(radical_inverse(1, 2) == 0.5);
  CHECK(radical_inverse(2, 2) == 0.25);
  CHECK(radical_inverse(3, 2) == 0.75);
  CHECK(radical_inverse(1, 3) == doctest::Approx(1.0 / 3));
  CHECK(radical_inverse(4, 3) == doctest::Approx(4.0 / 9));
  const auto pts = halton_ball(100);
  CHECK(pts.size() == 100);
  for (const auto& p : pts) CHECK(norm(p) <= 1.0);
  CHECK(halton_ball(100)[37] == pts[37]);

  const auto& dirs = cube_directions();
  CHECK(dirs.size() == 26);
  Vec3 sum;
  for (const auto& d : dirs) {
    CHECK(norm(d) == doctest::Approx(1.0));
    sum += d;
  }
  CHECK(norm(sum) < 1e-14);
}
