#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "chordarc/errors.hpp"
#include "chordarc/kernels.hpp"
#include "chordarc/quadrature.hpp"

using namespace chordarc;
using namespace chordarc::kernels;

namespace {

struct Cloud {
  std::vector<double> x, y, z, q;
  SourceView view() const { return {x.data(), y.data(), z.data(), q.data(), q.size()}; }
  void push(const Vec3& p, double m) {
    x.push_back(p.x);
    y.push_back(p.y);
    z.push_back(p.z);
    q.push_back(m);
  }
};

Cloud random_cloud(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Cloud c;
  for (std::size_t i = 0; i < n; ++i) c.push({u(rng), u(rng), u(rng)}, u(rng) * std::exp(3 * u(rng)));
  return c;
}

// Uniform shell of total mass Q and radius R from the sphere rule.
Cloud shell(double R, double Q) {
  const auto s = sphere_rule(16, 32);
  Cloud c;
  for (std::size_t i = 0; i < s.dirs.size(); ++i) c.push(s.dirs[i] * R, Q * s.weights[i]);
  return c;
}

double abs_terms(const Cloud& c, const Vec3& m) {
  double a = 0.0;
  for (std::size_t i = 0; i < c.q.size(); ++i) a += std::abs(c.q[i]) / distance({c.x[i], c.y[i], c.z[i]}, m);
  return a;
}

}  // namespace

TEST_CASE("scalar kernel matches naive summation") {
  const auto c = random_cloud(1001, 1);
  const Vec3 m{0.3, 1.7, -0.2};
  double naive = 0.0;
  Vec3 g;
  for (std::size_t i = 0; i < c.q.size(); ++i) {
    const Vec3 d = Vec3{c.x[i], c.y[i], c.z[i]} - m;
    naive += c.q[i] / norm(d);
    g += d * (c.q[i] / std::pow(norm(d), 3));
  }
  CHECK(std::abs(potential_scalar(c.view(), m) - naive) <= 1e-13 * abs_terms(c, m));
  CHECK(norm(gradient_scalar(c.view(), m) - g) <= 1e-12 * norm(g) + 1e-14);
}

TEST_CASE("AVX2 and scalar kernels agree") {
#if defined(CHORDARC_HAVE_AVX2)
  if (!avx2_available()) {
    MESSAGE("AVX2 not available on this CPU; equivalence not exercised");
    return;
  }
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 1000u, 4099u}) {
    const auto c = random_cloud(n, static_cast<unsigned>(n) + 3);
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int t = 0; t < 20; ++t) {
      const Vec3 m{u(rng), u(rng), u(rng)};
      const double tol = 1e-12 * abs_terms(c, m);
      CHECK(std::abs(potential_avx2(c.view(), m) - potential_scalar(c.view(), m)) <= tol);
      const Vec3 ga = gradient_avx2(c.view(), m), gs = gradient_scalar(c.view(), m);
      double gabs = 0.0;
      for (std::size_t i = 0; i < n; ++i) gabs += std::abs(c.q[i]) / std::pow(distance({c.x[i], c.y[i], c.z[i]}, m), 2);
      CHECK(norm(ga - gs) <= 1e-12 * gabs);
      // tail slices exercise the masked remainder
      if (n > 5) {
        const auto sv = c.view().slice(1, n - 2);
        CHECK(std::abs(potential_avx2(sv, m) - potential_scalar(sv, m)) <= tol);
      }
    }
  }
#else
  MESSAGE("built without AVX2 support");
#endif
}

TEST_CASE("dispatch selects and switches backends") {
  const Backend start = active_backend();
  set_backend(Backend::Scalar);
  CHECK(active_backend() == Backend::Scalar);
  CHECK(std::string(backend_name(Backend::Scalar)) == "scalar");
  const auto c = random_cloud(100, 9);
  const Vec3 m{2, 2, 2};
  CHECK(potential(c.view(), m) == potential_scalar(c.view(), m));
  if (avx2_available()) {
    set_backend(Backend::Avx2);
    CHECK(std::abs(potential(c.view(), m) - potential_scalar(c.view(), m)) <= 1e-12 * abs_terms(c, m));
  } else {
    CHECK_THROWS_AS(set_backend(Backend::Avx2), InvalidInput);
  }
  set_backend(start);
}

TEST_CASE("shell theorem") {
  const double R = 0.8, Q = 2.5;
  const auto c = shell(R, Q);
  for (const Vec3& m : {Vec3{3, 0, 0}, Vec3{1.2, -1.1, 0.7}, Vec3{0, 0, -5}}) {
    const double r = norm(m);
    CHECK(potential(c.view(), m) == doctest::Approx(Q / r).epsilon(1e-8));
    CHECK(norm(gradient(c.view(), m) - m * (-Q / (r * r * r))) <= 1e-7 * Q / (r * r));
  }
  for (const Vec3& m : {Vec3{0, 0, 0}, Vec3{0.2, 0.1, -0.3}}) {
    CHECK(potential(c.view(), m) == doctest::Approx(Q / R).epsilon(1e-8));
    CHECK(norm(gradient(c.view(), m)) <= 1e-7 * Q / (R * R));
  }
}

TEST_CASE("gradient matches finite differences of the potential") {
  const auto c = random_cloud(300, 4);
  const Vec3 m{1.5, -1.3, 1.1};
  const double h = 1e-5;
  const Vec3 g = gradient(c.view(), m);
  for (int a = 0; a < 3; ++a) {
    Vec3 p = m, q = m;
    p[a] += h;
    q[a] -= h;
    CHECK((potential(c.view(), p) - potential(c.view(), q)) / (2 * h) == doctest::Approx(g[a]).epsilon(1e-6));
  }
}

TEST_CASE("evaluation at a source is singular") {
  const auto c = random_cloud(10, 2);
  const Vec3 at{c.x[3], c.y[3], c.z[3]};
  CHECK_THROWS_AS(potential_scalar(c.view(), at), SingularInput);
  CHECK_THROWS_AS(gradient_scalar(c.view(), at), SingularInput);
#if defined(CHORDARC_HAVE_AVX2)
  if (avx2_available()) {
    CHECK_THROWS_AS(potential_avx2(c.view(), at), SingularInput);
    CHECK_THROWS_AS(gradient_avx2(c.view(), at), SingularInput);
  }
#endif
  CHECK(potential(SourceView{}, at) == 0.0);
}
