#include <doctest.h>

#include <cmath>
#include <random>

#include "chordarc/errors.hpp"
#include "chordarc/harness.hpp"
#include "chordarc/regularized_distance.hpp"

using namespace chordarc;

namespace {

Vec3 fd_gradient(RegularizedDistance::Evaluator& ev, const Vec3& m, double h) {
  Vec3 g;
  for (int c = 0; c < 3; ++c) {
    Vec3 a = m, b = m;
    a[c] += h;
    b[c] -= h;
    g[c] = (ev(a).d0 - ev(b).d0) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("d0 is comparable to the distance") {
  for (auto curve : {make_segment(1.0), make_helix()}) {
    RegularizedDistance rd(curve);
    RegularizedDistance::Evaluator ev(rd);
    const auto pts = distance_samples(*curve, 2000, 1e-3, 1.0);
    double lo = 1e300, hi = 0.0;
    for (const auto& m : pts) {
      const auto v = ev(m);
      CHECK(v.d == doctest::Approx(curve->distance_to(m)).epsilon(1e-12));
      lo = std::min(lo, v.d0 / v.d);
      hi = std::max(hi, v.d0 / v.d);
    }
    CHECK(lo > 0.0);
    CHECK(hi <= 1.0 / 16.0);
  }
}

TEST_CASE("d0 gradient and Hessian match finite differences") {
  auto helix = make_helix();
  RegularizedDistance rd(helix);
  RegularizedDistance::Evaluator ev(rd);
  const auto pts = distance_samples(*helix, 60, 1e-2, 0.5);
  for (const auto& m : pts) {
    const auto v = ev(m);
    const double h = 1e-5 * v.d;
    const Vec3 g = fd_gradient(ev, m, h);
    CHECK(norm(g - v.grad) <= 1e-5 * std::max(1.0, norm(v.grad)));
    for (int c = 0; c < 3; ++c) {
      Vec3 a = m, b = m;
      a[c] += h;
      b[c] -= h;
      const Vec3 dg = (ev(a).grad - ev(b).grad) / (2 * h);
      for (int r = 0; r < 3; ++r) CHECK(std::abs(dg[r] - v.hess[r][c]) <= 1e-4 * std::max(1.0, v.hess_norm));
    }
    CHECK(v.hess_norm == doctest::Approx(frobenius(v.hess)));
  }
}

TEST_CASE("gradient and scaled Hessian do not grow toward the curve") {
  auto seg = make_segment(1.0);
  RegularizedDistance rd(seg);
  RegularizedDistance::Evaluator ev(rd);
  double grad[3] = {0, 0, 0}, hess[3] = {0, 0, 0};
  const auto pts = distance_samples(*seg, 3000, 1e-3, 1.0);
  for (const auto& m : pts) {
    const auto v = ev(m);
    const int dec = std::clamp(static_cast<int>(std::floor(-std::log10(v.d))), 0, 2);
    grad[dec] = std::max(grad[dec], norm(v.grad));
    hess[dec] = std::max(hess[dec], v.hess_norm * v.d);
  }
  for (int i = 0; i < 3; ++i) REQUIRE(grad[i] > 0.0);
  CHECK(*std::max_element(grad, grad + 3) / *std::min_element(grad, grad + 3) <= 1.5);
  CHECK(*std::max_element(hess, hess + 3) / *std::min_element(hess, hess + 3) <= 1.5);
}

TEST_CASE("evaluator memo does not change values") {
  auto helix = make_helix();
  RegularizedDistance rd(helix);
  RegularizedDistance::Evaluator warm(rd);
  const auto pts = distance_samples(*helix, 200, 1e-3, 1.0);
  for (const auto& m : pts) warm(m);
  for (const auto& m : pts) {
    RegularizedDistance::Evaluator cold(rd);
    CHECK(warm(m).d0 == cold(m).d0);
    CHECK(rd.eval(m).d0 == cold(m).d0);
  }
}

TEST_CASE("singular and invalid inputs") {
  auto seg = make_segment(1.0);
  CHECK_THROWS_AS(RegularizedDistance(seg, 0.1), InvalidInput);
  RegularizedDistance rd(seg);
  CHECK_THROWS_AS(rd.eval({0.5, 0.0, 0.0}), SingularInput);
}
