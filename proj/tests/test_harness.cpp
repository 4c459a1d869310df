#include <doctest.h>

#include <cmath>

#include "chordarc/errors.hpp"
#include "chordarc/harness.hpp"

using namespace chordarc;

namespace {

CurveFunction arc_power(CurvePtr c, double a) {
  FunctionSpec spec;
  spec.alpha = a;
  return CurveFunction::from_spec(std::move(c), spec);
}

DirectParams small_direct(int lo, int hi) {
  DirectParams p;
  p.level_lo = lo;
  p.level_hi = hi;
  p.fit_level_lo = lo;
  p.extension.grid.theta = 0.5;
  p.extension.fit_level_lo = 1;
  p.error_samples = 256;
  p.gradient_samples = 32;
  return p;
}

const DirectRun& segment_run() {
  static const DirectRun run = run_direct(arc_power(make_segment(1.0), 0.6), small_direct(1, 3));
  return run;
}

}  // namespace

TEST_CASE("rate fit recovers an exact power law") {
  std::vector<std::pair<double, double>> pts;
  for (int n = 0; n < 5; ++n) {
    const double x = std::ldexp(1.0, -n);
    pts.emplace_back(x, 3.0 * std::pow(x, 0.7));
  }
  const auto f = fit_rate(pts);
  CHECK(f.slope == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(f.residual <= 1e-12);
  CHECK(f.points == 5);
  CHECK_THROWS_AS(fit_rate({pts[0], pts[1]}), InvalidInput);
  CHECK_THROWS_AS(fit_rate({pts[0], pts[1], {0.1, 0.0}}), InvalidInput);
  CHECK_THROWS_AS(fit_rate({pts[0], pts[0], pts[0]}), InvalidInput);
}

TEST_CASE("sample generators respect their distance bands") {
  for (auto curve : {make_segment(1.0), make_helix()}) {
    const double L = curve->length();
    const auto pts = distance_samples(*curve, 500, 1e-3, 0.5);
    CHECK(pts.size() == 500);
    double lo = 1e300, hi = 0.0;
    for (const auto& m : pts) {
      const double d = curve->distance_to(m) / L;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    CHECK(lo >= 1e-3);
    CHECK(hi <= 0.5);
    CHECK(lo < 2e-3);  // the band is actually spread
    CHECK(hi > 0.25);
    CHECK(distance_samples(*curve, 500, 1e-3, 0.5)[123] == pts[123]);
    for (int n : {2, 5}) {
      for (const auto& m : tube_samples(*curve, n, 100)) CHECK(curve->distance_to(m) < std::ldexp(L, -n));
    }
  }
  CHECK_THROWS_AS(distance_samples(*make_segment(1.0), 10, 0.5, 0.1), InvalidInput);
}

TEST_CASE("parameter validation") {
  auto p = small_direct(3, 2);
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  p = small_direct(1, 3);
  p.grad_density = 3;
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  InverseParams ip;
  CHECK_NOTHROW(ip.validate());
  ip.c1 = 2.0;
  CHECK_THROWS_AS(ip.validate(), InvalidInput);
  ip = {};
  ip.samples = 4;
  CHECK_THROWS_AS(ip.validate(), InvalidInput);
}

TEST_CASE("direct run on a small segment problem") {
  const auto& run = segment_run();
  const auto& r = run.result;
  REQUIRE(r.levels.size() == 3);
  for (const auto& lr : r.levels) {
    REQUIRE(lr.ok());
    CHECK(lr.quantity3 > 0.0);
    CHECK(lr.quantity4 > 0.0);
    CHECK(lr.mass_balance <= 1e-10);
    CHECK(lr.sup_error >= 0.0);
    CHECK(lr.delta == std::ldexp(1.0, -lr.level));
    CHECK(run.family.count(lr.level) == 1);
  }
  // the error shrinks with the scale
  CHECK(r.levels[2].raw_error < r.levels[0].raw_error);
  REQUIRE(r.fit.has_value());
  CHECK(r.fit->points == 3);
  CHECK(r.fit->slope > 0.3);
  CHECK(r.ledger.has("c5"));
  CHECK(r.ledger.has("c11_n2"));
  CHECK(r.ledger.get("b") == 1.0);
  REQUIRE(r.regularity.has_value());
  CHECK(r.warning.empty());
}

TEST_CASE("too few levels skip the rate fit") {
  const auto run = run_direct(arc_power(make_segment(1.0), 0.6), small_direct(2, 2));
  CHECK_FALSE(run.result.fit.has_value());
  CHECK_FALSE(run.result.fit_note.empty());
}

TEST_CASE("constant functions need no correction") {
  FunctionSpec c;
  c.kind = FunctionSpec::Kind::Constant;
  c.value = 2.0;
  const auto f = CurveFunction::from_spec(make_segment(1.0), c);
  const auto run = run_direct(f, small_direct(3, 3));
  CHECK_FALSE(run.result.regularity.has_value());
  CHECK_FALSE(run.result.warning.empty());
  REQUIRE(run.result.levels.size() == 1);
  const auto& lr = run.result.levels[0];
  INFO(lr.error);
  REQUIRE(lr.ok());
  CHECK(lr.max_gamma == 0.0);
  const auto& a = *run.family.at(3);
  CHECK(a.u_count() == 0);
  // only the boundary layer at the edge of the outer ball carries mass, so v is
  // flat along the curve
  double lo = 1e300, hi = -1e300;
  for (int j = 0; j <= 64; ++j) {
    const double v = a.value(make_segment(1.0)->point_at(j / 64.0));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo <= 1e-2 * 2.0);
}

TEST_CASE("inverse chain holds pointwise on the direct family") {
  const auto& run = segment_run();
  const auto f = arc_power(make_segment(1.0), 0.6);
  InverseParams ip;
  ip.k_lo = 3;  // c1 = 4 maps k = 3..5 onto levels 1..3
  ip.k_hi = 5;
  ip.samples = 256;
  const auto inv = run_inverse(f, run.family, ip);
  REQUIRE(inv.radii.size() == 3);
  CHECK(inv.missing_levels.empty());
  CHECK(inv.violations == 0);
  for (const auto& ir : inv.radii) {
    REQUIRE(ir.ok());
    CHECK(ir.level == ir.k - 2);
    CHECK(ir.worst_ratio <= 1.0);
    CHECK(ir.identity_residual <= 1e-6);
    // N(M) is the argmax of the modulus, so both integrands coincide
    CHECK(ir.seminorm == doctest::Approx(ir.modulus_integral).epsilon(1e-6));
    CHECK(ir.seminorm <= ir.bound);
  }
  CHECK(inv.ratio >= 1.0);
  CHECK(inv.sup > 0.0);

  // a family without the needed level reports it
  ApproximantFamily partial = run.family;
  partial.erase(2);
  const auto miss = run_inverse(f, partial, ip);
  CHECK(miss.missing_levels == std::vector<int>{2});
  CHECK_FALSE(miss.radii[1].ok());
}

TEST_CASE("embedding constant of s^alpha") {
  // sup |s^0.6 - t^0.6| / |s - t|^0.1 is attained at t = 0, s = 1
  const auto f = arc_power(make_segment(1.0), 0.6);
  HolderParams hp;
  const auto e = embedding_check(f, hp);
  CHECK(e.exponent == doctest::Approx(0.1));
  CHECK(e.constant == doctest::Approx(1.0).epsilon(0.02));
  CHECK(e.relative_change <= 0.1);
  CHECK(e.seminorm > 0.0);
}
