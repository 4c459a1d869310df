#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "chordarc/curve.hpp"
#include "chordarc/errors.hpp"

using namespace chordarc;

namespace {

// Arc/chord of a circular arc of opening theta.
double circle_ratio(double theta) { return (theta / 2.0) / std::sin(theta / 2.0); }

Vec3 random_point(std::mt19937_64& rng, double half) {
  std::uniform_real_distribution<double> u(-half, half);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

TEST_CASE("segment chord-arc constant is exactly one") {
  auto seg = make_segment(1.0);
  CHECK(chord_arc_constant(*seg, 512) == 1.0);
  CHECK(chord_arc_constant(*seg, 4096) == 1.0);
  CHECK(seg->sampled_chord_arc() == 1.0);
  CHECK(seg->length() == 1.0);
}

TEST_CASE("circular arcs match the analytic chord-arc ratio") {
  auto semi = make_semicircle(1.0);
  const double b = chord_arc_constant(*semi, 512);
  CHECK(std::abs(b - circle_ratio(std::numbers::pi)) / circle_ratio(std::numbers::pi) < 0.01);
  CHECK(std::abs(b - std::numbers::pi / 2.0) < 0.01 * std::numbers::pi / 2.0);

  auto quarter = make_quarter_circle(2.0);
  const double bq = chord_arc_constant(*quarter, 1024);
  CHECK(bq == doctest::Approx(circle_ratio(std::numbers::pi / 2.0)).epsilon(0.01));
  // scale invariance
  CHECK(chord_arc_constant(*make_quarter_circle(1.0), 1024) == doctest::Approx(bq).epsilon(1e-9));
}

TEST_CASE("chord-arc estimate never decreases with more samples") {
  auto helix = make_helix();
  double prev = 0.0;
  for (std::size_t n : {512u, 1024u, 2048u, 4096u, 8192u, 16384u}) {
    const double b = chord_arc_constant(*helix, n);
    CHECK(b >= 1.0);
    CHECK(b >= prev - 1e-15);
    prev = b;
  }
}

TEST_CASE("point_at walks the polyline by arc length") {
  auto semi = make_semicircle(1.0);
  const double L = semi->length();
  CHECK(L == doctest::Approx(std::numbers::pi).epsilon(1e-6));
  for (int i = 0; i <= 16; ++i) {
    const double s = L * i / 16.0;
    const Vec3 p = semi->point_at(s);
    CHECK(norm(p) == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(distance(semi->point_at(-1.0), semi->start()) == 0.0);
  CHECK(distance(semi->point_at(L + 1.0), semi->end()) == 0.0);
}

TEST_CASE("nearest point agrees with a dense brute-force scan") {
  auto helix = make_helix();
  const double L = helix->length();
  std::mt19937_64 rng(7);
  const int dense = 20000;
  for (int t = 0; t < 40; ++t) {
    const Vec3 m = random_point(rng, 1.5);
    double best = 1e300;
    for (int i = 0; i <= dense; ++i) best = std::min(best, distance(m, helix->point_at(L * i / dense)));
    const auto np = helix->nearest_point(m);
    CHECK(np.distance <= best + 1e-12);
    CHECK(np.distance >= best - L / dense);
    CHECK(distance(helix->point_at(np.point.s), np.point.pos) < 1e-9);
  }
}

TEST_CASE("dyadic points are equally spaced in arc length") {
  auto helix = make_helix();
  for (int n : {0, 1, 3, 6}) {
    const auto sub = dyadic_points(*helix, n);
    CHECK(sub.points.size() == (std::size_t{1} << n) + 1);
    CHECK(sub.spacing == doctest::Approx(std::ldexp(helix->length(), -n)));
    for (std::size_t k = 0; k < sub.points.size(); ++k)
      CHECK(sub.points[k].s == doctest::Approx(k * sub.spacing));
  }
  CHECK_THROWS_AS(DyadicTable(helix, kMaxDyadicLevel + 1), ResourceLimit);
}

TEST_CASE("omega membership and first ball agree with brute force") {
  for (auto curve : {make_segment(1.0), make_helix(), make_semicircle(1.0)}) {
    DyadicTable table(curve, 8);
    std::mt19937_64 rng(11);
    const double L = curve->length();
    for (int t = 0; t < 3000; ++t) {
      const Vec3 m = random_point(rng, 1.2 * L);
      const auto np = curve->nearest_point(m);
      for (int n = 0; n <= 8; ++n) {
        const auto& pts = table.level(n);
        const double r = 2.0 * table.spacing(n);
        bool inside = false;
        int strict = -1, closed = -1;
        if (n == 0) {
          inside = distance(m, curve->start()) <= 2.0 * L;
        }
        for (std::size_t k = 0; k < pts.size(); ++k) {
          const double d = distance(m, pts[k].pos);
          if (d < r && strict < 0) strict = static_cast<int>(k);
          if (d == r && closed < 0) closed = static_cast<int>(k);
          if (n > 0 && d <= r) inside = true;
        }
        REQUIRE(table.in_omega_star(n, m, np.point.s, np.distance) == inside);
        REQUIRE(in_omega_star(*curve, dyadic_points(*curve, n), m) == inside);
        REQUIRE(table.first_ball(n, m, np.point.s, np.distance) == (strict >= 0 ? strict : closed));
      }
    }
  }
}

TEST_CASE("omega sets are nested for n >= 1") {
  auto helix = make_helix();
  DyadicTable table(helix, 10);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5000; ++t) {
    const Vec3 m = random_point(rng, 1.5);
    const auto np = helix->nearest_point(m);
    for (int n = 1; n < 10; ++n) {
      if (table.in_omega_star(n + 1, m, np.point.s, np.distance))
        REQUIRE(table.in_omega_star(n, m, np.point.s, np.distance));
    }
  }
}

TEST_CASE("invalid curves are rejected") {
  CHECK_THROWS_AS(make_segment(0.0), InvalidInput);
  CHECK_THROWS_AS(make_segment(-1.0), InvalidInput);
  CHECK_THROWS_AS(PolylineCurve({{0, 0, 0}}), InvalidInput);
  CHECK_THROWS_AS(arc_between(*make_segment(1.0), 0.0, 1.5), InvalidInput);
  CHECK(arc_between(*make_segment(2.0), 0.5, 1.75) == doctest::Approx(1.25));
}
