#include <doctest.h>

#include <cmath>
#include <random>

#include "chordarc/errors.hpp"
#include "chordarc/grid.hpp"

using namespace chordarc;

namespace {

GridParams coarse(double excl) {
  GridParams p;
  p.theta = 0.5;
  p.exclusion_radius = excl;
  return p;
}

bool contains(const GradedGrid::Leaf& l, const Vec3& x) {
  const double r = 0.5 * l.h;
  return x.x >= l.center.x - r && x.x < l.center.x + r && x.y >= l.center.y - r && x.y < l.center.y + r &&
         x.z >= l.center.z - r && x.z < l.center.z + r;
}

}  // namespace

TEST_CASE("leaves tile the root cube") {
  auto helix = make_helix();
  const auto g = GradedGrid::build(helix, coarse(1.0 / 32));
  double vol = 0.0;
  for (const auto& l : g.leaves()) vol += l.volume();
  CHECK(vol == doctest::Approx(std::pow(g.root_size(), 3)).epsilon(1e-12));
  for (std::size_t i = 0; i < g.leaf_count(); ++i) REQUIRE(g.locate(g.leaves()[i].center) == static_cast<int>(i));

  // random points fall in exactly one leaf, the one locate() reports
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    const Vec3 x = g.root_lo() + Vec3{u(rng), u(rng), u(rng)} * g.root_size();
    int hits = 0, which = -1;
    for (std::size_t i = 0; i < g.leaf_count(); ++i) {
      if (contains(g.leaves()[i], x)) {
        ++hits;
        which = static_cast<int>(i);
      }
    }
    REQUIRE(hits == 1);
    CHECK(g.locate(x) == which);
  }
  CHECK(g.locate(g.root_lo() - Vec3{1, 0, 0}) == -1);
}

TEST_CASE("grading follows the distance to the curve") {
  auto seg = make_segment(1.0);
  GridParams p;
  p.exclusion_radius = 1.0 / 64;
  const auto g = GradedGrid::build(seg, p);
  const double hd = std::sqrt(3.0) / 2.0;
  for (const auto& l : g.leaves()) {
    CHECK(l.h <= p.h_max * seg->length() + 1e-15);
    CHECK(l.d == doctest::Approx(seg->distance_to(l.center)));
    CHECK(l.excluded == (l.d < p.exclusion_radius));
    // either graded, or entirely inside the exclusion radius
    CHECK((l.h <= p.theta * l.d || l.d + hd * l.h < p.exclusion_radius));
  }
  CHECK(g.excluded_count() > 0);
}

TEST_CASE("points away from the core tube lie in graded cells") {
  auto helix = make_helix();
  const double r = 1.0 / 32;
  const auto g = GradedGrid::build(helix, coarse(r));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double L = helix->length();
  int checked = 0;
  while (checked < 2000) {
    const Vec3 x = helix->start() + Vec3{u(rng), u(rng), u(rng)} * (2.0 * L);
    if (distance(x, helix->start()) > 2.0 * L) continue;
    if (helix->distance_to(x) < 1.25 * r) continue;
    const int leaf = g.locate(x);
    REQUIRE(leaf >= 0);
    CHECK_FALSE(g.leaves()[static_cast<std::size_t>(leaf)].excluded);
    ++checked;
  }
}

TEST_CASE("cell budget search and limits") {
  auto seg = make_segment(1.0);
  GridParams p = coarse(0.0);
  const auto g = GradedGrid::build_for_budget(seg, p, 20000, 1e-4, 0.25);
  CHECK(g.leaf_count() <= 20000);
  CHECK(g.params().exclusion_radius >= 1e-4);
  // a tighter budget needs a larger core
  const auto h = GradedGrid::build_for_budget(seg, p, 12000, 1e-4, 0.25);
  CHECK(h.params().exclusion_radius >= g.params().exclusion_radius);
  CHECK_THROWS_AS(GradedGrid::build_for_budget(seg, p, 10, 1e-4, 0.25), ResourceLimit);

  GridParams tiny = coarse(1e-3);
  tiny.cell_budget = 100;
  CHECK_THROWS_AS(GradedGrid::build(seg, tiny), ResourceLimit);
  GridParams bad;
  bad.theta = 0.7;
  CHECK_THROWS_AS(GradedGrid::build(seg, bad), InvalidInput);
}

TEST_CASE("cell and blend fields") {
  auto seg = make_segment(1.0);
  GridParams p;
  p.max_depth = 3;  // uniform 8^3 grid: every leaf at depth 3
  p.h_max = 0.01;
  const auto g = GradedGrid::build(seg, p);
  REQUIRE(g.leaf_count() == 512);
  auto lin = [](const Vec3& x) { return 1.0 + 2.0 * x.x - 0.5 * x.y + 0.25 * x.z; };

  ScalarField cell(g, ScalarField::Mode::Cell), blend(g, ScalarField::Mode::Blend);
  for (std::size_t i = 0; i < g.leaf_count(); ++i) {
    cell.set_leaf(i, lin(g.leaves()[i].center));
    blend.set_leaf(i, lin(g.leaves()[i].center));
  }
  cell.finalize();
  blend.finalize();
  // the root holds the mean of all leaves = value at the root center
  CHECK(cell.node_value(0) == doctest::Approx(lin(g.root_lo() + Vec3{1, 1, 1} * (0.5 * g.root_size()))));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.2, 0.8);  // away from the zero exterior
  for (int t = 0; t < 200; ++t) {
    const Vec3 x = g.root_lo() + Vec3{u(rng), u(rng), u(rng)} * g.root_size();
    const int leaf = g.locate(x);
    CHECK(cell(x) == lin(g.leaves()[static_cast<std::size_t>(leaf)].center));
    CHECK(blend(x) == doctest::Approx(lin(x)).epsilon(1e-12));
  }
}
