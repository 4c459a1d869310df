#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "chordarc/vec3.hpp"

namespace chordarc {

// A point of the curve together with its arc-length parameter.
struct CurvePoint {
  double s = 0.0;
  Vec3 pos;
};

struct NearestPoint {
  CurvePoint point;
  double distance = 0.0;
};

// Nonclosed polyline in R^3 parametrized by arc length. Immutable after
// construction; all queries are thread-safe.
class PolylineCurve {
 public:
  explicit PolylineCurve(std::vector<Vec3> vertices);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<double>& cumulative_length() const { return cum_len_; }
  double length() const { return cum_len_.back(); }
  const Vec3& start() const { return vertices_.front(); }
  const Vec3& end() const { return vertices_.back(); }

  // Point at arc parameter s; s is clamped to [0, |L|].
  Vec3 point_at(double s) const;
  CurvePoint at(double s) const { return {s, point_at(s)}; }

  // Exact segment-wise projection. Ties resolve to the smallest arc parameter.
  NearestPoint nearest_point(const Vec3& m) const;
  double distance_to(const Vec3& m) const { return nearest_point(m).distance; }

  // Chord-arc ratio measured on all dyadic pairs up to level 10. Search
  // windows along the curve use window_factor(), which pads it.
  double sampled_chord_arc() const { return sampled_b_; }
  double window_factor() const { return 1.1 * sampled_b_ + 1e-9; }

 private:
  struct BvhNode {
    Vec3 lo, hi;
    int left = -1;  // child node or, for leaves, first segment index
    int right = -1;
    int count = 0;  // > 0 for leaves
  };

  int build_bvh(std::vector<int>& order, int begin, int end);
  std::size_t segment_of(double s) const;

  std::vector<Vec3> vertices_;
  std::vector<double> cum_len_;
  std::vector<int> seg_order_;
  std::vector<BvhNode> bvh_;
  double sampled_b_ = 1.0;
};

using CurvePtr = std::shared_ptr<const PolylineCurve>;

// Equal-arc subdivision of the curve into 2^level parts.
struct DyadicSubdivision {
  int level = 0;
  double spacing = 0.0;  // Lambda_n = 2^-n |L|
  std::vector<CurvePoint> points;
};

constexpr int kMaxDyadicLevel = 24;

// max over sampled pairs of |gamma(M1,M2)| / ||M1 M2||. The pair set is the
// nested dyadic grid with at least `samples` points plus all dyadic pairs
// up to level 10, so the result is nondecreasing in `samples`.
double chord_arc_constant(const PolylineCurve& curve, std::size_t samples);

DyadicSubdivision dyadic_points(const PolylineCurve& curve, int level);

// |s2 - s1| after range checking both parameters.
double arc_between(const PolylineCurve& curve, double s1, double s2);

// Membership in Omega*_n. For n >= 1 this is the union of closed balls of
// radius 2 Lambda_n about the level-n dyadic points; Omega*_0 is the closed
// ball of radius 2|L| about A.
bool in_omega_star(const PolylineCurve& curve, const DyadicSubdivision& sub, const Vec3& m);

// All dyadic levels 0..max_level in structure-of-arrays form, with a fast
// Omega*_n membership test driven by the nearest arc parameter of a point.
class DyadicTable {
 public:
  DyadicTable(CurvePtr curve, int max_level);

  int max_level() const { return max_level_; }
  const PolylineCurve& curve() const { return *curve_; }
  double spacing(int n) const { return spacing_[static_cast<std::size_t>(n)]; }
  std::size_t count(int n) const { return levels_[static_cast<std::size_t>(n)].size(); }
  const CurvePoint& point(int n, std::size_t k) const {
    return levels_[static_cast<std::size_t>(n)][k];
  }
  const std::vector<CurvePoint>& level(int n) const {
    return levels_[static_cast<std::size_t>(n)];
  }

  // Index range [lo, hi] of level-n points that can lie within `radius` of a
  // point whose nearest curve parameter is s and distance is d.
  std::pair<std::size_t, std::size_t> window(int n, double s, double d, double radius) const;

  // Omega*_n membership given the nearest-point data (s, d) of m.
  bool in_omega_star(int n, const Vec3& m, double s, double d) const;

  // Smallest index k with m in the open ball B_{2 Lambda_n}(M_kn), falling
  // back to the closed ball; -1 if none.
  int first_ball(int n, const Vec3& m, double s, double d) const;

 private:
  CurvePtr curve_;
  int max_level_;
  std::vector<double> spacing_;
  std::vector<std::vector<CurvePoint>> levels_;
};

// Built-in curve generators.
CurvePtr make_segment(double length = 1.0);
CurvePtr make_semicircle(double radius = 1.0, std::size_t vertices = 4097);
CurvePtr make_quarter_circle(double radius = 1.0, std::size_t vertices = 4097);
// (r cos t, r sin t, pitch t), t in [0, t_max].
CurvePtr make_helix(double radius = 1.0, double pitch = 0.25, double t_max = 3.14159265358979323846,
                    std::size_t vertices = 4097);

}  // namespace chordarc
