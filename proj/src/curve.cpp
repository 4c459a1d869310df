#include "chordarc/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "chordarc/errors.hpp"

namespace chordarc {

namespace {

struct SegmentHit {
  double dist2;
  double s;
  Vec3 pos;
};

bool better(const SegmentHit& a, const SegmentHit& b) {
  if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
  return a.s < b.s;
}

double box_dist2(const Vec3& lo, const Vec3& hi, const Vec3& m) {
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) {
    double v = m[i];
    double e = 0.0;
    if (v < lo[i]) e = lo[i] - v;
    else if (v > hi[i]) e = v - hi[i];
    acc += e * e;
  }
  return acc;
}

Vec3 vmin(const Vec3& a, const Vec3& b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
Vec3 vmax(const Vec3& a, const Vec3& b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

// k / 2^n as an exact binary fraction times |L|, so level nesting is exact.
double dyadic_param(double len, std::size_t k, int n) {
  return len * std::ldexp(static_cast<double>(k), -n);
}

}  // namespace

PolylineCurve::PolylineCurve(std::vector<Vec3> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 2) throw InvalidInput("curve needs at least 2 vertices");
  cum_len_.resize(vertices_.size());
  cum_len_[0] = 0.0;
  for (std::size_t i = 1; i < vertices_.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      if (!std::isfinite(vertices_[i][c])) throw InvalidInput("curve vertex is not finite");
    }
    double seg = distance(vertices_[i - 1], vertices_[i]);
    if (!(seg > 0.0)) {
      throw InvalidInput("consecutive curve vertices coincide at index " + std::to_string(i));
    }
    cum_len_[i] = cum_len_[i - 1] + seg;
  }
  if (!(length() > 0.0)) throw InvalidInput("curve has zero length");

  const int nseg = static_cast<int>(vertices_.size()) - 1;
  std::vector<int> order(static_cast<std::size_t>(nseg));
  for (int i = 0; i < nseg; ++i) order[static_cast<std::size_t>(i)] = i;
  bvh_.reserve(static_cast<std::size_t>(2 * nseg));
  build_bvh(order, 0, nseg);
  seg_order_ = std::move(order);

  // Dyadic pairs to level 10.
  const int lvl = 10;
  const std::size_t npts = (std::size_t{1} << lvl) + 1;
  std::vector<Vec3> pts(npts);
  std::vector<double> ss(npts);
  for (std::size_t k = 0; k < npts; ++k) {
    ss[k] = dyadic_param(length(), k, lvl);
    pts[k] = point_at(ss[k]);
  }
  double b = 1.0;
  for (std::size_t i = 0; i < npts; ++i) {
    for (std::size_t j = i + 1; j < npts; ++j) {
      double chord = distance(pts[i], pts[j]);
      if (chord > 0.0) b = std::max(b, (ss[j] - ss[i]) / chord);
    }
  }
  sampled_b_ = b;
}

int PolylineCurve::build_bvh(std::vector<int>& order, int begin, int end) {
  BvhNode node;
  node.lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity()};
  node.hi = -node.lo;
  for (int i = begin; i < end; ++i) {
    auto seg = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
    node.lo = vmin(node.lo, vmin(vertices_[seg], vertices_[seg + 1]));
    node.hi = vmax(node.hi, vmax(vertices_[seg], vertices_[seg + 1]));
  }
  const int idx = static_cast<int>(bvh_.size());
  bvh_.push_back(node);
  if (end - begin <= 4) {
    bvh_[static_cast<std::size_t>(idx)].left = begin;
    bvh_[static_cast<std::size_t>(idx)].count = end - begin;
    return idx;
  }
  // Split on the longest axis at the median of segment midpoints.
  Vec3 ext = node.hi - node.lo;
  int axis = 0;
  if (ext.y > ext[axis]) axis = 1;
  if (ext.z > ext[axis]) axis = 2;
  const int mid = (begin + end) / 2;
  auto key = [&](int seg) {
    auto s = static_cast<std::size_t>(seg);
    return vertices_[s][axis] + vertices_[s + 1][axis];
  };
  std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                   [&](int a, int b) {
                     double ka = key(a), kb = key(b);
                     return ka != kb ? ka < kb : a < b;
                   });
  int l = build_bvh(order, begin, mid);
  int r = build_bvh(order, mid, end);
  bvh_[static_cast<std::size_t>(idx)].left = l;
  bvh_[static_cast<std::size_t>(idx)].right = r;
  return idx;
}

std::size_t PolylineCurve::segment_of(double s) const {
  auto it = std::upper_bound(cum_len_.begin(), cum_len_.end(), s);
  std::size_t i = static_cast<std::size_t>(it - cum_len_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, vertices_.size() - 2);
}

Vec3 PolylineCurve::point_at(double s) const {
  s = std::clamp(s, 0.0, length());
  if (s == length()) return vertices_.back();
  std::size_t i = segment_of(s);
  double seg = cum_len_[i + 1] - cum_len_[i];
  double t = (s - cum_len_[i]) / seg;
  return vertices_[i] + (vertices_[i + 1] - vertices_[i]) * t;
}

NearestPoint PolylineCurve::nearest_point(const Vec3& m) const {
  SegmentHit best{std::numeric_limits<double>::infinity(), 0.0, {}};
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const BvhNode& node = bvh_[static_cast<std::size_t>(stack[--top])];
    if (box_dist2(node.lo, node.hi, m) > best.dist2) continue;
    if (node.count > 0) {
      for (int i = node.left; i < node.left + node.count; ++i) {
        auto seg = static_cast<std::size_t>(seg_order_[static_cast<std::size_t>(i)]);
        const Vec3& a = vertices_[seg];
        Vec3 ab = vertices_[seg + 1] - a;
        double len2 = norm2(ab);
        double t = std::clamp(dot(m - a, ab) / len2, 0.0, 1.0);
        Vec3 p = t == 1.0 ? vertices_[seg + 1] : a + ab * t;
        double s = t == 1.0 ? cum_len_[seg + 1] : cum_len_[seg] + t * (cum_len_[seg + 1] - cum_len_[seg]);
        SegmentHit hit{norm2(m - p), s, p};
        if (better(hit, best)) best = hit;
      }
      continue;
    }
    const BvhNode& l = bvh_[static_cast<std::size_t>(node.left)];
    const BvhNode& r = bvh_[static_cast<std::size_t>(node.right)];
    double dl = box_dist2(l.lo, l.hi, m);
    double dr = box_dist2(r.lo, r.hi, m);
    // Push the farther child first so the nearer one is explored first.
    if (dl <= dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return {{best.s, best.pos}, std::sqrt(best.dist2)};
}

double chord_arc_constant(const PolylineCurve& curve, std::size_t samples) {
  if (samples < 2) throw InvalidInput("chord_arc_constant needs at least 2 samples");
  int level = 0;
  while ((std::size_t{1} << level) + 1 < samples) ++level;
  // Beyond level 13 the all-pairs sweep stops growing; the value is then
  // constant in `samples`, which keeps monotonicity.
  level = std::clamp(level, 10, 13);
  const std::size_t npts = (std::size_t{1} << level) + 1;
  std::vector<Vec3> pts(npts);
  std::vector<double> ss(npts);
  for (std::size_t k = 0; k < npts; ++k) {
    ss[k] = dyadic_param(curve.length(), k, level);
    pts[k] = curve.point_at(ss[k]);
  }
  double b = 1.0;
  for (std::size_t i = 0; i < npts; ++i) {
    for (std::size_t j = i + 1; j < npts; ++j) {
      double chord = distance(pts[i], pts[j]);
      if (chord > 0.0) b = std::max(b, (ss[j] - ss[i]) / chord);
    }
  }
  // Rounding in point_at can leave a straight curve a few ulps above 1.
  if (b - 1.0 <= 1e-12) b = 1.0;
  return b;
}

DyadicSubdivision dyadic_points(const PolylineCurve& curve, int level) {
  if (level < 0) throw InvalidInput("dyadic level must be nonnegative");
  if (level > kMaxDyadicLevel) {
    throw ResourceLimit("dyadic level " + std::to_string(level) + " exceeds the limit " +
                        std::to_string(kMaxDyadicLevel));
  }
  DyadicSubdivision sub;
  sub.level = level;
  sub.spacing = std::ldexp(curve.length(), -level);
  const std::size_t npts = (std::size_t{1} << level) + 1;
  sub.points.resize(npts);
  for (std::size_t k = 0; k < npts; ++k) {
    double s = dyadic_param(curve.length(), k, level);
    sub.points[k] = {s, curve.point_at(s)};
  }
  return sub;
}

double arc_between(const PolylineCurve& curve, double s1, double s2) {
  const double len = curve.length();
  if (!(s1 >= 0.0 && s1 <= len) || !(s2 >= 0.0 && s2 <= len)) {
    throw InvalidInput("arc parameter out of range [0, |L|]");
  }
  return std::abs(s2 - s1);
}

bool in_omega_star(const PolylineCurve& curve, const DyadicSubdivision& sub, const Vec3& m) {
  if (sub.level == 0) return distance(m, curve.start()) <= 2.0 * curve.length();
  const double r = 2.0 * sub.spacing;
  for (const auto& p : sub.points) {
    if (distance(m, p.pos) <= r) return true;
  }
  return false;
}

DyadicTable::DyadicTable(CurvePtr curve, int max_level) : curve_(std::move(curve)), max_level_(max_level) {
  if (max_level < 0 || max_level > kMaxDyadicLevel) {
    throw ResourceLimit("dyadic table level " + std::to_string(max_level) + " out of range");
  }
  for (int n = 0; n <= max_level; ++n) {
    auto sub = dyadic_points(*curve_, n);
    spacing_.push_back(sub.spacing);
    levels_.push_back(std::move(sub.points));
  }
}

std::pair<std::size_t, std::size_t> DyadicTable::window(int n, double s, double d, double radius) const {
  const double lam = spacing(n);
  const double reach = curve_->window_factor() * (radius + d);
  const double last = static_cast<double>(count(n) - 1);
  double lo = std::floor((s - reach) / lam);
  double hi = std::ceil((s + reach) / lam);
  lo = std::clamp(lo, 0.0, last);
  hi = std::clamp(hi, 0.0, last);
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

bool DyadicTable::in_omega_star(int n, const Vec3& m, double s, double d) const {
  if (n == 0) return distance(m, curve_->start()) <= 2.0 * curve_->length();
  const double r = 2.0 * spacing(n);
  if (d > r) return false;
  auto [lo, hi] = window(n, s, d, r);
  const auto& pts = level(n);
  for (std::size_t k = lo; k <= hi; ++k) {
    if (distance(m, pts[k].pos) <= r) return true;
  }
  return false;
}

int DyadicTable::first_ball(int n, const Vec3& m, double s, double d) const {
  const double r = 2.0 * spacing(n);
  if (d > r) return -1;
  auto [lo, hi] = window(n, s, d, r);
  const auto& pts = level(n);
  int closed = -1;
  for (std::size_t k = lo; k <= hi; ++k) {
    double dist = distance(m, pts[k].pos);
    if (dist < r) return static_cast<int>(k);
    if (dist == r && closed < 0) closed = static_cast<int>(k);
  }
  return closed;
}

CurvePtr make_segment(double length) {
  if (!(length > 0.0)) throw InvalidInput("segment length must be positive");
  return std::make_shared<PolylineCurve>(std::vector<Vec3>{{0.0, 0.0, 0.0}, {length, 0.0, 0.0}});
}

namespace {
CurvePtr make_arc(double radius, double t_max, std::size_t vertices) {
  if (!(radius > 0.0)) throw InvalidInput("arc radius must be positive");
  if (vertices < 2) throw InvalidInput("arc needs at least 2 vertices");
  std::vector<Vec3> v(vertices);
  for (std::size_t i = 0; i < vertices; ++i) {
    double t = t_max * static_cast<double>(i) / static_cast<double>(vertices - 1);
    v[i] = {radius * std::cos(t), radius * std::sin(t), 0.0};
  }
  return std::make_shared<PolylineCurve>(std::move(v));
}
}  // namespace

CurvePtr make_semicircle(double radius, std::size_t vertices) {
  return make_arc(radius, std::numbers::pi, vertices);
}

CurvePtr make_quarter_circle(double radius, std::size_t vertices) {
  return make_arc(radius, std::numbers::pi / 2.0, vertices);
}

CurvePtr make_helix(double radius, double pitch, double t_max, std::size_t vertices) {
  if (!(radius > 0.0) || !(t_max > 0.0)) throw InvalidInput("helix radius and t_max must be positive");
  if (vertices < 2) throw InvalidInput("helix needs at least 2 vertices");
  std::vector<Vec3> v(vertices);
  for (std::size_t i = 0; i < vertices; ++i) {
    double t = t_max * static_cast<double>(i) / static_cast<double>(vertices - 1);
    v[i] = {radius * std::cos(t), radius * std::sin(t), pitch * t};
  }
  return std::make_shared<PolylineCurve>(std::move(v));
}

}  // namespace chordarc
