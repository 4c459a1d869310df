#include "chordarc/grid.hpp"

#include <cmath>
#include <optional>

#include "chordarc/errors.hpp"

namespace chordarc {

namespace {

constexpr double kHalfDiag = 0.8660254037844386;  // sqrt(3) / 2
constexpr int kLocateBits = 30;

std::uint64_t node_key(int depth, std::int64_t i, std::int64_t j, std::int64_t k) {
  return (static_cast<std::uint64_t>(depth) << 57) | (static_cast<std::uint64_t>(i) << 38) |
         (static_cast<std::uint64_t>(j) << 19) | static_cast<std::uint64_t>(k);
}

struct Builder {
  GradedGrid::DistanceCache* cache;
  const PolylineCurve* curve;
  const GridParams* params;
  Vec3 lo;
  double size;
  std::vector<GradedGrid::Node>* nodes;
  std::vector<GradedGrid::Leaf>* leaves;

  void visit(std::int32_t index) {
    const GradedGrid::Node node = (*nodes)[static_cast<std::size_t>(index)];
    const double h = std::ldexp(size, -node.depth);
    const Vec3 c = lo + Vec3{(node.ix + 0.5) * h, (node.iy + 0.5) * h, (node.iz + 0.5) * h};
    double d, s;
    const auto key = node_key(node.depth, node.ix, node.iy, node.iz);
    auto it = cache->find(key);
    if (it != cache->end()) {
      d = it->second.first;
      s = it->second.second;
    } else {
      auto np = curve->nearest_point(c);
      d = np.distance;
      s = np.point.s;
      cache->emplace(key, std::make_pair(d, s));
    }
    const double len = curve->length();
    const GridParams& p = *params;
    bool refine = false;
    if (node.depth < p.max_depth) {
      if (h > p.h_max * len) refine = true;
      else if (h > p.theta * d && !(d + kHalfDiag * h < p.exclusion_radius)) refine = true;
      else if (p.refine_outer && h > p.h_outer * len &&
               std::abs(distance(c, curve->start()) - 2.0 * len) < kHalfDiag * h) {
        refine = true;
      }
    }
    if (!refine) {
      GradedGrid::Leaf leaf;
      leaf.center = c;
      leaf.h = h;
      leaf.d = d;
      leaf.s = s;
      leaf.node = index;
      leaf.excluded = d < p.exclusion_radius;
      (*nodes)[static_cast<std::size_t>(index)].leaf = static_cast<std::int32_t>(leaves->size());
      leaves->push_back(leaf);
      if (leaves->size() > p.cell_budget) {
        throw ResourceLimit("graded grid exceeds the cell budget of " + std::to_string(p.cell_budget));
      }
      return;
    }
    const auto first = static_cast<std::int32_t>(nodes->size());
    (*nodes)[static_cast<std::size_t>(index)].first_child = first;
    for (int c8 = 0; c8 < 8; ++c8) {
      GradedGrid::Node child;
      child.depth = node.depth + 1;
      child.ix = 2 * node.ix + (c8 & 1);
      child.iy = 2 * node.iy + ((c8 >> 1) & 1);
      child.iz = 2 * node.iz + ((c8 >> 2) & 1);
      nodes->push_back(child);
    }
    for (int c8 = 0; c8 < 8; ++c8) visit(first + c8);
  }
};

}  // namespace

void GridParams::validate() const {
  if (!(theta > 0.0 && theta <= 0.5)) throw InvalidInput("theta must lie in (0, 1/2]");
  if (!(h_max > 0.0)) throw InvalidInput("h_max must be positive");
  if (!(root_half_width >= 2.5)) throw InvalidInput("root half width must be at least 2.5 |L|");
  if (!(exclusion_radius >= 0.0)) throw InvalidInput("exclusion radius must be nonnegative");
  if (!(h_outer > 0.0)) throw InvalidInput("h_outer must be positive");
  if (max_depth < 1 || max_depth > 19) throw InvalidInput("max depth must lie in [1, 19]");
  if (cell_budget == 0) throw InvalidInput("cell budget must be positive");
}

GradedGrid GradedGrid::build(CurvePtr curve, const GridParams& params, DistanceCache* cache) {
  params.validate();
  GradedGrid g;
  g.curve_ = std::move(curve);
  g.params_ = params;
  const double len = g.curve_->length();
  const double w = params.root_half_width * len;
  g.root_lo_ = g.curve_->start() - Vec3{w, w, w};
  g.root_size_ = 2.0 * w;
  DistanceCache local;
  Builder b{cache ? cache : &local, g.curve_.get(), &g.params_, g.root_lo_, g.root_size_, &g.nodes_, &g.leaves_};
  g.nodes_.push_back(Node{});
  b.visit(0);
  return g;
}

GradedGrid GradedGrid::build_for_budget(CurvePtr curve, GridParams params, std::size_t budget, double r_min,
                                        double r_max) {
  if (budget == 0) throw InvalidInput("cell budget must be positive");
  if (!(r_min > 0.0 && r_min <= r_max)) throw InvalidInput("exclusion radius bracket is invalid");
  params.cell_budget = budget;
  DistanceCache cache;
  auto attempt = [&](double r) -> std::optional<GradedGrid> {
    params.exclusion_radius = r;
    try {
      return build(curve, params, &cache);
    } catch (const ResourceLimit&) {
      return std::nullopt;
    }
  };
  auto best = attempt(r_max);
  if (!best) {
    throw ResourceLimit("cell budget " + std::to_string(budget) + " is too small for the exclusion radius " +
                        std::to_string(r_max));
  }
  if (auto g = attempt(r_min)) return std::move(*g);
  double lo = std::log(r_min), hi = std::log(r_max);
  for (int it = 0; it < 14; ++it) {
    double mid = 0.5 * (lo + hi);
    if (auto g = attempt(std::exp(mid))) {
      best = std::move(g);
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::move(*best);
}

std::size_t GradedGrid::excluded_count() const {
  std::size_t n = 0;
  for (const auto& l : leaves_) n += l.excluded ? 1 : 0;
  return n;
}

Vec3 GradedGrid::node_center(const Node& n) const {
  const double h = size_at(n.depth);
  return root_lo_ + Vec3{(n.ix + 0.5) * h, (n.iy + 0.5) * h, (n.iz + 0.5) * h};
}

int GradedGrid::locate(const Vec3& x) const {
  const double scale = std::ldexp(1.0, kLocateBits);
  std::int64_t q[3];
  for (int a = 0; a < 3; ++a) {
    double u = (x[a] - root_lo_[a]) / root_size_;
    if (!(u >= 0.0 && u < 1.0)) return -1;
    q[a] = std::min(static_cast<std::int64_t>(u * scale), (std::int64_t{1} << kLocateBits) - 1);
  }
  std::size_t node = 0;
  for (int t = 0; nodes_[node].first_child >= 0; ++t) {
    const int shift = kLocateBits - t - 1;
    const int child = static_cast<int>(((q[0] >> shift) & 1) | (((q[1] >> shift) & 1) << 1) |
                                       (((q[2] >> shift) & 1) << 2));
    node = static_cast<std::size_t>(nodes_[node].first_child + child);
  }
  return nodes_[node].leaf;
}

int GradedGrid::find_node(int depth, std::int64_t i, std::int64_t j, std::int64_t k) const {
  const std::int64_t n = std::int64_t{1} << depth;
  if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n) return -1;
  std::size_t node = 0;
  for (int t = 0; t < depth && nodes_[node].first_child >= 0; ++t) {
    const int shift = depth - t - 1;
    const int child = static_cast<int>(((i >> shift) & 1) | (((j >> shift) & 1) << 1) | (((k >> shift) & 1) << 2));
    node = static_cast<std::size_t>(nodes_[node].first_child + child);
  }
  return static_cast<int>(node);
}

ScalarField::ScalarField(const GradedGrid& grid, Mode mode)
    : grid_(&grid), mode_(mode), values_(grid.nodes().size(), 0.0) {}

double ScalarField::leaf_value(std::size_t leaf) const {
  return values_[static_cast<std::size_t>(grid_->leaves()[leaf].node)];
}

void ScalarField::set_leaf(std::size_t leaf, double v) {
  values_[static_cast<std::size_t>(grid_->leaves()[leaf].node)] = v;
}

std::vector<double> ScalarField::leaf_values() const {
  std::vector<double> out(grid_->leaf_count());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = leaf_value(i);
  return out;
}

void ScalarField::finalize() {
  const auto& nodes = grid_->nodes();
  for (std::size_t n = nodes.size(); n-- > 0;) {
    if (nodes[n].first_child < 0) continue;
    double acc = 0.0;
    for (int c = 0; c < 8; ++c) acc += values_[static_cast<std::size_t>(nodes[n].first_child + c)];
    values_[n] = acc / 8.0;
  }
}

double ScalarField::value_at(int depth, std::int64_t i, std::int64_t j, std::int64_t k) const {
  int n = grid_->find_node(depth, i, j, k);
  return n < 0 ? 0.0 : values_[static_cast<std::size_t>(n)];
}

double ScalarField::operator()(const Vec3& x) const {
  int leaf = grid_->locate(x);
  if (leaf < 0) return 0.0;
  const auto& lf = grid_->leaves()[static_cast<std::size_t>(leaf)];
  if (mode_ == Mode::Cell) return values_[static_cast<std::size_t>(lf.node)];
  const auto& node = grid_->nodes()[static_cast<std::size_t>(lf.node)];
  const double h = lf.h;
  std::int64_t i0[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    double u = (x[a] - grid_->root_lo()[a]) / h - 0.5;
    double f = std::floor(u);
    i0[a] = static_cast<std::int64_t>(f);
    t[a] = u - f;
  }
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int a = c & 1, b = (c >> 1) & 1, e = (c >> 2) & 1;
    const double w = (a ? t[0] : 1.0 - t[0]) * (b ? t[1] : 1.0 - t[1]) * (e ? t[2] : 1.0 - t[2]);
    if (w == 0.0) continue;
    acc += w * value_at(node.depth, i0[0] + a, i0[1] + b, i0[2] + e);
  }
  return acc;
}

void ScalarField::gather_neighborhood(std::size_t leaf, double out[27]) const {
  const auto& lf = grid_->leaves()[leaf];
  const auto& node = grid_->nodes()[static_cast<std::size_t>(lf.node)];
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        out[(dx + 1) + 3 * (dy + 1) + 9 * (dz + 1)] =
            (dx == 0 && dy == 0 && dz == 0) ? values_[static_cast<std::size_t>(lf.node)]
                                            : value_at(node.depth, node.ix + dx, node.iy + dy, node.iz + dz);
      }
    }
  }
}

double ScalarField::local_blend(std::size_t leaf, const double nb[27], const Vec3& x) const {
  const auto& lf = grid_->leaves()[leaf];
  int i0[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    double u = (x[a] - lf.center[a]) / lf.h;  // in [-0.5, 0.5]
    double f = std::floor(u);
    i0[a] = static_cast<int>(f);
    t[a] = u - f;
  }
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int a = c & 1, b = (c >> 1) & 1, e = (c >> 2) & 1;
    const double w = (a ? t[0] : 1.0 - t[0]) * (b ? t[1] : 1.0 - t[1]) * (e ? t[2] : 1.0 - t[2]);
    if (w == 0.0) continue;
    acc += w * nb[(i0[0] + a + 1) + 3 * (i0[1] + b + 1) + 9 * (i0[2] + e + 1)];
  }
  return acc;
}

}  // namespace chordarc
