#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "chordarc/curve.hpp"

namespace chordarc {

struct GridParams {
  double theta = 0.25;           // grading: h <= theta * d(center)
  double h_max = 1.0;            // in units of |L|
  double root_half_width = 6.0;  // in units of |L|, cube centered at A
  double exclusion_radius = 0.0; // absolute; cells with d(center) below it are excluded
  bool refine_outer = false;     // resolve the sphere |x - A| = 2|L|
  double h_outer = 1.0 / 16.0;   // in units of |L|
  std::size_t cell_budget = 5'000'000;
  int max_depth = 19;

  void validate() const;
};

// Octree over a cube centered at A. Leaves are stored in depth-first
// (Morton) order; every node keeps its integer coordinates at its depth.
class GradedGrid {
 public:
  struct Node {
    std::int32_t depth = 0;
    std::int32_t ix = 0, iy = 0, iz = 0;
    std::int32_t first_child = -1;  // -1 for leaves; children are contiguous
    std::int32_t leaf = -1;         // index into the leaf arrays
  };

  struct Leaf {
    Vec3 center;
    double h = 0.0;
    double d = 0.0;  // dist(center, L)
    double s = 0.0;  // arc parameter of the nearest curve point
    std::int32_t node = 0;
    bool excluded = false;
    double volume() const { return h * h * h; }
  };

  // Distances of visited node centers, reused across rebuilds of the same
  // curve and root cube (budget search).
  using DistanceCache = std::unordered_map<std::uint64_t, std::pair<double, double>>;

  static GradedGrid build(CurvePtr curve, const GridParams& params, DistanceCache* cache = nullptr);

  // Smallest exclusion radius in [r_min, r_max] whose grid has at most
  // `budget` leaves, found by bisection on log(radius). Throws
  // ResourceLimit if even r_max does not fit.
  static GradedGrid build_for_budget(CurvePtr curve, GridParams params, std::size_t budget, double r_min,
                                     double r_max);

  const PolylineCurve& curve() const { return *curve_; }
  const CurvePtr& curve_ptr() const { return curve_; }
  const GridParams& params() const { return params_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Leaf>& leaves() const { return leaves_; }
  std::size_t leaf_count() const { return leaves_.size(); }
  std::size_t excluded_count() const;
  Vec3 root_lo() const { return root_lo_; }
  double root_size() const { return root_size_; }
  double size_at(int depth) const { return std::ldexp(root_size_, -depth); }
  Vec3 node_center(const Node& n) const;

  // Leaf containing x (half-open cells), or -1 outside the root cube.
  int locate(const Vec3& x) const;
  // Node at (depth, i, j, k), or the coarser leaf covering it; -1 outside.
  int find_node(int depth, std::int64_t i, std::int64_t j, std::int64_t k) const;

 private:
  CurvePtr curve_;
  GridParams params_;
  Vec3 root_lo_;
  double root_size_ = 0.0;
  std::vector<Node> nodes_;
  std::vector<Leaf> leaves_;
};

// Per-node scalar values on a grid. Leaf values are set by the caller;
// finalize() fills internal nodes with the mean of their children.
class ScalarField {
 public:
  enum class Mode { Cell, Blend };

  ScalarField(const GradedGrid& grid, Mode mode);

  const GradedGrid& grid() const { return *grid_; }
  Mode mode() const { return mode_; }
  double leaf_value(std::size_t leaf) const;
  void set_leaf(std::size_t leaf, double v);
  std::vector<double> leaf_values() const;
  void finalize();
  double node_value(int node) const { return values_[static_cast<std::size_t>(node)]; }

  // Value of the depth-level node at integer position, 0 outside the root.
  double value_at(int depth, std::int64_t i, std::int64_t j, std::int64_t k) const;

  // Cell mode: value of the containing leaf. Blend mode: trilinear blend of
  // the node values at the containing leaf's depth.
  double operator()(const Vec3& x) const;

  // The 27 node values around a leaf (offsets -1..1, x fastest).
  void gather_neighborhood(std::size_t leaf, double out[27]) const;
  // Blend evaluated at a point inside `leaf` from its gathered neighborhood.
  double local_blend(std::size_t leaf, const double nb[27], const Vec3& x) const;

 private:
  const GradedGrid* grid_;
  Mode mode_;
  std::vector<double> values_;
};

}  // namespace chordarc
