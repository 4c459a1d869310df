#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "chordarc/curve.hpp"
#include "chordarc/grid.hpp"
#include "chordarc/holder.hpp"
#include "chordarc/regularized_distance.hpp"

namespace chordarc {

struct ExtensionParams {
  int n_max = 5;               // deepest approximant level the grid must serve
  GridParams grid;             // exclusion_radius is set by build()
  std::size_t budget = 0;      // 0: fixed exclusion level; else search the radius for this many cells
  int exclusion_level = -1;    // -1: n_max + 2
  int fit_level_lo = 2;        // Laplacian bound fit over levels fit_level_lo..n_max
  std::vector<double> c5_candidates{1, 2, 4, 8, 16, 32};

  void validate() const;
};

// Step-extension value at a point off the curve: f(M_kn) for the omega set
// containing M, 0 outside Omega*_0. `level` is the largest n (capped at the
// table depth) with M in Omega*_n, -1 outside Omega*_0; `k` is the first
// dyadic ball of that level containing M.
struct StepValue {
  double value = 0.0;
  int level = -1;
  int k = -1;
};

StepValue step_extension_value(const CurveFunction& f, const DyadicTable& table, const Vec3& m, double s, double d);

struct StepExtension {
  ScalarField f1;
  std::vector<int> level;  // per leaf
  std::vector<int> k;      // per leaf
};

StepExtension step_extension(const CurveFunction& f, const DyadicTable& table, const GradedGrid& grid);

// 257 offsets of the 9x9x9 lattice (spacing 1/4) inside the closed unit ball.
const std::vector<Vec3>& ball_lattice();

// Equal-weight lattice average of `field` over the ball of radius r at c.
double ball_average(const ScalarField& field, const Vec3& c, double r);

// Ball average of `in` at every leaf center with per-leaf radius; the
// output field uses out_mode for later evaluation.
ScalarField mollify(const ScalarField& in, const std::vector<double>& radius,
                    ScalarField::Mode out_mode = ScalarField::Mode::Blend);

struct LaplacianValue {
  double value = 0.0;
  double step = 0.0;
};

// 7-point central second difference of an arbitrary function.
double laplacian_fd(const std::function<double(const Vec3&)>& u, const Vec3& m, double step);
Vec3 gradient_fd(const std::function<double(const Vec3&)>& u, const Vec3& m, double step);

// 7-point Laplacian of a field at a point; the step must be positive.
LaplacianValue laplacian(const ScalarField& f0, const Vec3& m, double step);

// Conservative two-point-flux Laplacian of the leaf values of u: each face
// shared by leaves a, b carries (u_b - u_a) * area / ((h_a + h_b) / 2), and
// the result is the net flux over the leaf volume. On a uniform
// neighbourhood it is the 7-point stencil with step h; at 2:1 interfaces it
// keeps the discrete Green identity (sum of masses is a telescoping sum of
// fluxes). Outside the root cube u = 0. Leaves with skip[i] get 0.
std::vector<double> flux_laplacian(const ScalarField& u, const std::vector<char>& skip);

struct LaplacianBoundFit {
  double c5 = 1.0;
  bool informative = false;
  std::vector<int> levels;
  std::vector<double> lap_constant;   // per level: max |lap f0| Lambda_n^2 / Delta* f(M0, c5 d)
  std::vector<double> grad_constant;  // per level: max |grad f0| Lambda_n / Delta* f(M0, c5 d)
  double lap_spread = 0.0;            // max / min of lap_constant
  double grad_spread = 0.0;
  std::size_t samples = 0;
};

// The continuation f0 of f and its Laplacian on a graded grid.
class Extension {
 public:
  static std::shared_ptr<const Extension> build(const CurveFunction& f, const ExtensionParams& params);

  const ExtensionParams& params() const { return params_; }
  const GradedGrid& grid() const { return *grid_; }
  const DyadicTable& table() const { return *table_; }
  const CurveFunction& function() const { return f_; }
  double exclusion_radius() const { return grid_->params().exclusion_radius; }

  const ScalarField& f1() const { return *f1_; }
  const ScalarField& f2() const { return *f2_; }
  const ScalarField& f0() const { return *f0_; }
  const std::vector<double>& d0() const { return d0_; }
  const std::vector<double>& lap() const { return lap_; }        // flux Laplacian of f0 on every leaf
  const std::vector<int>& omega_level() const { return level_; }
  const std::vector<int>& omega_k() const { return k_; }
  const LaplacianBoundFit& fit() const { return fit_; }
  double c2_measured() const { return c2_; }

 private:
  Extension(const CurveFunction& f) : f_(f) {}

  CurveFunction f_;
  ExtensionParams params_;
  std::unique_ptr<GradedGrid> grid_;
  std::unique_ptr<DyadicTable> table_;
  std::unique_ptr<ScalarField> f1_, f2_, f0_;
  std::vector<double> d0_, lap_;
  std::vector<int> level_, k_;
  LaplacianBoundFit fit_;
  double c2_ = 0.0;
};

LaplacianBoundFit laplacian_bound_fit(const Extension& ext, const CurveFunction& f, int level_lo, int level_hi,
                     const std::vector<double>& c5_candidates);

}  // namespace chordarc
