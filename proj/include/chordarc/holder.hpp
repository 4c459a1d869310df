#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chordarc/curve.hpp"

namespace chordarc {

// How a function on the curve is specified in configs.
struct FunctionSpec {
  enum class Kind { ArcPower, DistPower, Samples, Constant };
  Kind kind = Kind::ArcPower;
  double alpha = 1.0;       // arc-power / dist-power exponent
  Vec3 point;               // dist-power anchor
  double value = 0.0;       // constant
  std::vector<double> values;  // samples, uniform in arc length over [0, |L|]
};

std::string to_string(FunctionSpec::Kind kind);

constexpr std::size_t kMinFunctionNodes = (std::size_t{1} << 14) + 1;

// Scalar function on the curve: values on a uniform arc grid with linear
// interpolation.
class CurveFunction {
 public:
  CurveFunction(CurvePtr curve, std::vector<double> values);
  static CurveFunction from_spec(CurvePtr curve, const FunctionSpec& spec,
                                 std::size_t nodes = kMinFunctionNodes);

  const PolylineCurve& curve() const { return *curve_; }
  const CurvePtr& curve_ptr() const { return curve_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t nodes() const { return values_.size(); }
  double step() const { return step_; }
  double node_param(std::size_t i) const;

  double operator()(double s) const;

 private:
  CurvePtr curve_;
  std::vector<double> values_;
  double step_;
};

struct HolderParams {
  double alpha = 0.6;
  double p = 2.0;
  double eps = 0.6;
  double creg = 4.0;

  void validate() const;
};

// The part of the curve inside the closed Euclidean ball of radius r about
// the curve point with parameter s0, as disjoint arc intervals plus the
// sample parameters that fell inside (s0 included, boundary crossings
// refined by bisection).
struct BallSlice {
  std::vector<std::pair<double, double>> intervals;
  std::vector<double> samples;
};

// `step_fraction` sets the arc sample step to step_fraction * min(r, |L|).
BallSlice ball_slice(const PolylineCurve& curve, double s0, double r, double step_fraction = 1.0 / 16.0);

struct ModulusSample {
  double value = 0.0;
  double argmax = 0.0;  // arc parameter of the maximizing sample
};

// Delta* f(M, r) over the sampled Euclidean ball; also reports the argmax.
ModulusSample delta_star_sample(const CurveFunction& f, double s0, double r,
                                double step_fraction = 1.0 / 16.0);
double delta_star(const CurveFunction& f, const CurvePoint& m, double r,
                  double step_fraction = 1.0 / 16.0);

struct SeminormResult {
  double value = 0.0;  // max over the radius grid
  std::vector<std::pair<double, double>> per_radius;  // (r, integral^(1/p))
};

constexpr std::size_t kSeminormNodes = 4096;

SeminormResult lp_seminorm(const CurveFunction& f, const HolderParams& params,
                           const std::vector<double>& r_grid, std::size_t nodes = kSeminormNodes,
                           double step_fraction = 1.0 / 16.0);

struct RegularityProbe {
  double s_m = 0.0;
  double s_n = 0.0;
  double r = 0.0;
  double big_r = 0.0;
};

struct RegularityResult {
  std::optional<double> constant;  // empty when no probe was informative
  std::size_t informative = 0;
  std::size_t violations = 0;  // Delta*f(N,R) = 0 while Delta*f(M,r) > 0
  RegularityProbe worst;
};

// Dyadic (r, R) pairs with i <= j <= max_level, M on the level-grid_level
// dyadic grid, N = M or a dyadic neighbor within R.
std::vector<RegularityProbe> standard_probes(const PolylineCurve& curve, int max_level = 8,
                                             int grid_level = 6);

RegularityResult regularity_constant(const CurveFunction& f, double eps,
                                     const std::vector<RegularityProbe>& probes);

struct UniformProbeSet {
  int point_level = 10;      // M on 2^point_level + 1 dyadic points
  int radius_levels = 10;    // r = 2^-j |L|, j = 0..radius_levels
  int radius_substeps = 1;   // geometric substeps per octave
};

double uniform_holder_constant(const CurveFunction& f, double alpha, const UniformProbeSet& probes = {});

// sup |F| over the closed ball of radius delta about the curve point at s0.
// For a piecewise-linear F the sup over the sampled slice is exact: all grid
// nodes inside the slice and the slice endpoints are visited.
double max_delta(const CurveFunction& f, double s0, double delta, double step_fraction = 1.0 / 16.0);

struct LedgerEntry {
  double value = 0.0;
  std::string note;
};

// Measured constants with a short provenance note.
class ConstantsLedger {
 public:
  void set(const std::string& name, double value, std::string note);
  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  double get(const std::string& name) const;
  const std::map<std::string, LedgerEntry>& entries() const { return entries_; }

 private:
  std::map<std::string, LedgerEntry> entries_;
};

}  // namespace chordarc
