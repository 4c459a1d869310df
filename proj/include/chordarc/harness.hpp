#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chordarc/approximant.hpp"
#include "chordarc/extension.hpp"
#include "chordarc/holder.hpp"

namespace chordarc {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of log-space residuals
  std::size_t points = 0;
};

// Least-squares line through (log x, log y). Needs >= 3 pairs, all positive.
RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs);

struct DirectParams {
  HolderParams holder;
  int level_lo = 2;
  int level_hi = 5;
  int fit_level_lo = 2;              // levels below are reported but not fitted
  ExtensionParams extension;         // n_max is raised to level_hi
  std::size_t error_samples = 4096;  // midpoints for quantity3 and the raw error
  std::size_t gradient_samples = 256;
  int grad_density = 1;

  void validate() const;
};

struct LevelResult {
  int level = 0;
  double delta = 0.0;
  double quantity3 = 0.0;
  double quantity4 = 0.0;
  double raw_error = 0.0;
  double sup_error = 0.0;  // max over samples of max_delta(f - v)
  std::size_t v_sources = 0;
  std::size_t u_sources = 0;
  double c11 = 0.0;
  double max_gamma = 0.0;
  double max_c = 0.0;
  double mass_balance = 0.0;
  double seconds = 0.0;  // wall time; kept out of deterministic artifacts
  std::string error;     // non-empty when the level failed
  bool ok() const { return error.empty(); }
};

struct ExtensionSummary {
  std::size_t leaves = 0;
  std::size_t core_cells = 0;
  double exclusion_radius = 0.0;
  double c2 = 0.0;
  double c5 = 0.0;
  double lap_spread = 0.0;
  double grad_spread = 0.0;
  int table_depth = 0;
  double seconds = 0.0;
};

struct DirectRunResult {
  std::vector<LevelResult> levels;
  std::optional<RateFit> fit;
  int fit_lo = 0, fit_hi = 0;
  std::string fit_note;
  double quantity3_ratio = 0.0;  // max / min over fitted levels
  double quantity4_ratio = 0.0;
  std::optional<double> regularity;  // regularity probe constant; empty if uninformative
  std::string warning;
  ExtensionSummary extension;
  ConstantsLedger ledger;
};

struct DirectRun {
  DirectRunResult result;
  std::shared_ptr<const Extension> extension;
  std::map<int, std::shared_ptr<const Approximant>> family;
};

DirectRun run_direct(const CurveFunction& f, const DirectParams& params);

// f - v sampled on the nodes of f.
CurveFunction residual_function(const CurveFunction& f, const Approximant& a);

struct InverseParams {
  HolderParams holder;
  int k_lo = 2;
  int k_hi = 6;
  double c1 = 4.0;
  int max_doublings = 3;
  std::size_t samples = 1024;
  int grad_density = 1;

  void validate() const;
};

struct InverseRadius {
  int k = 0;
  double r = 0.0;
  double c1 = 0.0;
  double delta = 0.0;
  int level = -1;
  double seminorm = 0.0;        // (int (|f(N(M)) - f(M)| / r^alpha)^p)^(1/p)
  double modulus_integral = 0.0;  // same with Delta* f(M, r)
  double term3 = 0.0;
  double term4 = 0.0;
  double bound = 0.0;           // c1^alpha (2 term3 + term4)
  std::size_t samples = 0;
  std::size_t violations = 0;   // samples breaking the pointwise chain
  double worst_ratio = 0.0;     // max lhs / rhs of the pointwise chain
  double identity_residual = 0.0;  // max relative residual of the path identity
  std::string error;
  bool ok() const { return error.empty(); }
};

struct InverseRunResult {
  std::vector<InverseRadius> radii;
  double sup = 0.0;
  double ratio = 0.0;  // max / min seminorm over the radii
  std::size_t violations = 0;
  double roundtrip_constant = 0.0;  // max over r of seminorm / (term3 + term4)
  std::vector<int> missing_levels;
};

using ApproximantFamily = std::map<int, std::shared_ptr<const Approximant>>;

InverseRunResult run_inverse(const CurveFunction& f, const ApproximantFamily& family, const InverseParams& params);

struct EmbeddingResult {
  double exponent = 0.0;
  double constant = 0.0;
  double constant_doubled = 0.0;
  double relative_change = 0.0;
  double seminorm = 0.0;  // L^p seminorm over r = 2^-j |L|, j = 0..10
};

EmbeddingResult embedding_check(const CurveFunction& f, const HolderParams& params,
                                const UniformProbeSet& probes = {});

// Property suite behind `verify`.
struct PropertyResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string note;
};

struct VerifyParams {
  int level = 4;
  std::size_t distance_samples = 10000;
  std::size_t harmonic_points = 100;
  std::size_t representation_samples = 256;
  double representation_tolerance = 0.10;
};

std::vector<PropertyResult> run_verify(const CurveFunction& f, const DirectParams& dp, const VerifyParams& vp);

// Points with d(M) log-uniform in [lo, hi] |L| around the curve; fixed
// low-discrepancy construction so runs are reproducible.
std::vector<Vec3> distance_samples(const PolylineCurve& curve, std::size_t count, double lo, double hi);

// Random-looking but deterministic tube points: d(M) < Lambda_n.
std::vector<Vec3> tube_samples(const PolylineCurve& curve, int n, std::size_t count);

}  // namespace chordarc
