#include "chordarc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "chordarc/errors.hpp"
#include "chordarc/parallel.hpp"
#include "chordarc/quadrature.hpp"
#include "chordarc/regularized_distance.hpp"

namespace chordarc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// (sum_j v_j^p w)^(1/p) for midpoint samples of equal weight w.
double lp_mean(const std::vector<double>& v, double w, double p) {
  kernels::Neumaier acc;
  for (double x : v) acc.add(std::pow(std::abs(x), p) * w);
  return std::pow(acc.value(), 1.0 / p);
}

double ratio_of(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (v.empty()) return 0.0;
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

Vec3 tangent_at(const PolylineCurve& c, double s) {
  const double L = c.length();
  const double e = 1e-6 * L;
  const Vec3 t = c.point_at(std::min(L, s + e)) - c.point_at(std::max(0.0, s - e));
  return t / norm(t);
}

// Unit vector orthogonal to t, steered by two numbers in [0, 1).
Vec3 normal_dir(const Vec3& t, double u, double v) {
  const double z = 2.0 * u - 1.0, phi = 2.0 * std::numbers::pi * v;
  const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
  Vec3 w{rxy * std::cos(phi), rxy * std::sin(phi), z};
  w = w - t * dot(w, t);
  double n = norm(w);
  if (n < 1e-6) {
    w = std::abs(t.x) < 0.9 ? cross(t, Vec3{1, 0, 0}) : cross(t, Vec3{0, 1, 0});
    n = norm(w);
  }
  return w / n;
}

}  // namespace

RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 3) throw InvalidInput("rate fit needs at least 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(pairs.size());
  for (const auto& [x, y] : pairs) {
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
      throw InvalidInput("rate fit needs positive finite values");
    }
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw InvalidInput("rate fit needs distinct abscissae");
  RateFit r;
  r.slope = (n * sxy - sx * sy) / den;
  r.intercept = (sy - r.slope * sx) / n;
  double ss = 0.0;
  for (const auto& [x, y] : pairs) {
    const double e = std::log(y) - (r.intercept + r.slope * std::log(x));
    ss += e * e;
  }
  r.residual = std::sqrt(ss / n);
  r.points = pairs.size();
  return r;
}

void DirectParams::validate() const {
  holder.validate();
  if (level_lo < 0 || level_hi < level_lo || level_hi > 12) throw InvalidInput("levels must satisfy 0 <= lo <= hi <= 12");
  if (error_samples < 16 || gradient_samples < 4) throw InvalidInput("too few curve samples");
  if (grad_density < 1 || grad_density > 2) throw InvalidInput("grad_density must be 1 or 2");
}

CurveFunction residual_function(const CurveFunction& f, const Approximant& a) {
  const PolylineCurve& c = f.curve();
  std::vector<Vec3> pts(f.nodes());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = c.point_at(f.node_param(i));
  std::vector<double> v = evaluate_many(a, pts);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f.values()[i] - v[i];
  return CurveFunction(f.curve_ptr(), std::move(v));
}

DirectRun run_direct(const CurveFunction& f, const DirectParams& params_in) {
  DirectParams params = params_in;
  params.validate();
  params.extension.n_max = std::max(params.extension.n_max, params.level_hi);
  const PolylineCurve& curve = f.curve();
  const double L = curve.length();
  const double alpha = params.holder.alpha, p = params.holder.p;

  DirectRun run;
  DirectRunResult& res = run.result;

  const auto reg = regularity_constant(f, params.holder.eps, standard_probes(curve));
  res.regularity = reg.constant;
  if (!reg.constant) res.warning = "regularity probe test uninformative; running outside the tested class";
  if (reg.constant) res.ledger.set("c_regularity", *reg.constant, "max over dyadic probes of the regularity ratio");

  auto t0 = Clock::now();
  run.extension = Extension::build(f, params.extension);
  const Extension& ext = *run.extension;
  res.extension.seconds = seconds_since(t0);
  res.extension.leaves = ext.grid().leaf_count();
  res.extension.core_cells = ext.grid().excluded_count();
  res.extension.exclusion_radius = ext.exclusion_radius();
  res.extension.c2 = ext.c2_measured();
  res.extension.c5 = ext.fit().c5;
  res.extension.lap_spread = ext.fit().lap_spread;
  res.extension.grad_spread = ext.fit().grad_spread;
  res.extension.table_depth = ext.table().max_level();
  if (ext.c2_measured() > 0.0) res.ledger.set("c2", ext.c2_measured(), "min d0/d over graded cells");
  res.ledger.set("c5", ext.fit().c5, "Laplacian bound fit: candidate minimising the spread of the Laplacian constant");
  res.ledger.set("b", curve.sampled_chord_arc(), "sampled chord-arc constant");

  const std::size_t ns = params.error_samples, ng = params.gradient_samples;
  for (int n = params.level_lo; n <= params.level_hi; ++n) {
    LevelResult lr;
    lr.level = n;
    lr.delta = std::ldexp(L, -n);
    const auto tl = Clock::now();
    try {
      auto a = std::make_shared<const Approximant>(build_approximant(ext, n));
      const double delta = lr.delta;
      const CurveFunction F = residual_function(f, *a);
      std::vector<double> md(ns);
      parallel_for(ns, [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) md[j] = max_delta(F, (j + 0.5) * L / ns, delta);
      });
      lr.raw_error = lp_mean(md, L / ns, p);
      lr.quantity3 = lr.raw_error / std::pow(delta, alpha);
      lr.sup_error = *std::max_element(md.begin(), md.end());

      std::vector<double> gs(ng);
      parallel_for(ng, [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j) {
          gs[j] = std::pow(delta, 1.0 - alpha) *
                  grad_star(*a, curve.point_at((j + 0.5) * L / ng), delta, params.grad_density);
        }
      });
      lr.quantity4 = lp_mean(gs, L / ng, p);

      const auto& co = a->coefficients();
      lr.v_sources = a->v_count();
      lr.u_sources = a->u_count();
      lr.c11 = co.c11;
      for (double g : co.gamma) lr.max_gamma = std::max(lr.max_gamma, std::abs(g));
      for (double c : co.c) lr.max_c = std::max(lr.max_c, std::abs(c));
      lr.mass_balance = co.worst_balance();
      res.ledger.set("c11_n" + std::to_string(n), co.c11, "smallest integer passing the half-volume test");
      run.family[n] = std::move(a);
    } catch (const Error& e) {
      lr.error = e.what();
    }
    lr.seconds = seconds_since(tl);
    res.levels.push_back(lr);
  }

  double c12 = 0.0, c13 = 0.0;
  std::vector<std::pair<double, double>> pts;
  std::vector<double> q3, q4;
  res.fit_lo = std::max(params.level_lo, params.fit_level_lo);
  res.fit_hi = params.level_hi;
  for (const auto& lr : res.levels) {
    if (!lr.ok()) continue;
    c12 = std::max(c12, lr.max_c);
    c13 = std::max(c13, lr.max_gamma);
    if (lr.level < res.fit_lo) continue;
    if (lr.raw_error > 0.0) pts.emplace_back(lr.delta, lr.raw_error);
    q3.push_back(lr.quantity3);
    q4.push_back(lr.quantity4);
  }
  if (c12 > 0.0) res.ledger.set("c12", c12, "max |c_kn| over levels");
  if (c13 > 0.0) res.ledger.set("c13", c13, "max |gamma_kn| over levels");
  res.quantity3_ratio = ratio_of(q3);
  res.quantity4_ratio = ratio_of(q4);
  if (pts.size() >= 3) {
    res.fit = fit_rate(pts);
  } else {
    res.fit_note = "rate fit skipped: needs at least 3 levels with positive error";
  }
  return run;
}

void InverseParams::validate() const {
  holder.validate();
  if (k_lo < 0 || k_hi < k_lo || k_hi > 20) throw InvalidInput("radius exponents must satisfy 0 <= k_lo <= k_hi <= 20");
  if (!(c1 > 2.0)) throw InvalidInput("c1 must exceed 2");
  if (samples < 16) throw InvalidInput("too few inverse samples");
  if (max_doublings < 0) throw InvalidInput("max_doublings must be nonnegative");
}

namespace {

int level_for_delta(double L, double delta) {
  // v_delta = v_{2^-n} for 2^-(n+1) |L| < delta <= 2^-n |L|
  const double x = std::log2(L / delta);
  return static_cast<int>(std::floor(x + 1e-9));
}

void inverse_at(const CurveFunction& f, const Approximant& a, const CurveFunction& F, const InverseParams& ip,
                InverseRadius& out) {
  const PolylineCurve& curve = f.curve();
  const double L = curve.length();
  const double alpha = ip.holder.alpha, p = ip.holder.p;
  const double r = out.r, delta = out.delta;
  const std::size_t ns = ip.samples;
  static const GaussRule gl = gauss_legendre(16);

  std::vector<double> lhs(ns), mod(ns), t3(ns), t4(ns), ratio(ns), resid(ns);
  std::vector<char> bad(ns, 0);
  parallel_for(ns, [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      const double s = (j + 0.5) * L / ns;
      const ModulusSample ms = delta_star_sample(f, s, r);
      const Vec3 M = curve.point_at(s), N = curve.point_at(ms.argmax);
      const double df = f(ms.argmax) - f(s);
      const double FM = f(s) - a.value(M), FN = f(ms.argmax) - a.value(N);
      // directional-derivative line integral along [M, N]
      double line = 0.0;
      const double len = norm(N - M);
      if (len > 0.0) {
        const Vec3 nu = (N - M) / len;
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
          const double t = 0.5 * len * (gl.nodes[q] + 1.0);
          line += 0.5 * len * gl.weights[q] * dot(a.gradient(M + nu * t), nu);
        }
      }
      const double scale = std::abs(FN) + std::abs(FM) + std::abs(line) + std::abs(df);
      resid[j] = scale > 0.0 ? std::abs(df - (FN - FM + line)) / scale : 0.0;
      const double mf = max_delta(F, s, delta);
      const double gs = grad_star(a, M, delta, ip.grad_density);
      lhs[j] = std::abs(df) / std::pow(r, alpha);
      mod[j] = ms.value / std::pow(r, alpha);
      t3[j] = mf / std::pow(delta, alpha);
      t4[j] = std::pow(delta, 1.0 - alpha) * gs;
      const double rhs = 2.0 * mf + delta * gs;
      ratio[j] = rhs > 0.0 ? std::abs(df) / rhs : (df == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      if (std::abs(df) > rhs * (1.0 + 1e-12) + 1e-300) bad[j] = 1;
    }
  });
  const double w = L / ns;
  out.samples = ns;
  out.seminorm = lp_mean(lhs, w, p);
  out.modulus_integral = lp_mean(mod, w, p);
  out.term3 = lp_mean(t3, w, p);
  out.term4 = lp_mean(t4, w, p);
  out.bound = std::pow(out.c1, alpha) * (2.0 * out.term3 + out.term4);
  out.violations = static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1));
  out.worst_ratio = *std::max_element(ratio.begin(), ratio.end());
  out.identity_residual = *std::max_element(resid.begin(), resid.end());
}

}  // namespace

InverseRunResult run_inverse(const CurveFunction& f, const ApproximantFamily& family, const InverseParams& ip) {
  ip.validate();
  const double L = f.curve().length();
  InverseRunResult res;
  std::map<int, CurveFunction> residuals;
  auto residual_for = [&](int n) -> const CurveFunction& {
    auto it = residuals.find(n);
    if (it == residuals.end()) it = residuals.emplace(n, residual_function(f, *family.at(n))).first;
    return it->second;
  };

  for (int k = ip.k_lo; k <= ip.k_hi; ++k) {
    InverseRadius ir;
    ir.k = k;
    ir.r = std::ldexp(L, -k);
    double c1 = ip.c1;
    for (int attempt = 0; attempt <= ip.max_doublings; ++attempt, c1 *= 2.0) {
      ir.c1 = c1;
      ir.delta = c1 * ir.r;
      ir.level = level_for_delta(L, ir.delta);
      ir.error.clear();
      if (ir.level < 0) {
        ir.error = "delta = " + std::to_string(ir.delta) + " exceeds |L|";
        break;
      }
      auto it = family.find(ir.level);
      if (it == family.end()) {
        ir.error = "approximant for level " + std::to_string(ir.level) + " missing";
        if (std::find(res.missing_levels.begin(), res.missing_levels.end(), ir.level) == res.missing_levels.end()) {
          res.missing_levels.push_back(ir.level);
        }
        break;
      }
      try {
        inverse_at(f, *it->second, residual_for(ir.level), ip, ir);
        break;
      } catch (const InvalidInput& e) {
        // the half-ball of radius delta/2 met a source: enlarge c1
        ir.error = std::string("geometric failure: ") + e.what();
      }
    }
    res.radii.push_back(ir);
  }

  std::vector<double> sn;
  for (const auto& ir : res.radii) {
    if (!ir.ok()) continue;
    sn.push_back(ir.seminorm);
    res.sup = std::max(res.sup, ir.seminorm);
    res.violations += ir.violations;
    const double den = ir.term3 + ir.term4;
    if (den > 0.0) res.roundtrip_constant = std::max(res.roundtrip_constant, ir.seminorm / den);
  }
  std::sort(res.missing_levels.begin(), res.missing_levels.end());
  res.ratio = ratio_of(sn);
  return res;
}

EmbeddingResult embedding_check(const CurveFunction& f, const HolderParams& params, const UniformProbeSet& probes) {
  params.validate();
  EmbeddingResult r;
  r.exponent = params.alpha - 1.0 / params.p;
  r.constant = uniform_holder_constant(f, r.exponent, probes);
  UniformProbeSet dbl = probes;
  dbl.point_level += 1;
  dbl.radius_substeps *= 2;
  r.constant_doubled = uniform_holder_constant(f, r.exponent, dbl);
  r.relative_change = r.constant > 0.0 ? std::abs(r.constant_doubled - r.constant) / r.constant
                                       : std::abs(r.constant_doubled);
  std::vector<double> grid;
  for (int j = 0; j <= 10; ++j) grid.push_back(std::ldexp(f.curve().length(), -j));
  r.seminorm = lp_seminorm(f, params, grid).value;
  return r;
}

std::vector<Vec3> distance_samples(const PolylineCurve& curve, std::size_t count, double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo)) throw InvalidInput("distance range must satisfy 0 < lo < hi");
  const double L = curve.length();
  std::vector<Vec3> out;
  out.reserve(count);
  for (unsigned i = 1; out.size() < count; ++i) {
    const double s = radical_inverse(i, 2) * L;
    const double d = L * lo * std::pow(hi / lo, radical_inverse(i, 3));
    const Vec3 t = tangent_at(curve, s);
    const Vec3 m = curve.point_at(s) + normal_dir(t, radical_inverse(i, 5), radical_inverse(i, 7)) * d;
    const double dm = curve.distance_to(m);
    if (dm >= lo * L && dm <= hi * L) out.push_back(m);
    if (i > 100 * count + 1000) throw ConstructionError("could not place distance samples");
  }
  return out;
}

std::vector<Vec3> tube_samples(const PolylineCurve& curve, int n, std::size_t count) {
  const double L = curve.length();
  const double lam = std::ldexp(L, -n);
  std::vector<Vec3> out;
  for (unsigned i = 1; out.size() < count; ++i) {
    // stay away from the end caps so the point sits in the tube proper
    const double s = (0.02 + 0.96 * radical_inverse(i, 2)) * L;
    const double d = lam * (0.05 + 0.9 * radical_inverse(i, 3));
    const Vec3 t = tangent_at(curve, s);
    const Vec3 m = curve.point_at(s) + normal_dir(t, radical_inverse(i, 5), radical_inverse(i, 7)) * d;
    if (curve.distance_to(m) < lam) out.push_back(m);
    if (i > 100 * count + 1000) throw ConstructionError("could not place tube samples");
  }
  return out;
}

std::vector<PropertyResult> run_verify(const CurveFunction& f, const DirectParams& dp_in, const VerifyParams& vp) {
  DirectParams dp = dp_in;
  dp.validate();
  const PolylineCurve& curve = f.curve();
  const double L = curve.length();
  std::vector<PropertyResult> out;
  auto add = [&](std::string name, bool pass, double measured, double tol, std::string note) {
    out.push_back({std::move(name), pass, measured, tol, std::move(note)});
  };

  // regularized distance bounds over two decades and more
  {
    const auto pts = distance_samples(curve, vp.distance_samples, 1e-3, 1.0);
    RegularizedDistance rd(f.curve_ptr());
    std::vector<double> ratio(pts.size()), grad(pts.size()), hess(pts.size()), dist(pts.size());
    parallel_for(pts.size(), [&](std::size_t b, std::size_t e) {
      RegularizedDistance::Evaluator ev(rd);
      for (std::size_t i = b; i < e; ++i) {
        const auto v = ev(pts[i]);
        ratio[i] = v.d0 / v.d;
        grad[i] = norm(v.grad);
        hess[i] = v.hess_norm * v.d;
        dist[i] = v.d / L;
      }
    });
    const double rmax = *std::max_element(ratio.begin(), ratio.end());
    const double rmin = *std::min_element(ratio.begin(), ratio.end());
    add("d0-comparable", rmin > 0.0 && rmax <= 1.0 / 16.0, rmax, 1.0 / 16.0,
        "max d0/d; min d0/d = " + std::to_string(rmin));
    double gmax[3] = {0, 0, 0}, hmax[3] = {0, 0, 0};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const int dec = std::clamp(static_cast<int>(std::floor(-std::log10(dist[i]))), 0, 2);
      gmax[dec] = std::max(gmax[dec], grad[i]);
      hmax[dec] = std::max(hmax[dec], hess[i]);
    }
    const double gr = *std::max_element(gmax, gmax + 3) / *std::min_element(gmax, gmax + 3);
    const double hr = *std::max_element(hmax, hmax + 3) / *std::min_element(hmax, hmax + 3);
    add("d0-gradient-uniform", gr <= 1.5, gr, 1.5, "ratio of per-decade maxima of |grad d0|");
    add("d0-hessian-uniform", hr <= 1.5, hr, 1.5, "ratio of per-decade maxima of |hess d0| d");
  }

  // Laplacian spot checks on polynomials
  {
    double worst_h = 0.0, worst_x = 0.0;
    const auto harm = [](const Vec3& m) { return m.x * m.x + m.y * m.y - 2.0 * m.z * m.z; };
    const auto x2 = [](const Vec3& m) { return m.x * m.x; };
    for (const auto& m : distance_samples(curve, 64, 1e-2, 1.0)) {
      worst_h = std::max(worst_h, std::abs(laplacian_fd(harm, m, 1e-2 * L)));
      worst_x = std::max(worst_x, std::abs(laplacian_fd(x2, m, 1e-2 * L) - 2.0));
    }
    add("laplacian-harmonic-polynomial", worst_h <= 1e-8, worst_h, 1e-8, "|lap(x^2 + y^2 - 2z^2)|");
    add("laplacian-x2", worst_x <= 1e-6, worst_x, 1e-6, "|lap(x^2) - 2|");
  }

  const int n = vp.level;
  dp.extension.n_max = std::max(dp.extension.n_max, std::max(dp.level_hi, n));
  const auto ext = Extension::build(f, dp.extension);
  const Approximant a = build_approximant(*ext, n);

  {
    const double wb = a.coefficients().worst_balance();
    add("mass-balance", wb <= 1e-10, wb, 1e-10, "max_k |4 pi corrector mass + beta integral| / |beta integral|");
  }
  {
    const auto pts = tube_samples(curve, n, vp.harmonic_points);
    double worst = 0.0;
    for (const auto& m : pts) worst = std::max(worst, mean_value_check(a, m, 0.5 * a.nearest_source(m)).deviation);
    add("harmonicity", worst <= 1e-4, worst, 1e-4, "mean-value deviation at tube points, level " + std::to_string(n));
  }
  {
    double worst = 0.0;
    for (const auto& m : tube_samples(curve, n, 32)) {
      const double v = a.value(m), vu = a.v_part(m) + a.u_part(m);
      worst = std::max(worst, std::abs(v - vu) / std::max(std::abs(v), 1e-300));
    }
    add("v-equals-V-plus-U", worst <= 1e-12, worst, 1e-12, "relative difference");
  }
  const SourceSet full = reconstruction_sources(*ext);
  {
    const std::size_t ns = vp.representation_samples;
    std::vector<double> err(ns), ref(ns);
    parallel_for(ns, [&](std::size_t b, std::size_t e) {
      for (std::size_t j = b; j < e; ++j) {
        const double s = (j + 0.5) * L / ns;
        err[j] = reconstruct(full, curve.point_at(s)) - f(s);
        ref[j] = f(s);
      }
    });
    const double den = lp_mean(ref, 1.0, 2.0);
    const double rel = den > 0.0 ? lp_mean(err, 1.0, 2.0) / den : lp_mean(err, 1.0, 2.0);
    add("representation", rel <= vp.representation_tolerance, rel, vp.representation_tolerance,
        "relative L2 curve error of the full-grid potential");
  }
  {
    const SourceSet tube = tube_sources(*ext, n);
    double worst = 0.0;
    for (std::size_t j = 0; j < 16; ++j) {
      const ErrorSplit es = error_split(a, full, tube, curve.point_at((j + 0.5) * L / 16));
      worst = std::max(worst, std::abs(es.residual) / es.scale);
    }
    add("error-split-identity", worst <= 1e-12, worst, 1e-12, "|(v - fhat) - (tube + corrector)| / sum|terms|");
  }
  return out;
}

}  // namespace chordarc
