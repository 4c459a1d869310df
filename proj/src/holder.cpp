#include "chordarc/holder.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "chordarc/errors.hpp"
#include "chordarc/parallel.hpp"

namespace chordarc {

std::string to_string(FunctionSpec::Kind kind) {
  switch (kind) {
    case FunctionSpec::Kind::ArcPower: return "arc_power";
    case FunctionSpec::Kind::DistPower: return "dist_power";
    case FunctionSpec::Kind::Samples: return "samples";
    case FunctionSpec::Kind::Constant: return "constant";
  }
  return "unknown";
}

CurveFunction::CurveFunction(CurvePtr curve, std::vector<double> values)
    : curve_(std::move(curve)), values_(std::move(values)) {
  if (!curve_) throw InvalidInput("curve function needs a curve");
  if (values_.size() < 2) throw InvalidInput("curve function needs at least 2 nodes");
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidInput("curve function value is not finite");
  }
  step_ = curve_->length() / static_cast<double>(values_.size() - 1);
}

double CurveFunction::node_param(std::size_t i) const {
  if (i + 1 == values_.size()) return curve_->length();
  return static_cast<double>(i) * step_;
}

double CurveFunction::operator()(double s) const {
  const double x = std::clamp(s / step_, 0.0, static_cast<double>(values_.size() - 1));
  auto i = static_cast<std::size_t>(x);
  if (i + 1 >= values_.size()) return values_.back();
  const double t = x - static_cast<double>(i);
  return values_[i] + t * (values_[i + 1] - values_[i]);
}

CurveFunction CurveFunction::from_spec(CurvePtr curve, const FunctionSpec& spec, std::size_t nodes) {
  if (!curve) throw InvalidInput("function spec needs a curve");
  nodes = std::max(nodes, kMinFunctionNodes);
  const double len = curve->length();
  std::vector<double> v(nodes);
  auto param = [&](std::size_t i) {
    return i + 1 == nodes ? len : len * static_cast<double>(i) / static_cast<double>(nodes - 1);
  };
  switch (spec.kind) {
    case FunctionSpec::Kind::ArcPower:
      if (!(spec.alpha > 0.0)) throw InvalidInput("arc-power alpha must be positive");
      for (std::size_t i = 0; i < nodes; ++i) v[i] = std::pow(param(i), spec.alpha);
      break;
    case FunctionSpec::Kind::DistPower:
      if (!(spec.alpha > 0.0)) throw InvalidInput("dist-power alpha must be positive");
      for (std::size_t i = 0; i < nodes; ++i) {
        v[i] = std::pow(distance(curve->point_at(param(i)), spec.point), spec.alpha);
      }
      break;
    case FunctionSpec::Kind::Constant:
      if (!std::isfinite(spec.value)) throw InvalidInput("constant value is not finite");
      std::fill(v.begin(), v.end(), spec.value);
      break;
    case FunctionSpec::Kind::Samples: {
      if (spec.values.size() < 2) throw InvalidInput("samples need at least 2 values");
      CurveFunction coarse(curve, spec.values);
      for (std::size_t i = 0; i < nodes; ++i) v[i] = coarse(param(i));
      break;
    }
  }
  return CurveFunction(std::move(curve), std::move(v));
}

void HolderParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
  if (!(p * alpha > 1.0)) throw InvalidInput("p must exceed 1/alpha");
  if (!(eps > 0.0)) throw InvalidInput("eps must be positive");
  if (!(creg > 0.0)) throw InvalidInput("creg must be positive");
}

BallSlice ball_slice(const PolylineCurve& curve, double s0, double r, double step_fraction) {
  if (!(r > 0.0)) throw InvalidInput("ball radius must be positive");
  if (!(step_fraction > 0.0 && step_fraction <= 1.0)) throw InvalidInput("step fraction must lie in (0, 1]");
  const double len = curve.length();
  s0 = std::clamp(s0, 0.0, len);
  const Vec3 m = curve.point_at(s0);
  const double reach = curve.window_factor() * r;
  const double lo = std::max(0.0, s0 - reach);
  const double hi = std::min(len, s0 + reach);
  const double step = step_fraction * std::min(r, len);

  std::vector<double> ss;
  ss.reserve(static_cast<std::size_t>((hi - lo) / step) + 4);
  const auto jlo = static_cast<long>(std::ceil((lo - s0) / step));
  const auto jhi = static_cast<long>(std::floor((hi - s0) / step));
  ss.push_back(lo);
  for (long j = jlo; j <= jhi; ++j) {
    double s = j == 0 ? s0 : s0 + static_cast<double>(j) * step;
    if (s > lo && s < hi) ss.push_back(s);
  }
  if (hi > lo) ss.push_back(hi);
  if (!std::binary_search(ss.begin(), ss.end(), s0)) {
    ss.insert(std::lower_bound(ss.begin(), ss.end(), s0), s0);
  }

  const double r2 = r * r;
  auto inside = [&](double s) { return norm2(curve.point_at(s) - m) <= r2; };
  auto crossing = [&](double a, double b, bool a_in) {
    // a and b straddle the sphere; returns the last inside / first inside point.
    for (int it = 0; it < 60 && b - a > 1e-15 * len; ++it) {
      double mid = 0.5 * (a + b);
      if (inside(mid) == a_in) a = mid;
      else b = mid;
    }
    return a_in ? a : b;
  };

  BallSlice out;
  std::vector<char> flag(ss.size());
  for (std::size_t i = 0; i < ss.size(); ++i) flag[i] = inside(ss[i]) ? 1 : 0;
  std::size_t i = 0;
  while (i < ss.size()) {
    if (!flag[i]) {
      ++i;
      continue;
    }
    double start = ss[i];
    if (i > 0) {
      start = crossing(ss[i - 1], ss[i], false);
      out.samples.push_back(start);
    }
    std::size_t j = i;
    while (j + 1 < ss.size() && flag[j + 1]) ++j;
    for (std::size_t k = i; k <= j; ++k) {
      if (out.samples.empty() || ss[k] != out.samples.back()) out.samples.push_back(ss[k]);
    }
    double end = ss[j];
    if (j + 1 < ss.size()) {
      end = crossing(ss[j], ss[j + 1], true);
      if (end != out.samples.back()) out.samples.push_back(end);
    }
    out.intervals.emplace_back(start, end);
    i = j + 1;
  }
  return out;
}

ModulusSample delta_star_sample(const CurveFunction& f, double s0, double r, double step_fraction) {
  if (!(r > 0.0)) throw InvalidInput("delta_star radius must be positive");
  BallSlice slice = ball_slice(f.curve(), s0, r, step_fraction);
  const double f0 = f(s0);
  ModulusSample best{0.0, s0};
  for (double s : slice.samples) {
    double v = std::abs(f(s) - f0);
    if (v > best.value) best = {v, s};
  }
  return best;
}

double delta_star(const CurveFunction& f, const CurvePoint& m, double r, double step_fraction) {
  return delta_star_sample(f, m.s, r, step_fraction).value;
}

SeminormResult lp_seminorm(const CurveFunction& f, const HolderParams& params,
                           const std::vector<double>& r_grid, std::size_t nodes, double step_fraction) {
  if (r_grid.empty()) throw InvalidInput("lp_seminorm needs a nonempty radius grid");
  if (nodes < 4096) throw InvalidInput("lp_seminorm needs at least 4096 nodes");
  const double len = f.curve().length();
  const double w = len / static_cast<double>(nodes);
  SeminormResult out;
  std::vector<double> terms(nodes);
  for (double r : r_grid) {
    if (!(r > 0.0)) throw InvalidInput("seminorm radius must be positive");
    const double scale = std::pow(r, params.alpha);
    parallel_for(nodes, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        double s = (static_cast<double>(i) + 0.5) * w;
        terms[i] = std::pow(delta_star_sample(f, s, r, step_fraction).value / scale, params.p);
      }
    });
    double acc = 0.0;
    for (double t : terms) acc += t;
    double v = std::pow(acc * w, 1.0 / params.p);
    out.per_radius.emplace_back(r, v);
    out.value = std::max(out.value, v);
  }
  return out;
}

std::vector<RegularityProbe> standard_probes(const PolylineCurve& curve, int max_level, int grid_level) {
  if (max_level < 0 || grid_level < 0) throw InvalidInput("probe levels must be nonnegative");
  auto grid = dyadic_points(curve, grid_level);
  const double len = curve.length();
  std::vector<RegularityProbe> probes;
  for (int i = 0; i <= max_level; ++i) {
    const double big_r = std::ldexp(len, -i);
    for (int j = i; j <= max_level; ++j) {
      const double r = std::ldexp(len, -j);
      for (std::size_t k = 0; k < grid.points.size(); ++k) {
        const auto& m = grid.points[k];
        probes.push_back({m.s, m.s, r, big_r});
        for (int dk : {-1, 1}) {
          long kk = static_cast<long>(k) + dk;
          if (kk < 0 || kk >= static_cast<long>(grid.points.size())) continue;
          const auto& n = grid.points[static_cast<std::size_t>(kk)];
          if (distance(m.pos, n.pos) <= big_r) probes.push_back({m.s, n.s, r, big_r});
        }
      }
    }
  }
  return probes;
}

RegularityResult regularity_constant(const CurveFunction& f, double eps,
                                     const std::vector<RegularityProbe>& probes) {
  if (!(eps > 0.0)) throw InvalidInput("regularity exponent must be positive");
  std::map<std::pair<double, double>, double> memo;
  auto modulus = [&](double s, double r) {
    auto key = std::make_pair(s, r);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    double v = delta_star_sample(f, s, r).value;
    memo.emplace(key, v);
    return v;
  };
  RegularityResult out;
  double worst = -1.0;
  for (const auto& pr : probes) {
    if (!(pr.r > 0.0) || pr.r > pr.big_r) throw InvalidInput("regularity probe needs 0 < r <= R");
    double dm = modulus(pr.s_m, pr.r);
    double dn = modulus(pr.s_n, pr.big_r);
    if (dn == 0.0) {
      if (dm > 0.0) ++out.violations;
      continue;
    }
    ++out.informative;
    double ratio = dm / (std::pow(pr.r / pr.big_r, eps) * dn);
    if (ratio > worst) {
      worst = ratio;
      out.worst = pr;
    }
  }
  if (out.informative > 0) out.constant = worst;
  return out;
}

double uniform_holder_constant(const CurveFunction& f, double alpha, const UniformProbeSet& probes) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
  if (probes.radius_substeps < 1) throw InvalidInput("radius substeps must be positive");
  auto grid = dyadic_points(f.curve(), probes.point_level);
  const double len = f.curve().length();
  const int steps = probes.radius_levels * probes.radius_substeps;
  std::vector<double> best(grid.points.size(), 0.0);
  parallel_for(grid.points.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      for (int t = 0; t <= steps; ++t) {
        double r = len * std::exp2(-static_cast<double>(t) / probes.radius_substeps);
        double v = delta_star_sample(f, grid.points[k].s, r).value / std::pow(r, alpha);
        best[k] = std::max(best[k], v);
      }
    }
  });
  return *std::max_element(best.begin(), best.end());
}

double max_delta(const CurveFunction& f, double s0, double delta, double step_fraction) {
  if (!(delta > 0.0)) throw InvalidInput("max_delta radius must be positive");
  BallSlice slice = ball_slice(f.curve(), s0, delta, step_fraction);
  double best = std::abs(f(s0));
  const auto& v = f.values();
  const double h = f.step();
  for (const auto& [a, b] : slice.intervals) {
    best = std::max({best, std::abs(f(a)), std::abs(f(b))});
    auto i0 = static_cast<std::size_t>(std::max(0.0, std::ceil(a / h)));
    auto i1 = std::min(v.size() - 1, static_cast<std::size_t>(std::max(0.0, std::floor(b / h))));
    for (std::size_t i = i0; i <= i1; ++i) {
      double s = f.node_param(i);
      if (s >= a && s <= b) best = std::max(best, std::abs(v[i]));
    }
  }
  for (double s : slice.samples) best = std::max(best, std::abs(f(s)));
  return best;
}

void ConstantsLedger::set(const std::string& name, double value, std::string note) {
  if (!std::isfinite(value) || !(value > 0.0)) {
    throw InvalidInput("ledger constant '" + name + "' must be finite and positive");
  }
  entries_[name] = {value, std::move(note)};
}

double ConstantsLedger::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw InvalidInput("ledger has no constant '" + name + "'");
  return it->second.value;
}

}  // namespace chordarc
