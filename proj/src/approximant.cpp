#include "chordarc/approximant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "chordarc/errors.hpp"
#include "chordarc/parallel.hpp"
#include "chordarc/quadrature.hpp"

namespace chordarc {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Per-leaf index of the beta set at level n: the first dyadic ball
// containing the center, -1 outside Omega*_n.
std::vector<int> beta_index(const Extension& ext, int n) {
  const auto& leaves = ext.grid().leaves();
  const DyadicTable& table = ext.table();
  std::vector<int> out(leaves.size(), -1);
  parallel_for(leaves.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& lf = leaves[i];
      if (!table.in_omega_star(n, lf.center, lf.s, lf.d)) continue;
      int k = table.first_ball(n, lf.center, lf.s, lf.d);
      out[i] = k < 0 ? 0 : k;
    }
  });
  return out;
}

bool in_omega(const Extension& ext, int n, std::size_t leaf) {
  const auto& lf = ext.grid().leaves()[leaf];
  return ext.table().in_omega_star(n, lf.center, lf.s, lf.d);
}

int shell_of(const Extension& ext, std::size_t leaf) { return ext.omega_level()[leaf] + 1; }

void check_level(const Extension& ext, int n) {
  if (n < 0 || n > ext.params().n_max) {
    throw InvalidInput("approximant level " + std::to_string(n) + " outside the extension's range 0.." +
                       std::to_string(ext.params().n_max));
  }
}

}  // namespace

const char* to_string(Origin o) { return o == Origin::LaplacianCell ? "laplacian-cell" : "corrector"; }

void SourceSet::push(const Vec3& p, double mass, Origin o, std::int64_t cell, int nu) {
  x.push_back(p.x);
  y.push_back(p.y);
  z.push_back(p.z);
  q.push_back(mass);
  tag.push_back(o);
  id.push_back(cell);
  shell.push_back(nu);
}

kernels::SourceView SourceSet::view(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw InvalidInput("source range out of bounds");
  return view().slice(begin, end);
}

double SourceSet::total_mass() const {
  kernels::Neumaier acc;
  for (double v : q) acc.add(v);
  return acc.value();
}

double SourceSet::abs_mass() const {
  kernels::Neumaier acc;
  for (double v : q) acc.add(std::abs(v));
  return acc.value();
}

double CorrectorCoefficients::worst_balance() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < beta_integral.size(); ++k) {
    if (beta_integral[k] == 0.0 || gamma[k] == 0.0) continue;
    const double m = k < corrector_mass.size() ? corrector_mass[k] : 0.0;
    worst = std::max(worst, std::abs(kFourPi * m + beta_integral[k]) / std::abs(beta_integral[k]));
  }
  return worst;
}

double outside_fraction(const PolylineCurve& curve, const DyadicSubdivision& sub, const Vec3& center,
                        double radius, int lattice) {
  if (lattice < 2) throw InvalidInput("lattice must have at least 2 points per axis");
  const bool fiat = sub.level == 0;
  const double rr = fiat ? 2.0 * curve.length() : 2.0 * sub.spacing;
  std::vector<Vec3> near;
  if (fiat) {
    near.push_back(curve.start());
  } else {
    for (const auto& p : sub.points) {
      if (distance(p.pos, center) <= radius + rr) near.push_back(p.pos);
    }
  }
  const double rr2 = rr * rr, r2 = radius * radius;
  const double step = 2.0 * radius / lattice;
  std::size_t in_ball = 0, outside = 0;
  for (int k = 0; k < lattice; ++k) {
    const double z = -radius + (k + 0.5) * step;
    for (int j = 0; j < lattice; ++j) {
      const double y = -radius + (j + 0.5) * step;
      for (int i = 0; i < lattice; ++i) {
        const double x = -radius + (i + 0.5) * step;
        if (x * x + y * y + z * z > r2) continue;
        ++in_ball;
        const Vec3 p = center + Vec3{x, y, z};
        bool inside = false;
        for (const auto& c : near) {
          if (norm2(p - c) <= rr2) {
            inside = true;
            break;
          }
        }
        if (!inside) ++outside;
      }
    }
  }
  return in_ball == 0 ? 0.0 : static_cast<double>(outside) / static_cast<double>(in_ball);
}

C11Result c11_search(const PolylineCurve& curve, int n, int lattice) {
  if (n < 0 || n > 20) throw InvalidInput("c11 search level must lie in [0, 20]");
  const DyadicSubdivision pts = dyadic_points(curve, n);
  const DyadicSubdivision coarse = dyadic_points(curve, std::max(n - 2, 0));
  C11Result out;
  double prev = 0.0;
  for (int c = 2; c <= 32; ++c) {
    const double radius = c * pts.spacing;
    std::vector<double> frac(pts.points.size());
    parallel_for(frac.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) frac[k] = outside_fraction(curve, coarse, pts.points[k].pos, radius, lattice);
    });
    const double worst = *std::min_element(frac.begin(), frac.end());
    if (worst >= 0.5) {
      out.c11 = c;
      out.worst_fraction = worst;
      out.previous_fraction = prev;
      return out;
    }
    prev = worst;
  }
  throw ConstructionError("no c11 in [2, 32] satisfies the half-volume condition at level " + std::to_string(n));
}

Approximant::Approximant(int level, double length, SourceSet sources, std::size_t v_count,
                         CorrectorCoefficients coeffs)
    : level_(level),
      length_(length),
      lambda_(std::ldexp(length, -level)),
      sources_(std::move(sources)),
      v_count_(v_count),
      coeffs_(std::move(coeffs)) {
  if (v_count_ > sources_.size()) throw InvalidInput("V part larger than the source set");
}

double Approximant::value(const Vec3& m) const { return kernels::potential(sources_.view(), m); }
double Approximant::v_part(const Vec3& m) const { return kernels::potential(v_view(), m); }
double Approximant::u_part(const Vec3& m) const { return kernels::potential(u_view(), m); }
Vec3 Approximant::gradient(const Vec3& m) const { return kernels::gradient(sources_.view(), m); }
Vec3 Approximant::v_gradient(const Vec3& m) const { return kernels::gradient(v_view(), m); }
Vec3 Approximant::u_gradient(const Vec3& m) const { return kernels::gradient(u_view(), m); }

double Approximant::nearest_source(const Vec3& m) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    const double dx = sources_.x[i] - m.x, dy = sources_.y[i] - m.y, dz = sources_.z[i] - m.z;
    best = std::min(best, dx * dx + dy * dy + dz * dz);
  }
  return std::sqrt(best);
}

CorrectorCoefficients corrector_coefficients(const Extension& ext, int n, double c11) {
  check_level(ext, n);
  const PolylineCurve& curve = ext.grid().curve();
  const DyadicTable& table = ext.table();
  const CurveFunction& f = ext.function();
  const auto& leaves = ext.grid().leaves();
  const double lam = table.spacing(n);

  CorrectorCoefficients co;
  co.level = n;
  co.c11 = c11 > 0.0 ? c11 : static_cast<double>(c11_search(curve, n).c11);
  co.c5 = ext.fit().c5;
  co.b = curve.sampled_chord_arc();
  const std::size_t count = table.count(n);
  co.c.assign(count, 0.0);
  co.gamma.assign(count, 0.0);
  co.modulus.assign(count, 0.0);
  co.beta_integral.assign(count, 0.0);
  co.chi_volume.assign(count, 0.0);
  co.chi_cells.assign(count, 0);

  const double mod_radius = (co.c5 + 2.0 * co.b) * lam;
  parallel_for(count, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) co.modulus[k] = delta_star_sample(f, table.point(n, k).s, mod_radius).value;
  });

  const std::vector<int> beta = beta_index(ext, n);
  std::vector<kernels::Neumaier> ib(count), vol(count);
  const double chi_r = co.c11 * lam;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const auto& lf = leaves[i];
    if (beta[i] >= 0) {
      ib[static_cast<std::size_t>(beta[i])].add(ext.lap()[i] * lf.volume());
      continue;
    }
    if (in_omega(ext, n, i)) continue;
    auto [lo, hi] = table.window(n, lf.s, lf.d, chi_r);
    for (std::size_t k = lo; k <= hi && k < count; ++k) {
      if (distance(lf.center, table.point(n, k).pos) <= chi_r) {
        vol[k].add(lf.volume());
        ++co.chi_cells[k];
      }
    }
  }

  double fmax = 0.0;
  for (double v : f.values()) fmax = std::max(fmax, std::abs(v));
  const double noise = 1e-9 * std::max(fmax, 1e-300) * lam;
  for (std::size_t k = 0; k < count; ++k) {
    const double I = ib[k].value();
    const double V = vol[k].value();
    const double mod = co.modulus[k];
    co.beta_integral[k] = I;
    co.chi_volume[k] = V;
    if (mod > 0.0) co.c[k] = I / (lam * mod);
    if (I == 0.0) continue;
    if (mod == 0.0) {
      if (std::abs(I) <= noise) continue;
      throw ConstructionError("level " + std::to_string(n) + ", k = " + std::to_string(k) +
                              ": modulus vanishes while the beta integral is " + num(I));
    }
    if (!(V > 0.0)) {
      throw ConstructionError("level " + std::to_string(n) + ", k = " + std::to_string(k) +
                              ": corrector support has zero volume on the grid");
    }
    co.gamma[k] = -I / (mod * V / (lam * lam));
  }
  return co;
}

Approximant assemble(const Extension& ext, int n, const CorrectorCoefficients& coeffs_in) {
  check_level(ext, n);
  const DyadicTable& table = ext.table();
  const auto& leaves = ext.grid().leaves();
  const double lam = table.spacing(n);
  const std::size_t count = table.count(n);
  CorrectorCoefficients co = coeffs_in;
  if (co.gamma.size() != count || co.modulus.size() != count || co.level != n) {
    throw InvalidInput("corrector coefficients do not match level " + std::to_string(n));
  }

  std::vector<char> outside(leaves.size(), 0);
  parallel_for(leaves.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (!in_omega(ext, n, i)) outside[i] = 1;
    }
  });

  auto guard = [&](std::size_t i) {
    if (!(leaves[i].d > lam)) {
      throw ConstructionError("source cell " + std::to_string(i) + " lies in the tube of radius Lambda_" +
                              std::to_string(n));
    }
  };

  SourceSet src;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (!outside[i] || ext.lap()[i] == 0.0) continue;
    guard(i);
    src.push(leaves[i].center, -ext.lap()[i] * leaves[i].volume() / kFourPi, Origin::LaplacianCell,
             static_cast<std::int64_t>(i), shell_of(ext, i));
  }
  const std::size_t v_count = src.size();

  std::vector<double> amp(count);
  for (std::size_t k = 0; k < count; ++k) amp[k] = co.gamma[k] * co.modulus[k] / (lam * lam);
  std::vector<kernels::Neumaier> mass(count);
  const double chi_r = co.c11 * lam;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (!outside[i]) continue;
    const auto& lf = leaves[i];
    auto [lo, hi] = table.window(n, lf.s, lf.d, chi_r);
    kernels::Neumaier phi;
    bool any = false;
    for (std::size_t k = lo; k <= hi && k < count; ++k) {
      if (amp[k] == 0.0) continue;
      if (distance(lf.center, table.point(n, k).pos) > chi_r) continue;
      phi.add(amp[k]);
      mass[k].add(amp[k] * lf.volume() / kFourPi);
      any = true;
    }
    if (!any) continue;
    guard(i);
    src.push(lf.center, phi.value() * lf.volume() / kFourPi, Origin::Corrector, static_cast<std::int64_t>(i),
             shell_of(ext, i));
  }
  co.corrector_mass.assign(count, 0.0);
  for (std::size_t k = 0; k < count; ++k) co.corrector_mass[k] = mass[k].value();
  return Approximant(n, ext.grid().curve().length(), std::move(src), v_count, std::move(co));
}

Approximant build_approximant(const Extension& ext, int n) { return assemble(ext, n, corrector_coefficients(ext, n)); }

std::vector<double> evaluate_many(const Approximant& a, const std::vector<Vec3>& pts) {
  std::vector<double> out(pts.size());
  parallel_for(pts.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = a.value(pts[i]);
  });
  return out;
}

std::vector<Vec3> grad_star_offsets(int density) {
  if (density < 1 || density > 2) throw InvalidInput("grad_star density must be 1 or 2");
  std::vector<Vec3> out{{0, 0, 0}};
  const int shells = 2 * density;
  for (int s = 1; s <= shells; ++s) {
    const double r = static_cast<double>(s) / shells;
    for (const auto& d : cube_directions()) out.push_back(d * r);
  }
  for (const auto& p : halton_ball(50 * density)) out.push_back(p);
  return out;
}

double grad_star(const Approximant& a, const Vec3& m, double delta, int density) {
  if (!(delta > 0.0)) throw InvalidInput("grad_star radius must be positive");
  const double half = 0.5 * delta;
  if (!(half < a.nearest_source(m))) throw InvalidInput("grad_star ball leaves the harmonicity domain");
  double best = 0.0;
  for (const auto& o : grad_star_offsets(density)) best = std::max(best, norm(a.gradient(m + o * half)));
  return best;
}

SourceSet reconstruction_sources(const Extension& ext) {
  const auto& leaves = ext.grid().leaves();
  SourceSet s;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (ext.lap()[i] == 0.0) continue;
    s.push(leaves[i].center, -ext.lap()[i] * leaves[i].volume() / kFourPi, Origin::LaplacianCell,
           static_cast<std::int64_t>(i), shell_of(ext, i));
  }
  return s;
}

SourceSet tube_sources(const Extension& ext, int n) {
  check_level(ext, n);
  const auto& leaves = ext.grid().leaves();
  const std::vector<int> beta = beta_index(ext, n);
  SourceSet s;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (beta[i] < 0 || ext.lap()[i] == 0.0) continue;
    s.push(leaves[i].center, ext.lap()[i] * leaves[i].volume() / kFourPi, Origin::LaplacianCell,
           static_cast<std::int64_t>(i), shell_of(ext, i));
  }
  return s;
}

double reconstruct(const SourceSet& full, const Vec3& m) { return kernels::potential(full.view(), m); }

namespace {

double abs_potential(const kernels::SourceView& v, const Vec3& m) {
  kernels::Neumaier acc;
  for (std::size_t i = 0; i < v.n; ++i) {
    const double dx = v.x[i] - m.x, dy = v.y[i] - m.y, dz = v.z[i] - m.z;
    acc.add(std::abs(v.q[i]) / std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  return acc.value();
}

}  // namespace

ErrorSplit error_split(const Approximant& a, const SourceSet& full, const SourceSet& tube, const Vec3& m) {
  ErrorSplit e;
  e.v = a.value(m);
  e.fhat = reconstruct(full, m);
  e.tube = kernels::potential(tube.view(), m);
  e.corrector = a.u_part(m);
  e.residual = (e.v - e.fhat) - (e.tube + e.corrector);
  e.scale = abs_potential(full.view(), m) + abs_potential(a.u_view(), m);
  return e;
}

MeanValueCheck mean_value_check(const Approximant& a, const Vec3& m, double rho) {
  if (!(rho > 0.0)) throw InvalidInput("sphere radius must be positive");
  static const SphereRule rule = sphere_rule(16, 32);
  MeanValueCheck out;
  out.center = a.value(m);
  std::vector<double> vals(rule.dirs.size());
  parallel_for(vals.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) vals[i] = a.value(m + rule.dirs[i] * rho);
  });
  kernels::Neumaier acc;
  for (std::size_t i = 0; i < vals.size(); ++i) acc.add(rule.weights[i] * vals[i]);
  out.average = acc.value();
  double scale = std::abs(out.center);
  const double near = a.nearest_source(m);
  const double fallback = std::isfinite(near) ? a.sources().abs_mass() / near : 0.0;
  if (scale < 1e-12 * fallback) scale = fallback;
  const double diff = std::abs(out.average - out.center);
  out.deviation = scale > 0.0 ? diff / scale : diff;
  return out;
}

std::vector<double> shell_potentials(const Approximant& a, const Vec3& m) {
  const SourceSet& s = a.sources();
  int top = 0;
  for (std::size_t i = 0; i < a.v_count(); ++i) top = std::max(top, s.shell[i]);
  std::vector<kernels::Neumaier> acc(static_cast<std::size_t>(top) + 1);
  for (std::size_t i = 0; i < a.v_count(); ++i) {
    const double r = norm(s.position(i) - m);
    if (r == 0.0) throw SingularInput("potential evaluated at a source position");
    acc[static_cast<std::size_t>(s.shell[i])].add(s.q[i] / r);
  }
  std::vector<double> out;
  for (const auto& x : acc) out.push_back(x.value());
  return out;
}

namespace {

void write_array(std::ostream& os, const char* key, const std::vector<double>& v) {
  os << '"' << key << "\":[";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << num(v[i]);
  os << ']';
}

std::vector<double> read_array(const nlohmann::json& j, const char* key) {
  std::vector<double> out;
  for (const auto& x : j.at(key)) out.push_back(x.get<double>());
  return out;
}

}  // namespace

void write_dump(std::ostream& os, const Approximant& a) {
  const auto& co = a.coefficients();
  os << "{\"format\":\"chordarc-approximant\",\"level\":" << a.level() << ",\"length\":" << num(a.curve_length())
     << ",\"c11\":" << num(co.c11) << ",\"c5\":" << num(co.c5) << ",\"b\":" << num(co.b)
     << ",\"v_count\":" << a.v_count() << ",\"u_count\":" << a.u_count() << ',';
  write_array(os, "c", co.c);
  os << ',';
  write_array(os, "gamma", co.gamma);
  os << ',';
  write_array(os, "modulus", co.modulus);
  os << ',';
  write_array(os, "beta_integral", co.beta_integral);
  os << ',';
  write_array(os, "chi_volume", co.chi_volume);
  os << ',';
  write_array(os, "corrector_mass", co.corrector_mass);
  os << "}\n";
  const SourceSet& s = a.sources();
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << "{\"x\":" << num(s.x[i]) << ",\"y\":" << num(s.y[i]) << ",\"z\":" << num(s.z[i]) << ",\"q\":" << num(s.q[i])
       << ",\"tag\":\"" << to_string(s.tag[i]) << "\",\"cell\":" << s.id[i] << ",\"shell\":" << s.shell[i] << "}\n";
  }
}

Approximant read_dump(std::istream& is, const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) -> ConstructionError {
    return ConstructionError(name + ":" + std::to_string(lineno) + ": " + what);
  };
  if (!std::getline(is, line)) {
    lineno = 1;
    throw fail("empty dump");
  }
  lineno = 1;
  int level = 0;
  double length = 0.0;
  std::size_t v_count = 0, u_count = 0;
  CorrectorCoefficients co;
  try {
    const auto h = nlohmann::json::parse(line);
    if (h.at("format").get<std::string>() != "chordarc-approximant") throw fail("unknown dump format");
    level = h.at("level").get<int>();
    length = h.at("length").get<double>();
    v_count = h.at("v_count").get<std::size_t>();
    u_count = h.at("u_count").get<std::size_t>();
    co.level = level;
    co.c11 = h.at("c11").get<double>();
    co.c5 = h.at("c5").get<double>();
    co.b = h.at("b").get<double>();
    co.c = read_array(h, "c");
    co.gamma = read_array(h, "gamma");
    co.modulus = read_array(h, "modulus");
    co.beta_integral = read_array(h, "beta_integral");
    co.chi_volume = read_array(h, "chi_volume");
    co.corrector_mass = read_array(h, "corrector_mass");
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("bad header: ") + e.what());
  }
  if (level < 0 || level > kMaxDyadicLevel || !(length > 0.0)) throw fail("header out of range");
  SourceSet s;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string tag = j.at("tag").get<std::string>();
      Origin o;
      if (tag == "laplacian-cell") o = Origin::LaplacianCell;
      else if (tag == "corrector") o = Origin::Corrector;
      else throw fail("unknown tag '" + tag + "'");
      const Vec3 p{j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>()};
      const double q = j.at("q").get<double>();
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) || !std::isfinite(q)) {
        throw fail("non-finite mass");
      }
      s.push(p, q, o, j.at("cell").get<std::int64_t>(), j.at("shell").get<int>());
    } catch (const nlohmann::json::exception& e) {
      throw fail(std::string("bad mass record: ") + e.what());
    }
  }
  if (s.size() != v_count + u_count) throw fail("mass count does not match the header");
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Origin want = i < v_count ? Origin::LaplacianCell : Origin::Corrector;
    if (s.tag[i] != want) {
      lineno = i + 2;
      throw fail("mass out of order");
    }
  }
  return Approximant(level, length, std::move(s), v_count, std::move(co));
}

}  // namespace chordarc
