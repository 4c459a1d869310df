// Acceptance run: one PASS/FAIL line per criterion, plus acceptance.json in
// the output directory. Exit status 0 only when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "chordarc/approximant.hpp"
#include "chordarc/commands.hpp"
#include "chordarc/harness.hpp"
#include "chordarc/io.hpp"
#include "chordarc/regularized_distance.hpp"

using namespace chordarc;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CurveFunction s_power(CurvePtr c) {
  FunctionSpec spec;
  spec.alpha = 0.6;
  return CurveFunction::from_spec(std::move(c), spec);
}

HolderParams holder() {
  HolderParams h;
  h.alpha = 0.6;
  h.p = 2.0;
  return h;
}

// Levels 0..5 are built; 2..5 are fitted, 0..4 feed the inverse run.
DirectParams family_params() {
  DirectParams p;
  p.holder = holder();
  p.level_lo = 0;
  p.level_hi = 5;
  p.fit_level_lo = 2;
  return p;
}

std::map<std::string, DirectRun> g_runs;

const DirectRun& family(const std::string& which) {
  auto it = g_runs.find(which);
  if (it == g_runs.end()) {
    const CurvePtr c = which == "segment" ? make_segment(1.0) : make_helix();
    it = g_runs.emplace(which, run_direct(s_power(c), family_params())).first;
  }
  return it->second;
}

// Extension shared by the mass-balance and harmonicity criteria.
std::shared_ptr<const Extension> g_segment_ext;

const Extension& segment_extension() {
  if (!g_segment_ext) {
    ExtensionParams p;
    p.n_max = 4;
    g_segment_ext = Extension::build(s_power(make_segment(1.0)), p);
  }
  return *g_segment_ext;
}

double per_decade_ratio(const std::vector<double>& d, const std::vector<double>& v) {
  double mx[3] = {0, 0, 0};
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int dec = std::clamp(static_cast<int>(std::floor(-std::log10(d[i]))), 0, 2);
    mx[dec] = std::max(mx[dec], v[i]);
  }
  const double lo = *std::min_element(mx, mx + 3);
  return lo > 0.0 ? *std::max_element(mx, mx + 3) / lo : INFINITY;
}

Outcome check_chord_arc() {
  const double seg = chord_arc_constant(*make_segment(1.0), 512);
  const double semi = chord_arc_constant(*make_semicircle(1.0), 512);
  const double exact = (std::numbers::pi / 2) / std::sin(std::numbers::pi / 2);
  const double rel = std::abs(semi - exact) / exact;
  return {seg == 1.0 && rel <= 0.01,
          "segment b = " + fmt("%.17g", seg) + "; semicircle b = " + fmt("%.6f", semi) + " (rel. error " +
              fmt("%.2e", rel) + ", tol 1e-2)"};
}

Outcome check_regularized_distance() {
  bool pass = true;
  std::string detail;
  for (auto [name, curve] : {std::pair{"segment", make_segment(1.0)}, std::pair{"helix", make_helix()}}) {
    const double L = curve->length();
    const auto pts = distance_samples(*curve, 10000, 1e-3, 1.0);
    RegularizedDistance rd(curve);
    RegularizedDistance::Evaluator ev(rd);
    std::vector<double> d(pts.size()), g(pts.size()), h(pts.size());
    double rmin = INFINITY, rmax = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto v = ev(pts[i]);
      rmin = std::min(rmin, v.d0 / v.d);
      rmax = std::max(rmax, v.d0 / v.d);
      d[i] = v.d / L;
      g[i] = norm(v.grad);
      h[i] = v.hess_norm * v.d;
    }
    const double gr = per_decade_ratio(d, g), hr = per_decade_ratio(d, h);
    const bool ok = rmin > 0.0 && rmax <= 1.0 / 16.0 && gr <= 1.5 && hr <= 1.5;
    pass = pass && ok;
    detail += std::string(detail.empty() ? "" : "; ") + name + ": d0/d in [" + fmt("%.4g", rmin) + ", " +
              fmt("%.4g", rmax) + "], grad ratio " + fmt("%.3f", gr) + ", hess*d ratio " + fmt("%.3f", hr);
  }
  return {pass, detail + " (tol 1/16, 1.5, 1.5)"};
}

Outcome check_laplacian() {
  const auto harm = [](const Vec3& m) { return m.x * m.x + m.y * m.y - 2.0 * m.z * m.z; };
  const auto x2 = [](const Vec3& m) { return m.x * m.x; };
  double wh = 0.0, wx = 0.0;
  for (auto curve : {make_segment(1.0), make_helix()}) {
    const double h = 1e-2 * curve->length();
    for (const auto& m : distance_samples(*curve, 200, 1e-2, 1.0)) {
      wh = std::max(wh, std::abs(laplacian_fd(harm, m, h)));
      wx = std::max(wx, std::abs(laplacian_fd(x2, m, h) - 2.0));
    }
  }
  return {wh <= 1e-8 && wx <= 1e-6,
          "max |lap(x^2+y^2-2z^2)| = " + fmt("%.3e", wh) + " (tol 1e-8); max |lap(x^2) - 2| = " + fmt("%.3e", wx) +
              " (tol 1e-6)"};
}

Outcome check_mass_balance() {
  const Extension& ext = segment_extension();
  bool pass = true;
  std::string detail;
  for (int n : {3, 4}) {
    const double wb = build_approximant(ext, n).coefficients().worst_balance();
    pass = pass && wb <= 1e-10;
    detail += std::string(detail.empty() ? "" : "; ") + "n = " + std::to_string(n) + ": " + fmt("%.3e", wb);
  }
  return {pass, "worst per-k relative balance " + detail + " (tol 1e-10)"};
}

Outcome check_harmonicity() {
  const Extension& ext = segment_extension();
  const Approximant a = build_approximant(ext, 4);
  double worst = 0.0;
  const auto pts = tube_samples(ext.grid().curve(), 4, 100);
  for (const auto& m : pts) worst = std::max(worst, mean_value_check(a, m, 0.5 * a.nearest_source(m)).deviation);
  return {worst <= 1e-4, std::to_string(pts.size()) + " tube points at n = 4, max relative deviation " +
                             fmt("%.3e", worst) + " (tol 1e-4)"};
}

Outcome check_representation() {
  const CurvePtr helix = make_helix();
  const CurveFunction f = s_power(helix);
  const double L = helix->length();
  std::vector<double> rel;
  std::string detail;
  for (std::size_t budget : {200000u, 400000u, 800000u}) {
    ExtensionParams p;
    p.n_max = 5;
    p.budget = budget;
    const auto ext = Extension::build(f, p);
    const SourceSet full = reconstruction_sources(*ext);
    double num = 0.0, den = 0.0;
    const int ns = 256;
    for (int j = 0; j < ns; ++j) {
      const double s = (j + 0.5) * L / ns;
      const double e = reconstruct(full, helix->point_at(s)) - f(s);
      num += e * e;
      den += f(s) * f(s);
    }
    rel.push_back(std::sqrt(num / den));
    detail += std::string(detail.empty() ? "" : ", ") + std::to_string(ext->grid().leaf_count()) + " cells: " +
              fmt("%.5f", rel.back());
  }
  bool pass = rel[0] <= 0.10;
  for (std::size_t i = 1; i < rel.size(); ++i) pass = pass && rel[i] <= rel[i - 1] + 1e-3;
  return {pass, "relative L2 error " + detail + " (tol 0.10 at the first budget; each step improves or matches within 1e-3)"};
}

Outcome check_direct() {
  bool pass = true;
  std::string detail;
  for (const char* which : {"segment", "helix"}) {
    const auto& r = family(which).result;
    bool ok = r.fit.has_value();
    for (const auto& lr : r.levels) ok = ok && lr.ok();
    const double slope = r.fit ? r.fit->slope : NAN;
    ok = ok && slope >= 0.4 && slope <= 0.8 && r.quantity3_ratio <= 4.0 && r.quantity4_ratio <= 4.0;
    pass = pass && ok;
    detail += std::string(detail.empty() ? "" : "; ") + which + ": slope " + fmt("%.4f", slope) +
              " over levels " + std::to_string(r.fit_lo) + ".." + std::to_string(r.fit_hi) + ", q3 max/min " +
              fmt("%.3f", r.quantity3_ratio) + ", q4 max/min " + fmt("%.3f", r.quantity4_ratio);
  }
  return {pass, detail + " (slope in [0.4, 0.8], ratios <= 4)"};
}

Outcome check_inverse() {
  bool pass = true;
  std::string detail;
  for (const char* which : {"segment", "helix"}) {
    const auto& run = family(which);
    InverseParams ip;
    ip.holder = holder();
    const CurvePtr c = run.extension->grid().curve_ptr();
    const auto inv = run_inverse(s_power(c), run.family, ip);
    bool ok = inv.missing_levels.empty() && inv.radii.size() == 5;
    for (const auto& ir : inv.radii) ok = ok && ir.ok();
    ok = ok && inv.ratio <= 4.0 && inv.violations == 0;
    pass = pass && ok;
    detail += std::string(detail.empty() ? "" : "; ") + which + ": seminorm max/min " + fmt("%.3f", inv.ratio) +
              " over k = 2..6, violations " + std::to_string(inv.violations);
  }
  return {pass, detail + " (ratio <= 4, zero violations)"};
}

Outcome check_embedding() {
  bool pass = true;
  std::string detail;
  for (auto [name, curve] : {std::pair{"segment", make_segment(1.0)}, std::pair{"helix", make_helix()}}) {
    const auto e = embedding_check(s_power(curve), holder());
    const bool ok = std::isfinite(e.constant) && e.constant > 0.0 && e.relative_change <= 0.10;
    pass = pass && ok;
    detail += std::string(detail.empty() ? "" : "; ") + name + ": constant " + fmt("%.5f", e.constant) +
              ", doubled " + fmt("%.5f", e.constant_doubled) + " (change " + fmt("%.2e", e.relative_change) + ")";
  }
  return {pass, "exponent 0.1; " + detail + " (tol 10%)"};
}

Outcome check_determinism(const std::string& out) {
  RunConfig cfg = parse_config(R"({"curve": {"kind": "segment"}, "function": {"kind": "arc_power", "alpha": 0.6}})");
  std::vector<std::string> dirs{out + "/determinism_a", out + "/determinism_b"};
  std::ostringstream sink;
  for (const auto& d : dirs) {
    fs::remove_all(d);
    cfg.output = d;
    if (cmd_direct(cfg, sink) != kExitOk) return {false, "cmd_direct failed in " + d};
  }
  std::vector<std::string> files{"direct.json", "direct.csv"};
  for (const auto& e : fs::directory_iterator(dirs[0] + "/approximants"))
    files.push_back("approximants/" + e.path().filename().string());
  std::sort(files.begin(), files.end());
  std::string differ;
  for (const auto& f : files)
    if (read_file(dirs[0] + "/" + f) != read_file(dirs[1] + "/" + f)) differ += " " + f;
  return {differ.empty(), std::to_string(files.size()) + " artifacts compared" +
                              (differ.empty() ? ", all byte-identical" : "; differing:" + differ)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string out = argc > 1 ? argv[1] : "acceptance_out";
  fs::create_directories(out);

  std::vector<Criterion> criteria{
      {1, "chord-arc constants", 1, check_chord_arc},
      {2, "regularized distance", 30, check_regularized_distance},
      {3, "laplacian correctness", 1, check_laplacian},
      {4, "mass balance", 60, check_mass_balance},
      {5, "harmonicity", 60, check_harmonicity},
      {6, "representation", 300, check_representation},
      {7, "direct rates", 1200, check_direct},  // 10 min per curve, two curves
      {8, "inverse bound", 300, check_inverse},
      {9, "embedding", 60, check_embedding},
      {10, "determinism", INFINITY, [&] { return check_determinism(out); }},
  };

  JsonWriter w;
  w.begin_object();
  w.key("criteria").begin_array();
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("criterion %2d %-22s %s  %s; %.1f s%s\n", c.id, c.name.c_str(), pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs,
                std::isfinite(c.limit_seconds) ? (in_time ? " (within limit)" : " (over the time limit)") : "");
    std::fflush(stdout);
    w.begin_object();
    w.field("id", c.id).field("name", c.name).field("passed", pass).field("detail", o.detail);
    w.end_object();
  }
  w.end_array();
  w.field("failed", failed);
  w.end_object();
  write_atomic(out + "/acceptance.json", w.str());
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
