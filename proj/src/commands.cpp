#include "chordarc/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "chordarc/approximant.hpp"
#include "chordarc/io.hpp"
#include "chordarc/parallel.hpp"

namespace chordarc {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// Timestamps and wall times live only here, so artifacts stay byte-stable.
class RunLog {
 public:
  RunLog(const std::string& dir, const std::string& command) : t0_(Clock::now()) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    os_.open(join(dir, "run.log"), std::ios::app);
    const std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", std::localtime(&now));
    line(std::string(buf) + " " + command + " threads=" + std::to_string(thread_count()));
  }
  ~RunLog() {
    char buf[64];
    std::snprintf(buf, sizeof buf, "done in %.3f s", seconds());
    line(buf);
  }
  void line(const std::string& s) {
    if (os_) os_ << s << '\n' << std::flush;
  }
  double seconds() const { return std::chrono::duration<double>(Clock::now() - t0_).count(); }

 private:
  std::ofstream os_;
  Clock::time_point t0_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void write_curve_block(JsonWriter& w, const PolylineCurve& c) {
  w.key("curve").begin_object();
  w.field("length", c.length());
  w.field("vertices", c.vertices().size());
  w.field("chord_arc_sampled", c.sampled_chord_arc());
  w.end_object();
}

void write_ledger(JsonWriter& w, const ConstantsLedger& ledger) {
  w.key("ledger").begin_object();
  for (const auto& [name, e] : ledger.entries()) {
    w.key(name).begin_object();
    w.field("value", e.value).field("note", e.note);
    w.end_object();
  }
  w.end_object();
}

void config_block(JsonWriter& w, const RunConfig& cfg) {
  // re-emit the canonical config as a nested object
  const auto j = nlohmann::ordered_json::parse(config_json(cfg));
  std::function<void(const nlohmann::ordered_json&)> emit = [&](const nlohmann::ordered_json& v) {
    if (v.is_object()) {
      w.begin_object();
      for (auto it = v.begin(); it != v.end(); ++it) {
        w.key(it.key());
        emit(it.value());
      }
      w.end_object();
    } else if (v.is_array()) {
      w.begin_array();
      for (const auto& x : v) emit(x);
      w.end_array();
    } else if (v.is_boolean()) {
      w.value(v.get<bool>());
    } else if (v.is_number_integer()) {
      w.value(v.get<std::int64_t>());
    } else if (v.is_number()) {
      w.value(v.get<double>());
    } else if (v.is_string()) {
      w.value(v.get<std::string>());
    } else {
      w.null();
    }
  };
  w.key("config");
  emit(j);
}

std::vector<std::pair<double, double>> error_points(const DirectRunResult& r) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& lr : r.levels)
    if (lr.ok()) pts.emplace_back(lr.delta, lr.raw_error);
  return pts;
}

std::map<int, std::string> existing_dumps(const std::string& dir) {
  std::map<int, std::string> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    const std::string name = e.path().filename().string();
    int n = -1;
    char tail[8] = {0};
    if (std::sscanf(name.c_str(), "level_%d.jsonl%7s", &n, tail) == 1 && n >= 0 &&
        name == "level_" + std::to_string(n) + ".jsonl") {
      out[n] = e.path().string();
    }
  }
  return out;
}

std::string level_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

std::string dump_path(const std::string& dir, int level) {
  return join(dir, "level_" + std::to_string(level) + ".jsonl");
}

std::vector<int> required_inverse_levels(const InverseParams& ip) {
  std::set<int> s;
  for (int k = ip.k_lo; k <= ip.k_hi; ++k) {
    // delta = c1 2^-k |L|; level = floor(log2(|L| / delta))
    const int n = static_cast<int>(std::floor(static_cast<double>(k) - std::log2(ip.c1) + 1e-9));
    if (n >= 0) s.insert(n);
  }
  return {s.begin(), s.end()};
}

int cmd_check_curve(const RunConfig& cfg, std::ostream& out) {
  RunLog log(cfg.output, "check-curve");
  const CurvePtr curve = build_curve(cfg.curve);
  const double b = chord_arc_constant(*curve, cfg.chord_arc_samples);
  const int depth = std::min(kMaxDyadicLevel, cfg.level_hi + 2);

  JsonWriter w;
  w.begin_object();
  w.field("format", "chordarc-curve-report");
  w.field("kind", to_string(cfg.curve.kind));
  w.field("length", curve->length());
  w.field("vertices", curve->vertices().size());
  w.field("chord_arc", b);
  w.field("chord_arc_samples", cfg.chord_arc_samples);
  w.key("dyadic").begin_array();
  out << "curve " << to_string(cfg.curve.kind) << ": |L| = " << fmt("%.10g", curve->length())
      << ", b = " << fmt("%.10g", b) << " (" << cfg.chord_arc_samples << " samples)\n";
  out << "level  spacing        points\n";
  for (int n = 0; n <= depth; ++n) {
    const auto sub = dyadic_points(*curve, n);
    w.begin_object();
    w.field("level", n).field("spacing", sub.spacing).field("points", sub.points.size());
    w.end_object();
    char buf[96];
    std::snprintf(buf, sizeof buf, "%5d  %-13.6g  %zu\n", n, sub.spacing, sub.points.size());
    out << buf;
  }
  w.end_array();
  w.end_object();
  write_atomic(join(cfg.output, "curve.json"), w.str());
  return kExitOk;
}

int cmd_direct(const RunConfig& cfg, std::ostream& out) {
  RunLog log(cfg.output, "direct");
  const CurvePtr curve = build_curve(cfg.curve);
  const CurveFunction f = build_function(cfg, curve);
  const DirectParams dp = direct_params(cfg);
  DirectRun run = run_direct(f, dp);
  const DirectRunResult& r = run.result;
  log.line("extension built in " + fmt("%.3f", r.extension.seconds) + " s, " +
           std::to_string(r.extension.leaves) + " leaves");
  for (const auto& lr : r.levels) log.line("level " + std::to_string(lr.level) + ": " + fmt("%.3f", lr.seconds) + " s");

  // approximants for the inverse run, including levels below level_lo
  std::set<int> dump_levels;
  for (const auto& [n, a] : run.family) dump_levels.insert(n);
  for (int n : required_inverse_levels(inverse_params(cfg))) {
    if (n > cfg.level_hi || run.family.count(n)) continue;
    try {
      run.family[n] = std::make_shared<const Approximant>(build_approximant(*run.extension, n));
      dump_levels.insert(n);
    } catch (const Error& e) {
      log.line("level " + std::to_string(n) + " not dumped: " + e.what());
    }
  }
  const std::string dump_dir = join(cfg.output, "approximants");
  for (const auto& [n, a] : run.family) {
    std::ostringstream os;
    write_dump(os, *a);
    write_atomic(dump_path(dump_dir, n), os.str());
  }

  const double alpha = cfg.holder.alpha;
  const bool slope_ok = r.fit && std::abs(r.fit->slope - alpha) <= cfg.rate_band;

  JsonWriter w;
  w.begin_object();
  w.field("format", "chordarc-direct-report");
  config_block(w, cfg);
  write_curve_block(w, *curve);
  w.key("extension").begin_object();
  w.field("leaves", r.extension.leaves).field("core_cells", r.extension.core_cells);
  w.field("exclusion_radius", r.extension.exclusion_radius).field("c2", r.extension.c2);
  w.field("c5", r.extension.c5).field("lap_spread", r.extension.lap_spread);
  w.field("grad_spread", r.extension.grad_spread).field("table_depth", r.extension.table_depth);
  w.end_object();
  w.key("levels").begin_array();
  for (const auto& lr : r.levels) {
    w.begin_object();
    w.field("level", lr.level).field("delta", lr.delta);
    if (lr.ok()) {
      w.field("raw_error", lr.raw_error).field("quantity3", lr.quantity3).field("quantity4", lr.quantity4);
      w.field("sup_error", lr.sup_error).field("v_sources", lr.v_sources).field("u_sources", lr.u_sources);
      w.field("c11", lr.c11).field("max_gamma", lr.max_gamma).field("max_c", lr.max_c);
      w.field("mass_balance", lr.mass_balance);
    } else {
      w.field("error", lr.error);
    }
    w.end_object();
  }
  w.end_array();
  w.key("fit_levels").begin_array().value(r.fit_lo).value(r.fit_hi).end_array();
  if (r.fit) {
    w.key("fit").begin_object();
    w.field("slope", r.fit->slope).field("intercept", r.fit->intercept);
    w.field("residual", r.fit->residual).field("points", r.fit->points);
    w.field("band", cfg.rate_band).field("slope_in_band", slope_ok);
    w.end_object();
  } else {
    w.field("fit_note", r.fit_note);
  }
  w.field("quantity3_ratio", r.quantity3_ratio).field("quantity4_ratio", r.quantity4_ratio);
  if (r.regularity) w.field("regularity_constant", *r.regularity);
  else w.key("regularity_constant").null();
  if (!r.warning.empty()) w.field("warning", r.warning);
  write_ledger(w, r.ledger);
  w.key("dumps").begin_array();
  for (int n : dump_levels) w.value(n);
  w.end_array();
  w.end_object();
  write_atomic(join(cfg.output, "direct.json"), w.str());

  std::ostringstream csv;
  csv << "level,delta,raw_error,quantity3,quantity4,sup_error,v_sources,u_sources,c11,max_gamma,max_c,mass_balance,"
         "error\n";
  for (const auto& lr : r.levels) {
    csv << lr.level << ',' << format_double(lr.delta) << ',' << format_double(lr.raw_error) << ','
        << format_double(lr.quantity3) << ',' << format_double(lr.quantity4) << ',' << format_double(lr.sup_error)
        << ',' << lr.v_sources << ',' << lr.u_sources << ',' << format_double(lr.c11) << ','
        << format_double(lr.max_gamma) << ',' << format_double(lr.max_c) << ',' << format_double(lr.mass_balance)
        << ',' << '"' << lr.error << '"' << '\n';
  }
  write_atomic(join(cfg.output, "direct.csv"), csv.str());

  const std::vector<PlotSeries> series{{"L^p error of max_delta(f - v)", error_points(r)}};
  write_atomic(join(cfg.output, "direct.svg"),
               loglog_svg("approximation error", "delta", "error", series, r.fit ? &r.fit->slope : nullptr,
                          r.fit ? &r.fit->intercept : nullptr));

  out << "direct run: " << r.extension.leaves << " leaves, exclusion radius "
      << fmt("%.4g", r.extension.exclusion_radius) << "\n";
  out << "level  delta      raw_error    quantity3    quantity4    V sources  U sources  c11\n";
  for (const auto& lr : r.levels) {
    char buf[200];
    if (lr.ok()) {
      std::snprintf(buf, sizeof buf, "%5d  %-9.4g  %-11.5g  %-11.5g  %-11.5g  %-9zu  %-9zu  %g\n", lr.level, lr.delta,
                    lr.raw_error, lr.quantity3, lr.quantity4, lr.v_sources, lr.u_sources, lr.c11);
    } else {
      std::snprintf(buf, sizeof buf, "%5d  %-9.4g  failed: %s\n", lr.level, lr.delta, lr.error.c_str());
    }
    out << buf;
  }
  if (r.fit) {
    out << "slope " << fmt("%.4f", r.fit->slope) << " (band " << fmt("%.2f", alpha - cfg.rate_band) << ".."
        << fmt("%.2f", alpha + cfg.rate_band) << (slope_ok ? ", inside" : ", OUTSIDE") << ")\n";
  } else {
    out << r.fit_note << "\n";
  }
  out << "q3 (scaled error) max/min " << fmt("%.4g", r.quantity3_ratio) << ", q4 (scaled gradient) max/min "
      << fmt("%.4g", r.quantity4_ratio) << "\n";
  if (!r.warning.empty()) out << "warning: " << r.warning << "\n";
  for (const auto& lr : r.levels)
    if (!lr.ok()) return kExitConstruction;
  return kExitOk;
}

int cmd_inverse(const RunConfig& cfg, const std::string& dump_dir_in, std::ostream& out) {
  RunLog log(cfg.output, "inverse");
  const std::string dump_dir = dump_dir_in.empty() ? join(cfg.output, "approximants") : dump_dir_in;
  const InverseParams ip = inverse_params(cfg);
  ip.validate();
  const auto found = existing_dumps(dump_dir);
  if (found.empty()) throw ConstructionError("no approximant dumps in " + dump_dir);
  const auto need = required_inverse_levels(ip);
  std::vector<int> gaps;
  for (int n : need)
    if (!found.count(n)) gaps.push_back(n);
  if (!gaps.empty()) throw ConstructionError("missing approximant levels in " + dump_dir + ": " + level_list(gaps));

  const CurvePtr curve = build_curve(cfg.curve);
  const CurveFunction f = build_function(cfg, curve);
  const int top = need.empty() ? -1 : need.back();
  ApproximantFamily family;
  for (const auto& [n, path] : found) {
    if (n > top) continue;  // doubling c1 only ever needs coarser levels
    std::ifstream is(path);
    if (!is) throw ConstructionError("cannot open " + path);
    auto a = std::make_shared<const Approximant>(read_dump(is, path));
    if (a->level() != n) throw ConstructionError(path + ": header level " + std::to_string(a->level()));
    if (std::abs(a->curve_length() - curve->length()) > 1e-9 * curve->length())
      throw ConstructionError(path + ": curve length does not match the config");
    family[n] = std::move(a);
  }
  log.line("loaded " + std::to_string(family.size()) + " dumps from " + dump_dir);

  const InverseRunResult r = run_inverse(f, family, ip);
  JsonWriter w;
  w.begin_object();
  w.field("format", "chordarc-inverse-report");
  config_block(w, cfg);
  write_curve_block(w, *curve);
  w.key("radii").begin_array();
  for (const auto& ir : r.radii) {
    w.begin_object();
    w.field("k", ir.k).field("r", ir.r).field("c1", ir.c1).field("delta", ir.delta).field("level", ir.level);
    if (ir.ok()) {
      w.field("seminorm", ir.seminorm).field("modulus_integral", ir.modulus_integral);
      w.field("term3", ir.term3).field("term4", ir.term4).field("bound", ir.bound);
      w.field("samples", ir.samples).field("violations", ir.violations);
      w.field("worst_ratio", ir.worst_ratio).field("identity_residual", ir.identity_residual);
    } else {
      w.field("error", ir.error);
    }
    w.end_object();
  }
  w.end_array();
  w.field("sup", r.sup).field("ratio", r.ratio).field("violations", r.violations);
  w.field("roundtrip_constant", r.roundtrip_constant);
  w.key("missing_levels").begin_array();
  for (int n : r.missing_levels) w.value(n);
  w.end_array();
  w.end_object();
  write_atomic(join(cfg.output, "inverse.json"), w.str());

  std::ostringstream csv;
  csv << "k,r,c1,delta,level,seminorm,modulus_integral,term3,term4,bound,violations,worst_ratio,error\n";
  for (const auto& ir : r.radii) {
    csv << ir.k << ',' << format_double(ir.r) << ',' << format_double(ir.c1) << ',' << format_double(ir.delta) << ','
        << ir.level << ',' << format_double(ir.seminorm) << ',' << format_double(ir.modulus_integral) << ','
        << format_double(ir.term3) << ',' << format_double(ir.term4) << ',' << format_double(ir.bound) << ','
        << ir.violations << ',' << format_double(ir.worst_ratio) << ",\"" << ir.error << "\"\n";
  }
  write_atomic(join(cfg.output, "inverse.csv"), csv.str());

  out << "inverse run over " << r.radii.size() << " radii\n";
  out << "k  r          level  seminorm     bound        violations\n";
  for (const auto& ir : r.radii) {
    char buf[200];
    if (ir.ok()) {
      std::snprintf(buf, sizeof buf, "%d  %-9.4g  %5d  %-11.5g  %-11.5g  %zu\n", ir.k, ir.r, ir.level, ir.seminorm,
                    ir.bound, ir.violations);
    } else {
      std::snprintf(buf, sizeof buf, "%d  %-9.4g  %5d  failed: %s\n", ir.k, ir.r, ir.level, ir.error.c_str());
    }
    out << buf;
  }
  out << "sup " << fmt("%.5g", r.sup) << ", max/min " << fmt("%.4g", r.ratio) << ", violations " << r.violations
      << ", round-trip constant " << fmt("%.4g", r.roundtrip_constant) << "\n";
  if (!r.missing_levels.empty()) {
    out << "missing levels: " << level_list(r.missing_levels) << "\n";
    return kExitConstruction;
  }
  for (const auto& ir : r.radii)
    if (!ir.ok()) return kExitConstruction;
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  RunLog log(cfg.output, "verify");
  const CurvePtr curve = build_curve(cfg.curve);
  const CurveFunction f = build_function(cfg, curve);
  const auto props = run_verify(f, direct_params(cfg), cfg.verify);
  JsonWriter w;
  w.begin_object();
  w.field("format", "chordarc-verify-report");
  config_block(w, cfg);
  w.key("properties").begin_array();
  bool all = true;
  for (const auto& p : props) {
    all = all && p.passed;
    w.begin_object();
    w.field("name", p.name).field("passed", p.passed).field("measured", p.measured);
    w.field("tolerance", p.tolerance).field("note", p.note);
    w.end_object();
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-4s %-32s measured %-12.5g tolerance %-10.4g", p.passed ? "PASS" : "FAIL",
                  p.name.c_str(), p.measured, p.tolerance);
    out << buf << (p.note.empty() ? "" : "  " + p.note) << "\n";
  }
  w.end_array();
  w.field("passed", all);
  w.end_object();
  write_atomic(join(cfg.output, "verify.json"), w.str());
  return all ? kExitOk : kExitVerifyFailed;
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  using nlohmann::json;
  auto load = [&](const std::string& name) -> json {
    const std::string path = join(cfg.output, name);
    if (!fs::exists(path)) return nullptr;
    try {
      return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
      throw ConstructionError(path + ": " + e.what());
    }
  };
  const json direct = load("direct.json"), inverse = load("inverse.json"), verify = load("verify.json");
  if (direct.is_null() && inverse.is_null() && verify.is_null())
    throw ConstructionError("no artifacts in " + cfg.output + " (run direct, inverse or verify first)");
  auto num = [](const json& v) {
    if (v.is_number()) return fmt("%.6g", v.get<double>());
    return std::string("-");
  };

  std::ostringstream md;
  md << "# Run report\n\n";
  if (!direct.is_null()) {
    md << "## Direct run\n\n";
    md << "| level | delta | raw error | q3 (scaled error) | q4 (scaled gradient) | V sources | U sources |\n";
    md << "|---|---|---|---|---|---|---|\n";
    std::vector<std::pair<double, double>> pts;
    for (const auto& l : direct.at("levels")) {
      md << "| " << l.at("level") << " | " << num(l.at("delta")) << " | " << num(l.value("raw_error", json()))
         << " | " << num(l.value("quantity3", json())) << " | " << num(l.value("quantity4", json())) << " | "
         << l.value("v_sources", json("-")) << " | " << l.value("u_sources", json("-")) << " |\n";
      if (l.contains("raw_error")) pts.emplace_back(l.at("delta").get<double>(), l.at("raw_error").get<double>());
    }
    md << "\n";
    double slope = 0, icpt = 0;
    const bool has_fit = direct.contains("fit");
    if (has_fit) {
      slope = direct["fit"]["slope"].get<double>();
      icpt = direct["fit"]["intercept"].get<double>();
      md << "Fitted slope " << num(direct["fit"]["slope"]) << " ("
         << (direct["fit"]["slope_in_band"].get<bool>() ? "inside" : "outside") << " the band).\n";
    } else {
      md << direct.value("fit_note", "no fit") << ".\n";
    }
    md << "q3 max/min " << num(direct.at("quantity3_ratio")) << ", q4 max/min "
       << num(direct.at("quantity4_ratio")) << ".\n\n";
    write_atomic(join(cfg.output, "direct.svg"),
                 loglog_svg("approximation error", "delta", "error", {{"L^p error of max_delta(f - v)", pts}},
                            has_fit ? &slope : nullptr, has_fit ? &icpt : nullptr));
  }
  if (!inverse.is_null()) {
    md << "## Inverse run\n\n| k | r | level | seminorm | bound | violations |\n|---|---|---|---|---|---|\n";
    for (const auto& r : inverse.at("radii")) {
      md << "| " << r.at("k") << " | " << num(r.at("r")) << " | " << r.at("level") << " | "
         << num(r.value("seminorm", json())) << " | " << num(r.value("bound", json())) << " | "
         << r.value("violations", json("-")) << " |\n";
    }
    md << "\nSeminorm max/min " << num(inverse.at("ratio")) << ", total violations " << inverse.at("violations")
       << ".\n\n";
  }
  if (!verify.is_null()) {
    md << "## Property suite\n\n| property | result | measured | tolerance |\n|---|---|---|---|\n";
    for (const auto& p : verify.at("properties")) {
      md << "| " << p.at("name").get<std::string>() << " | " << (p.at("passed").get<bool>() ? "pass" : "FAIL")
         << " | " << num(p.at("measured")) << " | " << num(p.at("tolerance")) << " |\n";
    }
    md << "\n";
  }
  write_atomic(join(cfg.output, "report.md"), md.str());
  out << md.str();
  return kExitOk;
}

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConstruction;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kExitConstruction;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConstruction;
  }
}

}  // namespace chordarc
