#include "chordarc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "chordarc/io.hpp"

namespace chordarc {

using nlohmann::json;

std::string to_string(CurveConfig::Kind kind) {
  switch (kind) {
    case CurveConfig::Kind::Segment: return "segment";
    case CurveConfig::Kind::Semicircle: return "semicircle";
    case CurveConfig::Kind::QuarterCircle: return "quarter_circle";
    case CurveConfig::Kind::Helix: return "helix";
    case CurveConfig::Kind::Polyline: return "polyline";
    case CurveConfig::Kind::File: return "file";
  }
  return "?";
}

namespace {

// Typed access to one JSON object; remembers which keys were read so the
// rest can be reported as unknown.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::string where = path_;
    if (!key.empty()) where += (where.empty() ? "" : ".") + key;
    throw ConfigError((where.empty() ? "config" : where) + ": " + what);
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) fail(key, "must be finite");
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d != std::floor(d)) fail(key, "expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (d < 0) fail(key, "must be non-negative");
      }
      out = static_cast<Int>(d);
      return;
    }
    if (!v.is_number_integer()) fail(key, "expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.get<long long>() < 0) fail(key, "must be non-negative");
    }
    out = v.get<Int>();
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    out = v.get<bool>();
  }

  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    out = v.get<std::string>();
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(key + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
  }

  void point(const std::string& key, Vec3& out) {
    if (!has(key)) return;
    out = parse_point(j_.at(key), child(key));
  }

  static Vec3 parse_point(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
      throw ConfigError(where + ": expected [x, y, z]");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(it.key(), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_curve(const json& j, CurveConfig& c) {
  Fields f(j, "curve");
  std::string kind = "segment";
  f.string("kind", kind);
  if (kind == "segment") {
    c.kind = CurveConfig::Kind::Segment;
    f.number("length", c.length);
  } else if (kind == "semicircle" || kind == "quarter_circle") {
    c.kind = kind == "semicircle" ? CurveConfig::Kind::Semicircle : CurveConfig::Kind::QuarterCircle;
    f.number("radius", c.radius);
    f.integer("vertices", c.vertices);
  } else if (kind == "helix") {
    c.kind = CurveConfig::Kind::Helix;
    f.number("radius", c.radius);
    f.number("pitch", c.pitch);
    f.number("t_max", c.t_max);
    f.integer("vertices", c.vertices);
  } else if (kind == "polyline") {
    c.kind = CurveConfig::Kind::Polyline;
    if (!f.has("points")) f.fail("points", "required for a polyline");
    const json& pts = f.raw("points");
    if (!pts.is_array()) f.fail("points", "expected an array of [x, y, z]");
    for (std::size_t i = 0; i < pts.size(); ++i)
      c.points.push_back(Fields::parse_point(pts[i], "curve.points[" + std::to_string(i) + "]"));
  } else if (kind == "file") {
    c.kind = CurveConfig::Kind::File;
    f.string("path", c.path);
    if (c.path.empty()) f.fail("path", "required for kind \"file\"");
  } else {
    f.fail("kind", "unknown curve kind \"" + kind + "\" (segment, semicircle, quarter_circle, helix, polyline, file)");
  }
  f.finish();
}

void parse_function(const json& j, RunConfig& cfg) {
  Fields f(j, "function");
  FunctionSpec& s = cfg.function;
  std::string kind = "arc_power";
  f.string("kind", kind);
  if (kind == "arc_power") {
    s.kind = FunctionSpec::Kind::ArcPower;
    f.number("alpha", s.alpha);
  } else if (kind == "dist_power") {
    s.kind = FunctionSpec::Kind::DistPower;
    f.number("alpha", s.alpha);
    f.point("point", s.point);
  } else if (kind == "constant") {
    s.kind = FunctionSpec::Kind::Constant;
    f.number("value", s.value);
  } else if (kind == "samples") {
    s.kind = FunctionSpec::Kind::Samples;
    f.numbers("values", s.values);
    if (s.values.size() < 2) f.fail("values", "need at least 2 samples");
  } else {
    f.fail("kind", "unknown function kind \"" + kind + "\" (arc_power, dist_power, constant, samples)");
  }
  f.integer("nodes", cfg.function_nodes);
  f.finish();
}

void parse_holder(const json& j, HolderParams& h) {
  Fields f(j, "holder");
  f.number("alpha", h.alpha);
  f.number("p", h.p);
  f.number("eps", h.eps);
  f.number("creg", h.creg);
  f.finish();
}

void parse_levels(const json& j, RunConfig& cfg) {
  Fields f(j, "levels");
  f.integer("lo", cfg.level_lo);
  f.integer("hi", cfg.level_hi);
  f.integer("fit_lo", cfg.fit_level_lo);
  f.number("rate_band", cfg.rate_band);
  f.finish();
}

void parse_grid(const json& j, RunConfig& cfg) {
  Fields f(j, "grid");
  GridParams& g = cfg.extension.grid;
  f.integer("budget", cfg.extension.budget);
  f.number("theta", g.theta);
  f.number("h_max", g.h_max);
  f.integer("exclusion_level", cfg.extension.exclusion_level);
  f.number("root_half_width", g.root_half_width);
  f.boolean("refine_outer", g.refine_outer);
  f.number("h_outer", g.h_outer);
  f.integer("cell_budget", g.cell_budget);
  f.integer("max_depth", g.max_depth);
  f.numbers("c5_candidates", cfg.extension.c5_candidates);
  f.finish();
}

void parse_samples(const json& j, RunConfig& cfg) {
  Fields f(j, "samples");
  f.integer("chord_arc", cfg.chord_arc_samples);
  f.integer("error", cfg.error_samples);
  f.integer("gradient", cfg.gradient_samples);
  f.integer("grad_density", cfg.grad_density);
  f.finish();
}

void parse_inverse(const json& j, RunConfig& cfg) {
  Fields f(j, "inverse");
  f.integer("k_lo", cfg.k_lo);
  f.integer("k_hi", cfg.k_hi);
  f.number("c1", cfg.c1);
  f.integer("max_doublings", cfg.max_doublings);
  f.integer("samples", cfg.inverse_samples);
  f.finish();
}

void parse_verify(const json& j, VerifyParams& v) {
  Fields f(j, "verify");
  f.integer("level", v.level);
  f.integer("distance_samples", v.distance_samples);
  f.integer("harmonic_points", v.harmonic_points);
  f.integer("representation_samples", v.representation_samples);
  f.number("representation_tolerance", v.representation_tolerance);
  f.finish();
}

std::vector<Vec3> read_vertices(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("curve.path: cannot open \"" + path + "\"");
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string text = ss.str();
  std::vector<Vec3> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("curve.path: " + path + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("vertices") || !j["vertices"].is_array())
      throw ConfigError("curve.path: " + path + ": expected {\"vertices\": [[x, y, z], ...]}");
    for (std::size_t i = 0; i < j["vertices"].size(); ++i)
      out.push_back(Fields::parse_point(j["vertices"][i], path + ": vertices[" + std::to_string(i) + "]"));
    return out;
  }
  std::istringstream lines(text);
  std::string line;
  int no = 0;
  while (std::getline(lines, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
    for (char& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ls(line);
    Vec3 v;
    std::string extra;
    if (!(ls >> v.x >> v.y >> v.z) || (ls >> extra))
      throw ConfigError("curve.path: " + path + ":" + std::to_string(no) + ": expected three numbers");
    out.push_back(v);
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  auto bad = [](const std::string& field, const std::string& what) { throw ConfigError(field + ": " + what); };
  switch (curve.kind) {
    case CurveConfig::Kind::Segment:
      if (!(curve.length > 0)) bad("curve.length", "must be positive");
      break;
    case CurveConfig::Kind::Helix:
      if (!(curve.pitch >= 0)) bad("curve.pitch", "must be non-negative");
      if (!(curve.t_max > 0)) bad("curve.t_max", "must be positive");
      [[fallthrough]];
    case CurveConfig::Kind::Semicircle:
    case CurveConfig::Kind::QuarterCircle:
      if (!(curve.radius > 0)) bad("curve.radius", "must be positive");
      if (curve.vertices < 3) bad("curve.vertices", "need at least 3");
      break;
    case CurveConfig::Kind::Polyline:
      if (curve.points.size() < 2) bad("curve.points", "need at least 2 vertices");
      break;
    case CurveConfig::Kind::File:
      break;
  }
  if (function.kind == FunctionSpec::Kind::ArcPower || function.kind == FunctionSpec::Kind::DistPower) {
    if (!(function.alpha > 0)) bad("function.alpha", "must be positive");
  }
  if (function_nodes < kMinFunctionNodes)
    bad("function.nodes", "must be at least " + std::to_string(kMinFunctionNodes));
  try {
    holder.validate();
  } catch (const InvalidInput& e) {
    bad("holder", e.what());
  }
  if (level_lo < 0) bad("levels.lo", "must be non-negative");
  if (level_hi < level_lo) bad("levels.hi", "must be >= levels.lo");
  if (level_hi > 12) bad("levels.hi", "at most 12");
  if (fit_level_lo < 0) bad("levels.fit_lo", "must be non-negative");
  if (!(rate_band > 0)) bad("levels.rate_band", "must be positive");
  try {
    extension.grid.validate();
  } catch (const InvalidInput& e) {
    bad("grid", e.what());
  }
  if (extension.exclusion_level >= 0 && extension.exclusion_level < level_hi)
    bad("grid.exclusion_level", "must be >= levels.hi (or -1 for levels.hi + 2)");
  if (extension.c5_candidates.empty()) bad("grid.c5_candidates", "must not be empty");
  for (double c : extension.c5_candidates)
    if (!(c > 0)) bad("grid.c5_candidates", "entries must be positive");
  if (chord_arc_samples < 512) bad("samples.chord_arc", "at least 512");
  if (error_samples < 16) bad("samples.error", "at least 16");
  if (gradient_samples < 1) bad("samples.gradient", "at least 1");
  if (grad_density < 1 || grad_density > 2) bad("samples.grad_density", "must be 1 or 2");
  if (k_lo < 0) bad("inverse.k_lo", "must be non-negative");
  if (k_hi < k_lo) bad("inverse.k_hi", "must be >= inverse.k_lo");
  if (!(c1 > 2)) bad("inverse.c1", "must exceed 2");
  if (max_doublings < 0) bad("inverse.max_doublings", "must be non-negative");
  if (inverse_samples < 16) bad("inverse.samples", "at least 16");
  if (verify.level < 0) bad("verify.level", "must be non-negative");
  if (verify.distance_samples < 10) bad("verify.distance_samples", "at least 10");
  if (verify.harmonic_points < 1) bad("verify.harmonic_points", "at least 1");
  if (verify.representation_samples < 1) bad("verify.representation_samples", "at least 1");
  if (!(verify.representation_tolerance > 0)) bad("verify.representation_tolerance", "must be positive");
  if (output.empty()) bad("output", "must not be empty");
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.what() carries "at line L, column C"
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  RunConfig cfg;
  Fields top(j, "");
  if (top.has("curve")) parse_curve(top.raw("curve"), cfg.curve);
  if (top.has("function")) parse_function(top.raw("function"), cfg);
  if (top.has("holder")) parse_holder(top.raw("holder"), cfg.holder);
  if (top.has("levels")) parse_levels(top.raw("levels"), cfg);
  if (top.has("grid")) parse_grid(top.raw("grid"), cfg);
  if (top.has("samples")) parse_samples(top.raw("samples"), cfg);
  if (top.has("inverse")) parse_inverse(top.raw("inverse"), cfg);
  if (top.has("verify")) parse_verify(top.raw("verify"), cfg.verify);
  top.string("output", cfg.output);
  top.integer("threads", cfg.threads);
  top.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config \"" + path + "\"");
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string config_json(const RunConfig& c) {
  JsonWriter w;
  w.begin_object();
  w.key("curve").begin_object();
  w.field("kind", to_string(c.curve.kind));
  switch (c.curve.kind) {
    case CurveConfig::Kind::Segment: w.field("length", c.curve.length); break;
    case CurveConfig::Kind::Helix:
      w.field("pitch", c.curve.pitch);
      w.field("t_max", c.curve.t_max);
      [[fallthrough]];
    case CurveConfig::Kind::Semicircle:
    case CurveConfig::Kind::QuarterCircle:
      w.field("radius", c.curve.radius);
      w.field("vertices", c.curve.vertices);
      break;
    case CurveConfig::Kind::Polyline: w.field("vertices", c.curve.points.size()); break;
    case CurveConfig::Kind::File: w.field("path", c.curve.path); break;
  }
  w.end_object();
  w.key("function").begin_object();
  w.field("kind", to_string(c.function.kind));
  switch (c.function.kind) {
    case FunctionSpec::Kind::ArcPower: w.field("alpha", c.function.alpha); break;
    case FunctionSpec::Kind::DistPower:
      w.field("alpha", c.function.alpha);
      w.array("point", {c.function.point.x, c.function.point.y, c.function.point.z});
      break;
    case FunctionSpec::Kind::Constant: w.field("value", c.function.value); break;
    case FunctionSpec::Kind::Samples: w.field("samples", c.function.values.size()); break;
  }
  w.field("nodes", c.function_nodes);
  w.end_object();
  w.key("holder").begin_object();
  w.field("alpha", c.holder.alpha).field("p", c.holder.p).field("eps", c.holder.eps).field("creg", c.holder.creg);
  w.end_object();
  w.key("levels").begin_object();
  w.field("lo", c.level_lo).field("hi", c.level_hi).field("fit_lo", c.fit_level_lo).field("rate_band", c.rate_band);
  w.end_object();
  const GridParams& g = c.extension.grid;
  w.key("grid").begin_object();
  w.field("budget", c.extension.budget);
  w.field("theta", g.theta).field("h_max", g.h_max).field("exclusion_level", c.extension.exclusion_level);
  w.field("root_half_width", g.root_half_width).field("refine_outer", g.refine_outer).field("h_outer", g.h_outer);
  w.field("cell_budget", g.cell_budget).field("max_depth", g.max_depth);
  w.array("c5_candidates", c.extension.c5_candidates);
  w.end_object();
  w.key("samples").begin_object();
  w.field("chord_arc", c.chord_arc_samples).field("error", c.error_samples);
  w.field("gradient", c.gradient_samples).field("grad_density", c.grad_density);
  w.end_object();
  w.key("inverse").begin_object();
  w.field("k_lo", c.k_lo).field("k_hi", c.k_hi).field("c1", c.c1).field("max_doublings", c.max_doublings);
  w.field("samples", c.inverse_samples);
  w.end_object();
  w.key("verify").begin_object();
  w.field("level", c.verify.level).field("distance_samples", c.verify.distance_samples);
  w.field("harmonic_points", c.verify.harmonic_points);
  w.field("representation_samples", c.verify.representation_samples);
  w.field("representation_tolerance", c.verify.representation_tolerance);
  w.end_object();
  w.end_object();
  return w.str();
}

CurvePtr build_curve(const CurveConfig& cc) {
  try {
    switch (cc.kind) {
      case CurveConfig::Kind::Segment: return make_segment(cc.length);
      case CurveConfig::Kind::Semicircle: return make_semicircle(cc.radius, cc.vertices);
      case CurveConfig::Kind::QuarterCircle: return make_quarter_circle(cc.radius, cc.vertices);
      case CurveConfig::Kind::Helix: return make_helix(cc.radius, cc.pitch, cc.t_max, cc.vertices);
      case CurveConfig::Kind::Polyline: return std::make_shared<const PolylineCurve>(cc.points);
      case CurveConfig::Kind::File: return std::make_shared<const PolylineCurve>(read_vertices(cc.path));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("curve: ") + e.what());
  }
  throw ConfigError("curve.kind: unsupported");
}

CurveFunction build_function(const RunConfig& cfg, CurvePtr curve) {
  try {
    return CurveFunction::from_spec(std::move(curve), cfg.function, cfg.function_nodes);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("function: ") + e.what());
  }
}

DirectParams direct_params(const RunConfig& cfg) {
  DirectParams p;
  p.holder = cfg.holder;
  p.level_lo = cfg.level_lo;
  p.level_hi = cfg.level_hi;
  p.fit_level_lo = cfg.fit_level_lo;
  p.extension = cfg.extension;
  p.extension.n_max = cfg.level_hi;
  p.error_samples = cfg.error_samples;
  p.gradient_samples = cfg.gradient_samples;
  p.grad_density = cfg.grad_density;
  return p;
}

InverseParams inverse_params(const RunConfig& cfg) {
  InverseParams p;
  p.holder = cfg.holder;
  p.k_lo = cfg.k_lo;
  p.k_hi = cfg.k_hi;
  p.c1 = cfg.c1;
  p.max_doublings = cfg.max_doublings;
  p.samples = cfg.inverse_samples;
  p.grad_density = cfg.grad_density;
  return p;
}

std::pair<int, int> parse_level_range(const std::string& s) {
  auto to_int = [&](const std::string& t) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size() || t.empty()) throw ConfigError("--levels: expected A..B, got \"" + s + "\"");
    return v;
  };
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    const int a = to_int(s);
    return {a, a};
  }
  return {to_int(s.substr(0, dots)), to_int(s.substr(dots + 2))};
}

}  // namespace chordarc
