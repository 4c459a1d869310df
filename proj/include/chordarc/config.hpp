#pragma once

#include <string>
#include <vector>

#include "chordarc/curve.hpp"
#include "chordarc/errors.hpp"
#include "chordarc/extension.hpp"
#include "chordarc/harness.hpp"
#include "chordarc/holder.hpp"

namespace chordarc {

// Raised for malformed or inconsistent configs. The message names the
// offending field ("function.alpha: must be positive") or, for JSON syntax
// errors, the line and column.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct CurveConfig {
  enum class Kind { Segment, Semicircle, QuarterCircle, Helix, Polyline, File };
  Kind kind = Kind::Segment;
  double length = 1.0;   // segment
  double radius = 1.0;   // semicircle, quarter circle, helix
  double pitch = 0.25;   // helix: rise per radian
  double t_max = 3.14159265358979323846;
  std::size_t vertices = 4097;
  std::vector<Vec3> points;  // polyline
  std::string path;          // file: JSON {"vertices": [[x,y,z],...]} or "x y z" lines
};

std::string to_string(CurveConfig::Kind kind);

struct RunConfig {
  CurveConfig curve;
  FunctionSpec function;
  std::size_t function_nodes = kMinFunctionNodes;
  HolderParams holder;

  int level_lo = 2;
  int level_hi = 5;
  int fit_level_lo = 2;
  double rate_band = 0.2;  // accepted slope range alpha +- rate_band

  ExtensionParams extension;
  std::size_t chord_arc_samples = 2048;
  std::size_t error_samples = 4096;
  std::size_t gradient_samples = 256;
  int grad_density = 1;

  int k_lo = 2;
  int k_hi = 6;
  double c1 = 4.0;
  int max_doublings = 3;
  std::size_t inverse_samples = 1024;

  VerifyParams verify;

  std::string output = "out";
  unsigned threads = 0;

  void validate() const;
};

// Strict parsing: unknown keys anywhere are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical JSON echo of every resolved field (written into reports).
std::string config_json(const RunConfig& cfg);

CurvePtr build_curve(const CurveConfig& cc);
CurveFunction build_function(const RunConfig& cfg, CurvePtr curve);

DirectParams direct_params(const RunConfig& cfg);
InverseParams inverse_params(const RunConfig& cfg);

// Parses "A..B" (or a single "A") into a level range.
std::pair<int, int> parse_level_range(const std::string& s);

}  // namespace chordarc
