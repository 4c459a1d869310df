#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "chordarc/extension.hpp"
#include "chordarc/kernels.hpp"

namespace chordarc {

enum class Origin : std::uint8_t { LaplacianCell, Corrector };
const char* to_string(Origin o);

// Point masses in structure-of-arrays form. Positions are cell centers.
struct SourceSet {
  std::vector<double> x, y, z, q;
  std::vector<Origin> tag;
  std::vector<std::int64_t> id;  // leaf index of the carrying cell
  std::vector<int> shell;        // omega level + 1 of the cell, 0 outside Omega*_0

  std::size_t size() const { return q.size(); }
  void push(const Vec3& p, double mass, Origin o, std::int64_t cell, int nu);
  Vec3 position(std::size_t i) const { return {x[i], y[i], z[i]}; }
  kernels::SourceView view() const { return {x.data(), y.data(), z.data(), q.data(), q.size()}; }
  kernels::SourceView view(std::size_t begin, std::size_t end) const;
  double total_mass() const;
  double abs_mass() const;
};

struct CorrectorCoefficients {
  int level = 0;
  double c11 = 0.0;
  double c5 = 0.0;
  double b = 1.0;
  std::vector<double> c;              // c_kn
  std::vector<double> gamma;          // gamma_kn
  std::vector<double> modulus;        // Delta* f(M_kn, (c5 + 2b) Lambda_n)
  std::vector<double> beta_integral;  // discrete integral of lap f0 over beta_kn
  std::vector<double> chi_volume;     // volume of supp chi_kn on the grid
  std::vector<double> corrector_mass; // total corrector mass of index k before merging
  std::vector<std::size_t> chi_cells;

  // max_k |4 pi mass_k + I_k| / |I_k| over k with a nonzero beta integral.
  double worst_balance() const;
};

// Smallest integer c in [2, 32] with
//   vol(B(M_kn, c Lambda_n) \ Omega*_{max(n-2,0)}) >= vol(B) / 2
// for every k, by midpoint-lattice counting on `lattice`^3 points.
struct C11Result {
  int c11 = 0;
  double worst_fraction = 0.0;  // min over k of the outside fraction at c11
  double previous_fraction = 0.0;  // same at c11 - 1 (0 when c11 = 2)
};
C11Result c11_search(const PolylineCurve& curve, int n, int lattice = 48);

// Fraction of B(center, radius) lying outside Omega*_m, by lattice counting.
double outside_fraction(const PolylineCurve& curve, const DyadicSubdivision& sub, const Vec3& center,
                        double radius, int lattice);

// Harmonic approximant v_{2^-n}: V part (grid Laplacian masses outside
// Omega*_n) followed by the U part (corrector masses).
class Approximant {
 public:
  Approximant() = default;
  Approximant(int level, double length, SourceSet sources, std::size_t v_count, CorrectorCoefficients coeffs);

  int level() const { return level_; }
  double lambda() const { return lambda_; }
  double curve_length() const { return length_; }
  const SourceSet& sources() const { return sources_; }
  std::size_t v_count() const { return v_count_; }
  std::size_t u_count() const { return sources_.size() - v_count_; }
  const CorrectorCoefficients& coefficients() const { return coeffs_; }

  kernels::SourceView v_view() const { return sources_.view(0, v_count_); }
  kernels::SourceView u_view() const { return sources_.view(v_count_, sources_.size()); }

  double value(const Vec3& m) const;
  double v_part(const Vec3& m) const;
  double u_part(const Vec3& m) const;
  Vec3 gradient(const Vec3& m) const;
  Vec3 v_gradient(const Vec3& m) const;
  Vec3 u_gradient(const Vec3& m) const;

  // Distance from m to the nearest source; infinity for an empty set.
  double nearest_source(const Vec3& m) const;

 private:
  int level_ = 0;
  double length_ = 0.0;
  double lambda_ = 0.0;
  SourceSet sources_;
  std::size_t v_count_ = 0;
  CorrectorCoefficients coeffs_;
};

// Coefficients c_kn, gamma_kn for level n. `c11` <= 0 triggers the search.
CorrectorCoefficients corrector_coefficients(const Extension& ext, int n, double c11 = 0.0);

Approximant assemble(const Extension& ext, int n, const CorrectorCoefficients& coeffs);
Approximant build_approximant(const Extension& ext, int n);

// Values at many points, parallel over targets.
std::vector<double> evaluate_many(const Approximant& a, const std::vector<Vec3>& pts);

// max of ||grad v|| over a deterministic sample of the closed ball of radius
// delta/2 about m. density 1: centre, shells at delta/4 and delta/2 (26
// directions each), 50 Halton interior points; density 2 doubles the
// shells and interior points.
double grad_star(const Approximant& a, const Vec3& m, double delta, int density = 1);

// Sample offsets for grad_star relative to a unit radius.
std::vector<Vec3> grad_star_offsets(int density);

// Every cell as a mass -lap vol / 4pi (reconstruction of f).
SourceSet reconstruction_sources(const Extension& ext);
// Cells with center in Omega*_n as masses +lap vol / 4pi (tube term).
SourceSet tube_sources(const Extension& ext, int n);

double reconstruct(const SourceSet& full, const Vec3& m);

struct ErrorSplit {
  double v = 0.0;
  double fhat = 0.0;
  double tube = 0.0;
  double corrector = 0.0;
  double residual = 0.0;  // (v - fhat) - (tube + corrector)
  double scale = 0.0;     // sum of |terms| entering the identity
};
ErrorSplit error_split(const Approximant& a, const SourceSet& full, const SourceSet& tube, const Vec3& m);

// Sphere average of v over radius rho about m, compared with v(m).
struct MeanValueCheck {
  double center = 0.0;
  double average = 0.0;
  double deviation = 0.0;  // relative to |v(m)|, or to sum|q|/dist if |v| is tiny
};
MeanValueCheck mean_value_check(const Approximant& a, const Vec3& m, double rho);

// Potential split by shell index: entry nu is the potential of sources with
// shell == nu (V part only).
std::vector<double> shell_potentials(const Approximant& a, const Vec3& m);

// JSON-lines dump: a header object then one object per mass.
void write_dump(std::ostream& os, const Approximant& a);
Approximant read_dump(std::istream& is, const std::string& name = "dump");

}  // namespace chordarc
