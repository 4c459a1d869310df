#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>

#include "chordarc/curve.hpp"

namespace chordarc {

using Mat3 = std::array<std::array<double, 3>, 3>;

double frobenius(const Mat3& m);

struct RegularizedValue {
  double d = 0.0;    // dist(M, L)
  double d0 = 0.0;
  Vec3 grad;
  Mat3 hess{};
  double hess_norm = 0.0;  // Frobenius norm of hess
};

// Smooth substitute for dist(., L) built from a Whitney decomposition of the
// complement of the curve: dyadic cubes Q (global grid anchored at A) with
// dist(center, L) >= 2 diam Q whose parent fails that test. Each cube
// carries the bump (1 - |x-c|^2/R^2)^4 with R = 1.5 diam Q, and
//   d0 = eps0 * sum(psi_Q diam Q) / sum(psi_Q).
// Every cube reaching x has diam in [d/6, 2d], so eps0 = 1/32 gives d0 <= d/16.
class RegularizedDistance {
 public:
  explicit RegularizedDistance(CurvePtr curve, double eps0 = 1.0 / 32.0);

  const PolylineCurve& curve() const { return *curve_; }
  double eps0() const { return eps0_; }

  // Per-thread evaluator; memoizes the Whitney test of visited cubes.
  class Evaluator {
   public:
    explicit Evaluator(const RegularizedDistance& owner) : owner_(&owner) {}
    RegularizedValue operator()(const Vec3& m);
    // Same as operator() when dist(m, L) is already known.
    RegularizedValue eval_with_distance(const Vec3& m, double d);

   private:
    struct Key {
      int level;
      std::int64_t i, j, k;
      bool operator==(const Key&) const = default;
    };
    struct KeyHash {
      std::size_t operator()(const Key& key) const;
    };
    bool admissible(int level, std::int64_t i, std::int64_t j, std::int64_t k, const Vec3& x, double dx);
    bool whitney(int level, std::int64_t i, std::int64_t j, std::int64_t k, const Vec3& x, double dx);

    const RegularizedDistance* owner_;
    std::unordered_map<Key, bool, KeyHash> memo_;
  };

  RegularizedValue eval(const Vec3& m) const;

  // Side length of the level-j cubes.
  double side(int level) const;

 private:
  friend class Evaluator;
  CurvePtr curve_;
  double eps0_;
  Vec3 origin_;
};

}  // namespace chordarc
