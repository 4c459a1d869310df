#include "chordarc/regularized_distance.hpp"

#include <cmath>

#include "chordarc/errors.hpp"

namespace chordarc {

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
constexpr std::size_t kMemoLimit = std::size_t{1} << 22;
}  // namespace

double frobenius(const Mat3& m) {
  double acc = 0.0;
  for (const auto& row : m) {
    for (double v : row) acc += v * v;
  }
  return std::sqrt(acc);
}

RegularizedDistance::RegularizedDistance(CurvePtr curve, double eps0)
    : curve_(std::move(curve)), eps0_(eps0) {
  if (!curve_) throw InvalidInput("regularized distance needs a curve");
  if (!(eps0 > 0.0 && eps0 <= 1.0 / 32.0)) {
    throw InvalidInput("eps0 must lie in (0, 1/32] to keep d0 <= d/16");
  }
  origin_ = curve_->start();
}

double RegularizedDistance::side(int level) const { return std::ldexp(curve_->length(), -level); }

std::size_t RegularizedDistance::Evaluator::KeyHash::operator()(const Key& key) const {
  std::uint64_t h = static_cast<std::uint64_t>(key.level) * 0x9E3779B97F4A7C15ULL;
  for (std::int64_t v : {key.i, key.j, key.k}) {
    h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

bool RegularizedDistance::Evaluator::admissible(int level, std::int64_t i, std::int64_t j, std::int64_t k,
                                                const Vec3& x, double dx) {
  const double s = owner_->side(level);
  const double diam = kSqrt3 * s;
  const Vec3 c = owner_->origin_ + Vec3{(static_cast<double>(i) + 0.5) * s, (static_cast<double>(j) + 0.5) * s,
                                        (static_cast<double>(k) + 0.5) * s};
  // dist(., L) is 1-Lipschitz: decide from the query point when possible.
  const double gap = distance(c, x);
  if (dx - gap >= 2.0 * diam) return true;
  if (dx + gap < 2.0 * diam) return false;
  Key key{level, i, j, k};
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;
  if (memo_.size() > kMemoLimit) memo_.clear();
  bool ok = owner_->curve_->distance_to(c) >= 2.0 * diam;
  memo_.emplace(key, ok);
  return ok;
}

bool RegularizedDistance::Evaluator::whitney(int level, std::int64_t i, std::int64_t j, std::int64_t k,
                                             const Vec3& x, double dx) {
  if (!admissible(level, i, j, k, x, dx)) return false;
  // Arithmetic shift floors negative indices.
  return !admissible(level - 1, i >> 1, j >> 1, k >> 1, x, dx);
}

RegularizedValue RegularizedDistance::Evaluator::operator()(const Vec3& m) {
  return eval_with_distance(m, owner_->curve_->distance_to(m));
}

RegularizedValue RegularizedDistance::Evaluator::eval_with_distance(const Vec3& m, double d) {
  if (!(d > 0.0)) throw SingularInput("regularized distance evaluated on the curve");
  const double len = owner_->curve_->length();
  // Levels with diam in [d/6, 2d].
  const int jlo = static_cast<int>(std::ceil(std::log2(kSqrt3 * len / (2.0 * d)))) - 1;
  const int jhi = static_cast<int>(std::floor(std::log2(6.0 * kSqrt3 * len / d))) + 1;
  const Vec3 x = m - owner_->origin_;

  double S = 0.0, T = 0.0;
  Vec3 gS, gT;
  Mat3 hS{}, hT{};
  for (int level = jlo; level <= jhi; ++level) {
    const double s = owner_->side(level);
    const double diam = kSqrt3 * s;
    const double R = 1.5 * diam;
    const double R2 = R * R;
    std::int64_t lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      lo[a] = static_cast<std::int64_t>(std::ceil((x[a] - R) / s - 0.5));
      hi[a] = static_cast<std::int64_t>(std::floor((x[a] + R) / s - 0.5));
    }
    for (std::int64_t i = lo[0]; i <= hi[0]; ++i) {
      for (std::int64_t j = lo[1]; j <= hi[1]; ++j) {
        for (std::int64_t k = lo[2]; k <= hi[2]; ++k) {
          const Vec3 c{(static_cast<double>(i) + 0.5) * s, (static_cast<double>(j) + 0.5) * s,
                       (static_cast<double>(k) + 0.5) * s};
          const Vec3 r = x - c;
          const double rho2 = norm2(r);
          if (rho2 >= R2) continue;
          if (!whitney(level, i, j, k, m, d)) continue;
          const double u = 1.0 - rho2 / R2;
          const double u2 = u * u;
          const double psi = u2 * u2;
          const double gcoef = -8.0 * u2 * u / R2;       // grad psi = gcoef * r
          const double hdiag = gcoef;                     // hess psi = hdiag I + hout r r^T
          const double hout = 48.0 * u2 / (R2 * R2);
          S += psi;
          T += psi * diam;
          gS += r * gcoef;
          gT += r * (gcoef * diam);
          for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
              double h = hout * r[a] * r[b] + (a == b ? hdiag : 0.0);
              hS[a][b] += h;
              hT[a][b] += h * diam;
            }
          }
        }
      }
    }
  }
  if (!(S > 0.0)) throw ConstructionError("no Whitney cube covers the evaluation point");

  const double eps0 = owner_->eps0_;
  const double g = T / S;
  const Vec3 gg = (gT - gS * g) / S;
  RegularizedValue out;
  out.d = d;
  out.d0 = eps0 * g;
  out.grad = gg * eps0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      double h = (hT[a][b] - g * hS[a][b] - gg[a] * gS[b] - gS[a] * gg[b]) / S;
      out.hess[a][b] = eps0 * h;
    }
  }
  out.hess_norm = frobenius(out.hess);
  return out;
}

RegularizedValue RegularizedDistance::eval(const Vec3& m) const {
  Evaluator ev(*this);
  return ev(m);
}

}  // namespace chordarc
