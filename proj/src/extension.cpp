#include "chordarc/extension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chordarc/errors.hpp"
#include "chordarc/parallel.hpp"

namespace chordarc {

void ExtensionParams::validate() const {
  if (n_max < 0 || n_max > 16) throw InvalidInput("n_max must lie in [0, 16]");
  if (exclusion_level >= 0 && exclusion_level <= n_max) {
    throw InvalidInput("exclusion level must exceed n_max so the tube of level n_max stays resolved");
  }
  if (fit_level_lo < 0) throw InvalidInput("fit level must be nonnegative");
  if (c5_candidates.empty()) throw InvalidInput("c5 candidate list is empty");
  for (double c : c5_candidates) {
    if (!(c > 0.0)) throw InvalidInput("c5 candidates must be positive");
  }
  grid.validate();
}

StepValue step_extension_value(const CurveFunction& f, const DyadicTable& table, const Vec3& m, double s, double d) {
  const PolylineCurve& curve = table.curve();
  const double len = curve.length();
  StepValue out;
  if (distance(m, curve.start()) > 2.0 * len) return out;
  const int cap = table.max_level();
  int n;
  if (d <= 0.0) {
    n = cap;  // on the curve: the limiting omega set at the deepest level
  } else {
    // Every point within 1.5 Lambda_n of L lies in Omega*_n (n >= 1).
    n = static_cast<int>(std::floor(std::log2(1.5 * len / d)));
    n = std::clamp(n, 0, cap);
    while (n > 0 && !table.in_omega_star(n, m, s, d)) --n;
    while (n < cap && table.in_omega_star(n + 1, m, s, d)) ++n;
  }
  int k = table.first_ball(n, m, s, d);
  if (k < 0) {
    // Omega*_0 is the ball about A; the level-0 balls are B(A, 2|L|), B(B, 2|L|).
    k = 0;
  }
  out.level = n;
  out.k = k;
  out.value = f(table.point(n, static_cast<std::size_t>(k)).s);
  return out;
}

StepExtension step_extension(const CurveFunction& f, const DyadicTable& table, const GradedGrid& grid) {
  StepExtension out{ScalarField(grid, ScalarField::Mode::Cell), {}, {}};
  const auto& leaves = grid.leaves();
  out.level.assign(leaves.size(), -1);
  out.k.assign(leaves.size(), -1);
  std::vector<double> vals(leaves.size(), 0.0);
  parallel_for(leaves.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto sv = step_extension_value(f, table, leaves[i].center, leaves[i].s, leaves[i].d);
      vals[i] = sv.value;
      out.level[i] = sv.level;
      out.k[i] = sv.k;
    }
  });
  for (std::size_t i = 0; i < leaves.size(); ++i) out.f1.set_leaf(i, vals[i]);
  out.f1.finalize();
  return out;
}

const std::vector<Vec3>& ball_lattice() {
  static const std::vector<Vec3> pts = [] {
    std::vector<Vec3> v;
    for (int k = -4; k <= 4; ++k) {
      for (int j = -4; j <= 4; ++j) {
        for (int i = -4; i <= 4; ++i) {
          if (i * i + j * j + k * k <= 16) v.push_back({i / 4.0, j / 4.0, k / 4.0});
        }
      }
    }
    return v;
  }();
  return pts;
}

double ball_average(const ScalarField& field, const Vec3& c, double r) {
  if (!(r > 0.0)) return field(c);
  double acc = 0.0;
  const auto& lat = ball_lattice();
  for (const auto& o : lat) acc += field(c + o * r);
  return acc / static_cast<double>(lat.size());
}

namespace {

// Ball average at a leaf center, using the leaf's own data for lattice
// points that stay inside the leaf.
double leaf_ball_average(const ScalarField& in, std::size_t leaf, double r) {
  const auto& lf = in.grid().leaves()[leaf];
  if (!(r > 0.0)) return in.leaf_value(leaf);
  const double half = 0.5 * lf.h;
  const bool inside = r < half;
  if (in.mode() == ScalarField::Mode::Cell && inside) return in.leaf_value(leaf);
  double nb[27];
  if (in.mode() == ScalarField::Mode::Blend) in.gather_neighborhood(leaf, nb);
  double acc = 0.0;
  const auto& lat = ball_lattice();
  for (const auto& o : lat) {
    const Vec3 x = lf.center + o * r;
    const Vec3 rel = x - lf.center;
    const bool own = std::abs(rel.x) < half && std::abs(rel.y) < half && std::abs(rel.z) < half;
    if (!own) {
      acc += in(x);
    } else if (in.mode() == ScalarField::Mode::Cell) {
      acc += in.leaf_value(leaf);
    } else {
      acc += in.local_blend(leaf, nb, x);
    }
  }
  return acc / static_cast<double>(lat.size());
}

}  // namespace

ScalarField mollify(const ScalarField& in, const std::vector<double>& radius, ScalarField::Mode out_mode) {
  const GradedGrid& grid = in.grid();
  if (radius.size() != grid.leaf_count()) throw InvalidInput("mollify needs one radius per leaf");
  std::vector<double> vals(grid.leaf_count());
  parallel_for(vals.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) vals[i] = leaf_ball_average(in, i, radius[i]);
  });
  ScalarField out(grid, out_mode);
  for (std::size_t i = 0; i < vals.size(); ++i) out.set_leaf(i, vals[i]);
  out.finalize();
  return out;
}

double laplacian_fd(const std::function<double(const Vec3&)>& u, const Vec3& m, double step) {
  if (!(step > 0.0)) throw InvalidInput("finite-difference step must be positive");
  const double c = u(m);
  double acc = 0.0;
  for (int a = 0; a < 3; ++a) {
    Vec3 e;
    if (a == 0) e.x = step;
    else if (a == 1) e.y = step;
    else e.z = step;
    acc += (u(m + e) - c) + (u(m - e) - c);
  }
  return acc / (step * step);
}

Vec3 gradient_fd(const std::function<double(const Vec3&)>& u, const Vec3& m, double step) {
  if (!(step > 0.0)) throw InvalidInput("finite-difference step must be positive");
  Vec3 g;
  const Vec3 ex{step, 0, 0}, ey{0, step, 0}, ez{0, 0, step};
  g.x = (u(m + ex) - u(m - ex)) / (2.0 * step);
  g.y = (u(m + ey) - u(m - ey)) / (2.0 * step);
  g.z = (u(m + ez) - u(m - ez)) / (2.0 * step);
  return g;
}

LaplacianValue laplacian(const ScalarField& f0, const Vec3& m, double step) {
  return {laplacian_fd([&](const Vec3& x) { return f0(x); }, m, step), step};
}

namespace {

// Net flux into a leaf of size h through the face shared with node `nb`,
// descending into the children of nb that touch the face.
void face_flux(const ScalarField& u, int nb, int axis, int side, double h, double ui, double& acc) {
  const GradedGrid& g = u.grid();
  const auto& node = g.nodes()[static_cast<std::size_t>(nb)];
  if (node.first_child < 0) {
    const double hj = g.size_at(node.depth);
    const double a = std::min(h, hj);
    acc += (u.leaf_value(static_cast<std::size_t>(node.leaf)) - ui) * a * a / (0.5 * (h + hj));
    return;
  }
  for (int c = 0; c < 8; ++c) {
    if (((c >> axis) & 1) != side) continue;
    face_flux(u, node.first_child + c, axis, side, h, ui, acc);
  }
}

}  // namespace

std::vector<double> flux_laplacian(const ScalarField& u, const std::vector<char>& skip) {
  const GradedGrid& g = u.grid();
  const auto& leaves = g.leaves();
  if (skip.size() != leaves.size()) throw InvalidInput("flux_laplacian needs one skip flag per leaf");
  std::vector<double> out(leaves.size(), 0.0);
  parallel_for(leaves.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (skip[i]) continue;
      const auto& node = g.nodes()[static_cast<std::size_t>(leaves[i].node)];
      const double h = g.size_at(node.depth);
      const double ui = u.leaf_value(i);
      double acc = 0.0;
      for (int axis = 0; axis < 3; ++axis) {
        for (int dir = -1; dir <= 1; dir += 2) {
          std::int64_t c[3] = {node.ix, node.iy, node.iz};
          c[axis] += dir;
          const int nb = g.find_node(node.depth, c[0], c[1], c[2]);
          if (nb < 0) {
            acc += (0.0 - ui) * h;
            continue;
          }
          // children of a finer neighbour that touch our face lie on its near side
          face_flux(u, nb, axis, dir > 0 ? 0 : 1, h, ui, acc);
        }
      }
      out[i] = acc / (h * h * h);
    }
  });
  return out;
}

std::shared_ptr<const Extension> Extension::build(const CurveFunction& f, const ExtensionParams& params_in) {
  ExtensionParams params = params_in;
  params.validate();
  const CurvePtr& curve = f.curve_ptr();
  const double len = curve->length();
  // A nonzero f(A) puts a jump on the sphere |x - A| = 2|L|.
  if (f(0.0) != 0.0) params.grid.refine_outer = true;

  std::shared_ptr<Extension> ext(new Extension(f));
  if (params.budget > 0) {
    const double r_max = std::ldexp(len, -(params.n_max + 1));
    const double r_min = std::min(r_max, std::ldexp(len, -13));
    ext->grid_ = std::make_unique<GradedGrid>(
        GradedGrid::build_for_budget(curve, params.grid, params.budget, r_min, r_max));
  } else {
    const int lvl = params.exclusion_level < 0 ? params.n_max + 2 : params.exclusion_level;
    params.grid.exclusion_radius = std::ldexp(len, -lvl);
    ext->grid_ = std::make_unique<GradedGrid>(GradedGrid::build(curve, params.grid));
  }
  params.grid = ext->grid_->params();
  ext->params_ = params;
  const GradedGrid& grid = *ext->grid_;
  const double rho = grid.params().exclusion_radius;

  int cap = params.n_max + 2;
  if (rho > 0.0) cap = std::max(cap, static_cast<int>(std::ceil(std::log2(len / rho))) + 3);
  cap = std::min(cap, kMaxDyadicLevel);
  ext->table_ = std::make_unique<DyadicTable>(curve, cap);

  auto step = step_extension(f, *ext->table_, grid);
  ext->f1_ = std::make_unique<ScalarField>(std::move(step.f1));
  ext->level_ = std::move(step.level);
  ext->k_ = std::move(step.k);

  const auto& leaves = grid.leaves();
  RegularizedDistance rd(curve);
  ext->d0_.assign(leaves.size(), 0.0);
  parallel_for(leaves.size(), [&](std::size_t b, std::size_t e) {
    RegularizedDistance::Evaluator ev(rd);
    for (std::size_t i = b; i < e; ++i) {
      if (leaves[i].d > 0.0) ext->d0_[i] = ev.eval_with_distance(leaves[i].center, leaves[i].d).d0;
    }
  });
  double c2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (!leaves[i].excluded && leaves[i].d > 0.0) c2 = std::min(c2, ext->d0_[i] / leaves[i].d);
  }
  ext->c2_ = std::isfinite(c2) ? c2 : 0.0;

  ext->f2_ = std::make_unique<ScalarField>(mollify(*ext->f1_, ext->d0_, ScalarField::Mode::Blend));
  ext->f0_ = std::make_unique<ScalarField>(mollify(*ext->f2_, ext->d0_, ScalarField::Mode::Blend));

  // Core cells (inside the exclusion radius, left ungraded) keep their flux
  // masses: dropping them loses the flux through the core surface.
  ext->lap_ = flux_laplacian(*ext->f0_, std::vector<char>(leaves.size(), 0));

  ext->fit_ = laplacian_bound_fit(*ext, f, params.fit_level_lo, params.n_max, params.c5_candidates);
  return ext;
}

LaplacianBoundFit laplacian_bound_fit(const Extension& ext, const CurveFunction& f, int level_lo, int level_hi,
                     const std::vector<double>& c5_candidates) {
  const GradedGrid& grid = ext.grid();
  const auto& leaves = grid.leaves();
  const double len = grid.curve().length();
  LaplacianBoundFit best;
  best.c5 = c5_candidates.front();
  if (level_hi < level_lo) return best;
  const int nlev = level_hi - level_lo + 1;

  // Cells attached to level n: the largest n with 2 Lambda_n > d.
  struct Sample {
    std::size_t leaf;
    int level;
    double lap, grad;
  };
  std::vector<Sample> samples;
  const ScalarField& f0 = ext.f0();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const auto& lf = leaves[i];
    if (lf.excluded || !(lf.d > 0.0)) continue;
    int n = static_cast<int>(std::ceil(std::log2(2.0 * len / lf.d))) - 1;
    if (n < level_lo || n > level_hi) continue;
    samples.push_back({i, n, std::abs(ext.lap()[i]), 0.0});
  }
  parallel_for(samples.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      const auto& lf = leaves[samples[j].leaf];
      samples[j].grad = norm(gradient_fd([&](const Vec3& x) { return f0(x); }, lf.center, lf.h));
    }
  });
  best.samples = samples.size();

  double best_spread = std::numeric_limits<double>::infinity();
  for (double c5 : c5_candidates) {
    std::vector<double> lapc(static_cast<std::size_t>(nlev), 0.0), gradc(static_cast<std::size_t>(nlev), 0.0);
    std::vector<double> mods(samples.size());
    parallel_for(samples.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t j = b; j < e; ++j) {
        const auto& lf = leaves[samples[j].leaf];
        mods[j] = delta_star_sample(f, lf.s, c5 * lf.d).value;
      }
    });
    bool any = false;
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (!(mods[j] > 0.0)) continue;
      const double lam = std::ldexp(len, -samples[j].level);
      auto slot = static_cast<std::size_t>(samples[j].level - level_lo);
      lapc[slot] = std::max(lapc[slot], samples[j].lap * lam * lam / mods[j]);
      gradc[slot] = std::max(gradc[slot], samples[j].grad * lam / mods[j]);
      any = true;
    }
    if (!any) continue;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    double glo = std::numeric_limits<double>::infinity(), ghi = 0.0;
    for (int s = 0; s < nlev; ++s) {
      auto u = static_cast<std::size_t>(s);
      if (lapc[u] > 0.0) {
        lo = std::min(lo, lapc[u]);
        hi = std::max(hi, lapc[u]);
      }
      if (gradc[u] > 0.0) {
        glo = std::min(glo, gradc[u]);
        ghi = std::max(ghi, gradc[u]);
      }
    }
    if (!(hi > 0.0)) continue;
    const double spread = hi / lo;
    if (spread < best_spread) {
      best_spread = spread;
      best.c5 = c5;
      best.informative = true;
      best.levels.clear();
      for (int s = 0; s < nlev; ++s) best.levels.push_back(level_lo + s);
      best.lap_constant = lapc;
      best.grad_constant = gradc;
      best.lap_spread = spread;
      best.grad_spread = ghi > 0.0 ? ghi / glo : 0.0;
    }
  }
  return best;
}

}  // namespace chordarc
