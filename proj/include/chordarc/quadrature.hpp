#pragma once

#include <vector>

#include "chordarc/vec3.hpp"

namespace chordarc {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

// n-point Gauss-Legendre rule by Newton iteration on P_n.
GaussRule gauss_legendre(int n);

// Product rule on the unit sphere: Gauss-Legendre in cos(theta) times the
// trapezoid rule in phi. Weights sum to 1 (sphere average).
struct SphereRule {
  std::vector<Vec3> dirs;
  std::vector<double> weights;
};
SphereRule sphere_rule(int n_theta, int n_phi);

// i-th element (1-based) of the van der Corput sequence in `base`.
double radical_inverse(unsigned i, unsigned base);

// First `count` points of the 3-D Halton sequence (bases 2, 3, 5) mapped to
// [-1,1]^3 and kept only inside the closed unit ball.
std::vector<Vec3> halton_ball(int count);

// The 26 unit directions toward the neighbours of a cube.
const std::vector<Vec3>& cube_directions();

}  // namespace chordarc
