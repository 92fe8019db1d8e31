#pragma once

#include <functional>
#include <vector>

#include "psenet/layers.hpp"
#include "psenet/piecewise.hpp"

namespace psenet {

// Geometric mesh accumulating at x = 0 with a graded degree vector: element
// boundaries x_i = 2^{-(n-i)}, first-element degree 1, then floor(mu * i^delta)
// clamped non-decreasing.
struct HpMesh {
  std::vector<double> mesh;  // n + 1 points, mesh[0] = 0, mesh[n] = 1
  std::vector<int> degrees;  // n entries, non-decreasing, all >= 1
};

HpMesh hp_geometric_mesh(int n_elements, double mu, double delta);

// Per-element polynomial interpolation of f at Chebyshev-Lobatto nodes
// (endpoints included, so the result is continuous by construction).
// Degree-0 elements are rejected: without interior freedom beyond the shared
// endpoint they cannot both interpolate and stay continuous.
PiecewisePoly hp_interpolate(const std::function<double(double)>& f,
                             const std::vector<double>& mesh,
                             const std::vector<int>& degrees);

// Full pipeline: geometric mesh -> interpolant -> exact one-hidden-layer
// net. The result equals the interpolant everywhere on [0, 1]; its H1
// distance to a singular f like x^alpha decays exponentially in n_elements.
OneHiddenPse singular_to_pse(const std::function<double(double)>& f,
                             int n_elements, double mu, double delta);

}  // namespace psenet
