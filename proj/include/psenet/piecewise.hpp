#pragma once

#include <vector>

#include "psenet/layers.hpp"

namespace psenet {

// Continuous piecewise polynomial on a strictly increasing mesh, stored per
// element in the local monomial basis (x - left_endpoint)^k. Element i lives
// on [mesh[i], mesh[i+1]] and has nominal degree coeffs[i].size() - 1.
struct PiecewisePoly {
  std::vector<double> mesh;                 // size M+1, strictly increasing
  std::vector<std::vector<double>> coeffs;  // size M, each non-empty

  int elements() const { return static_cast<int>(coeffs.size()); }
  int degree(int element) const;
  int max_degree() const;
  double eval(double x) const;
  double eval_derivative(double x) const;
  // Mesh ordering, size consistency, and continuity at interior nodes
  // (mismatch <= 1e-12 relative to the local value scale).
  void validate() const;
};

// Exact one-hidden-layer representation on [mesh.front(), mesh.back()].
// Consecutive element differences vanish at the shared node, so each one is
// a combination of sigma^k(x - node) terms, and the whole function
// telescopes into the left boundary value plus at most one neuron per
// (element, power) pair: every branch width stays <= the element count.
// Requires non-decreasing element degrees.
OneHiddenPse piecewise_to_pse(const PiecewisePoly& p);

}  // namespace psenet
