#pragma once

#include <cstdint>
#include <vector>

#include "psenet/layers.hpp"

namespace psenet {

// One term a * x1^e1 ... xd^ed of a multivariate polynomial.
struct Monomial {
  std::vector<int> exponents;
  double coeff = 0.0;
};

struct Polynomial {
  int dim = 1;
  std::vector<Monomial> terms;

  double eval(const std::vector<double>& x) const;
  int degree() const;
  void validate() const;
};

// x^i = coeff_pos * relu(x)^i + coeff_neg * relu(-x)^i, valid on all of R.
struct MonomialPair {
  int power = 1;
  double coeff_pos = 1.0;
  double coeff_neg = 1.0;

  double eval(double x) const;
};
MonomialPair monomial_pair(int power);

std::uint64_t binomial(int n, int k);

// Exact one-hidden-layer representation of p on R^d. Each homogeneous
// degree i >= 2 is expanded over C(i+d-1, i) directions by solving the
// multinomial coefficient system; every direction then contributes a signed
// pair of sigma^i neurons. The linear part rides on the affine branch and
// the constant on the output bias, so the total neuron count stays within
// 2*C(k+d, k).
OneHiddenPse polynomial_to_pse(const Polynomial& p);

}  // namespace psenet
