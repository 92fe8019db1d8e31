#pragma once

#include <vector>

#include "psenet/layers.hpp"

namespace psenet {

// Finite series in shifted/scaled cardinal B-splines of one degree on the
// uniform mesh of size h = 1/(k+1): s(x) = sum_{j=-degree}^{k} c_j
// b^degree(x/h - j). Coefficients are stored from j = -degree upward.
struct BsplineSeries {
  int degree = 1;
  int k = 0;
  std::vector<double> coeffs;

  double mesh() const { return 1.0 / static_cast<double>(k + 1); }
  // c_j addressed by the series index j in [-degree, k].
  double coeff(int j) const { return coeffs.at(static_cast<std::size_t>(j + degree)); }
  void validate() const;
};

// Divided-difference weights w_i = prod_{j != i} 1/(i-j), i = 0..degree+1.
std::vector<double> bspline_weights(int degree);

// Cardinal B-spline of degree >= 1 via its truncated-power expansion
// (degree+1) * sum_i w_i * relu(i-x)^degree; exactly 0 outside [0, degree+1].
double bspline_eval(int degree, double x);

// Direct evaluation of the series (the oracle the net is checked against).
double bspline_series_eval(const BsplineSeries& s, double x);

// One-hidden-layer net equal to the series everywhere on [0, 1]. Expands
// each shifted spline through bspline_weights and merges terms that share a
// kink location, so the active branch holds at most k + degree + 2 neurons.
OneHiddenPse bspline_series_to_pse(const BsplineSeries& s);

}  // namespace psenet
