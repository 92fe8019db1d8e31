#include "psenet/bspline.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace psenet {

void BsplineSeries::validate() const {
  if (degree < 1) throw std::invalid_argument("BsplineSeries: degree must be >= 1");
  if (k < 0) throw std::invalid_argument("BsplineSeries: k must be >= 0");
  std::size_t want = static_cast<std::size_t>(degree + k + 1);
  if (coeffs.size() != want) {
    throw std::invalid_argument("BsplineSeries: expected " +
                                std::to_string(want) + " coefficients, got " +
                                std::to_string(coeffs.size()));
  }
}

std::vector<double> bspline_weights(int degree) {
  if (degree < 0) throw std::invalid_argument("bspline_weights: degree < 0");
  std::vector<double> w(static_cast<std::size_t>(degree) + 2);
  for (int i = 0; i <= degree + 1; ++i) {
    double prod = 1.0;
    for (int j = 0; j <= degree + 1; ++j) {
      if (j == i) continue;
      prod /= static_cast<double>(i - j);
    }
    w[static_cast<std::size_t>(i)] = prod;
  }
  return w;
}

double bspline_eval(int degree, double x) {
  if (degree < 1) throw std::invalid_argument("bspline_eval: degree must be >= 1");
  if (x <= 0.0 || x >= static_cast<double>(degree + 1)) return 0.0;
  std::vector<double> w = bspline_weights(degree);
  double acc = 0.0;
  for (int i = 0; i <= degree + 1; ++i) {
    double r = static_cast<double>(i) - x;
    if (r <= 0.0) continue;
    acc += w[static_cast<std::size_t>(i)] * ipow(r, degree);
  }
  return static_cast<double>(degree + 1) * acc;
}

double bspline_series_eval(const BsplineSeries& s, double x) {
  s.validate();
  // x/h with h = 1/(k+1) is computed as x*(k+1): exact in intent and
  // matching the weights the net stores.
  double scale = static_cast<double>(s.k + 1);
  double acc = 0.0;
  for (int j = -s.degree; j <= s.k; ++j) {
    double c = s.coeff(j);
    if (c == 0.0) continue;
    acc += c * bspline_eval(s.degree, x * scale - static_cast<double>(j));
  }
  return acc;
}

OneHiddenPse bspline_series_to_pse(const BsplineSeries& s) {
  s.validate();
  const int n = s.degree;
  std::vector<double> w = bspline_weights(n);

  // b^n(x/h - j) = (n+1) sum_i w_i relu((i+j) - x/h)^n. Terms with the same
  // kink index s = i+j collapse into one neuron; s <= 0 terms vanish
  // identically on [0, 1] and are dropped. The exact-integer key makes the
  // merge unambiguous.
  std::map<int, double> kink_coeff;
  for (int j = -n; j <= s.k; ++j) {
    double c = s.coeff(j);
    if (c == 0.0) continue;
    for (int i = 0; i <= n + 1; ++i) {
      int kink = i + j;
      if (kink <= 0) continue;
      kink_coeff[kink] +=
          static_cast<double>(n + 1) * w[static_cast<std::size_t>(i)] * c;
    }
  }
  for (auto it = kink_coeff.begin(); it != kink_coeff.end();) {
    it = it->second == 0.0 ? kink_coeff.erase(it) : std::next(it);
  }

  std::vector<int> widths(static_cast<std::size_t>(n) + 1, 0);
  widths[static_cast<std::size_t>(n)] = static_cast<int>(kink_coeff.size());
  OneHiddenPse net = make_one_hidden(n, 1, widths);
  OneHiddenBranch& branch = net.branches[static_cast<std::size_t>(n)];
  std::size_t row = 0;
  for (const auto& [kink, coeff] : kink_coeff) {
    branch.W.at(row, 0) = -static_cast<double>(s.k + 1);
    branch.b.at(row) = static_cast<double>(kink);
    branch.alpha.at(0, row) = coeff;
    ++row;
  }
  return net;
}

}  // namespace psenet
