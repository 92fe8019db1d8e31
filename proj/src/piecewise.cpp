#include "psenet/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace psenet {

namespace {

constexpr double kContinuityTol = 1e-12;

// Index of the element whose closed interval contains x; points outside the
// mesh use the nearest end element's polynomial extension.
std::size_t element_of(const std::vector<double>& mesh, double x) {
  auto it = std::upper_bound(mesh.begin(), mesh.end(), x);
  std::size_t i = it == mesh.begin() ? 0 : static_cast<std::size_t>(it - mesh.begin() - 1);
  return std::min(i, mesh.size() - 2);
}

double horner(const std::vector<double>& a, double t) {
  double acc = 0.0;
  for (std::size_t k = a.size(); k-- > 0;) acc = acc * t + a[k];
  return acc;
}

// In-place Taylor shift: coefficients of p(t) become coefficients of
// p(s + h) in s.
void shift_basis(std::vector<double>& a, double h) {
  if (a.size() < 2) return;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    for (std::size_t k = a.size() - 1; k-- > i;) {
      a[k] += h * a[k + 1];
    }
  }
}

}  // namespace

int PiecewisePoly::degree(int element) const {
  return static_cast<int>(coeffs.at(static_cast<std::size_t>(element)).size()) - 1;
}

int PiecewisePoly::max_degree() const {
  int deg = 0;
  for (int i = 0; i < elements(); ++i) deg = std::max(deg, degree(i));
  return deg;
}

double PiecewisePoly::eval(double x) const {
  std::size_t i = element_of(mesh, x);
  return horner(coeffs[i], x - mesh[i]);
}

double PiecewisePoly::eval_derivative(double x) const {
  std::size_t i = element_of(mesh, x);
  const std::vector<double>& a = coeffs[i];
  double acc = 0.0;
  double t = x - mesh[i];
  for (std::size_t k = a.size(); k-- > 1;) {
    acc = acc * t + static_cast<double>(k) * a[k];
  }
  return acc;
}

void PiecewisePoly::validate() const {
  if (mesh.size() < 2) {
    throw std::invalid_argument("piecewise: mesh needs at least two points");
  }
  if (coeffs.size() != mesh.size() - 1) {
    throw std::invalid_argument(
        "piecewise: " + std::to_string(mesh.size() - 1) + " elements but " +
        std::to_string(coeffs.size()) + " coefficient rows");
  }
  for (std::size_t i = 0; i + 1 < mesh.size(); ++i) {
    if (!(mesh[i] < mesh[i + 1])) {
      throw std::invalid_argument("piecewise: mesh not strictly increasing at index " +
                                  std::to_string(i + 1));
    }
  }
  for (const std::vector<double>& a : coeffs) {
    if (a.empty()) {
      throw std::invalid_argument("piecewise: element with no coefficients");
    }
  }
  for (std::size_t i = 0; i + 1 < coeffs.size(); ++i) {
    double left = horner(coeffs[i], mesh[i + 1] - mesh[i]);
    double right = coeffs[i + 1][0];
    double scale = std::max({1.0, std::fabs(left), std::fabs(right)});
    if (std::fabs(left - right) > kContinuityTol * scale) {
      throw std::invalid_argument(
          "piecewise: discontinuity at node " + std::to_string(i + 1) +
          " (left " + std::to_string(left) + ", right " + std::to_string(right) + ")");
    }
  }
}

OneHiddenPse piecewise_to_pse(const PiecewisePoly& p) {
  p.validate();
  const int M = p.elements();
  for (int i = 1; i < M; ++i) {
    if (p.degree(i) < p.degree(i - 1)) {
      throw std::invalid_argument(
          "piecewise_to_pse: element " + std::to_string(i + 1) + " has degree " +
          std::to_string(p.degree(i)) + " below element " + std::to_string(i) +
          " (degrees must be non-decreasing)");
    }
  }
  const int n = p.max_degree();

  // tilde[i][k] (k >= 1): the jump polynomial switched on at node mesh[i],
  // expanded in powers of (x - mesh[i]). Element 0 contributes its own
  // polynomial minus the boundary value; element i >= 1 the difference from
  // its predecessor, whose constant term vanishes by continuity.
  std::vector<std::vector<double>> tilde(static_cast<std::size_t>(M));
  tilde[0] = p.coeffs[0];
  tilde[0][0] = 0.0;
  for (int i = 1; i < M; ++i) {
    std::vector<double> prev = p.coeffs[static_cast<std::size_t>(i - 1)];
    shift_basis(prev, p.mesh[static_cast<std::size_t>(i)] -
                          p.mesh[static_cast<std::size_t>(i - 1)]);
    std::vector<double> diff = p.coeffs[static_cast<std::size_t>(i)];
    if (prev.size() > diff.size()) prev.resize(diff.size());  // cannot happen: degrees non-decreasing
    for (std::size_t k = 0; k < prev.size(); ++k) diff[k] -= prev[k];
    diff[0] = 0.0;
    tilde[static_cast<std::size_t>(i)] = std::move(diff);
  }

  std::vector<int> widths(static_cast<std::size_t>(n) + 1, 0);
  for (const std::vector<double>& t : tilde) {
    for (std::size_t k = 1; k < t.size(); ++k) {
      if (t[k] != 0.0) ++widths[k];
    }
  }

  OneHiddenPse net = make_one_hidden(n, 1, widths);
  net.c0 = Tensor::scalar(p.coeffs[0][0]);
  std::vector<std::size_t> row(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < M; ++i) {
    const std::vector<double>& t = tilde[static_cast<std::size_t>(i)];
    for (std::size_t k = 1; k < t.size(); ++k) {
      if (t[k] == 0.0) continue;
      OneHiddenBranch& br = net.branches[k];
      br.W.at(row[k], 0) = 1.0;
      br.b.at(row[k]) = -p.mesh[static_cast<std::size_t>(i)];
      br.alpha.at(0, row[k]) = t[k];
      ++row[k];
    }
  }
  return net;
}

}  // namespace psenet
