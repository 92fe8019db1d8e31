#include "psenet/hp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "psenet/linalg.hpp"

namespace psenet {

HpMesh hp_geometric_mesh(int n_elements, double mu, double delta) {
  if (n_elements < 1) {
    throw std::invalid_argument("hp_geometric_mesh: need at least one element");
  }
  if (!(mu > 0.0)) {
    throw std::invalid_argument("hp_geometric_mesh: mu must be positive");
  }
  if (!(delta >= 1.0)) {
    throw std::invalid_argument("hp_geometric_mesh: delta must be >= 1");
  }
  HpMesh out;
  out.mesh.push_back(0.0);
  for (int i = 1; i <= n_elements; ++i) {
    out.mesh.push_back(std::ldexp(1.0, -(n_elements - i)));
  }
  out.degrees.push_back(1);
  for (int i = 2; i <= n_elements; ++i) {
    int p = static_cast<int>(std::floor(mu * std::pow(static_cast<double>(i), delta)));
    p = std::max({p, out.degrees.back(), 1});
    out.degrees.push_back(p);
  }
  return out;
}

PiecewisePoly hp_interpolate(const std::function<double(double)>& f,
                             const std::vector<double>& mesh,
                             const std::vector<int>& degrees) {
  if (mesh.size() < 2 || degrees.size() != mesh.size() - 1) {
    throw std::invalid_argument("hp_interpolate: mesh/degree size mismatch");
  }
  for (std::size_t i = 0; i + 1 < mesh.size(); ++i) {
    if (!(mesh[i] < mesh[i + 1])) {
      throw std::invalid_argument("hp_interpolate: mesh not strictly increasing");
    }
  }
  PiecewisePoly out;
  out.mesh = mesh;
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    const int p = degrees[i];
    if (p < 1) {
      throw std::invalid_argument(
          "hp_interpolate: element " + std::to_string(i + 1) +
          " has degree 0 (continuity needs endpoint interpolation)");
    }
    const double xl = mesh[i];
    const double h = mesh[i + 1] - mesh[i];
    const std::size_t np = static_cast<std::size_t>(p) + 1;

    // Chebyshev-Lobatto nodes mapped to [0, 1]; ends land exactly on 0 and 1
    // so shared mesh points get identical f evaluations on both sides.
    std::vector<double> s(np), y(np);
    for (std::size_t j = 0; j < np; ++j) {
      s[j] = 0.5 * (1.0 - std::cos(M_PI * static_cast<double>(j) /
                                   static_cast<double>(p)));
      y[j] = f(xl + h * s[j]);
    }
    s.front() = 0.0;
    s.back() = 1.0;

    std::vector<double> vand(np * np);
    for (std::size_t r = 0; r < np; ++r) {
      double pw = 1.0;
      for (std::size_t c = 0; c < np; ++c) {
        vand[r * np + c] = pw;
        pw *= s[r];
      }
    }
    DenseSolve solved = solve_dense(std::move(vand), y, np);

    // Snap solver-noise coefficients to zero: they are below the system's
    // resolution anyway, and the later change of basis multiplies them by
    // h^{-k}, which would smear noise across the whole domain.
    double scale = 0.0;
    for (double a : solved.x) scale = std::max(scale, std::fabs(a));
    for (double& a : solved.x) {
      if (std::fabs(a) <= 32 * 2.220446049250313e-16 * scale) a = 0.0;
    }

    // Local monomial basis in t = x - xl: divide out h^k.
    std::vector<double> local(np);
    double hk = 1.0;
    for (std::size_t k = 0; k < np; ++k) {
      local[k] = solved.x[k] / hk;
      hk *= h;
    }
    out.coeffs.push_back(std::move(local));
  }
  out.validate();
  return out;
}

OneHiddenPse singular_to_pse(const std::function<double(double)>& f,
                             int n_elements, double mu, double delta) {
  HpMesh hm = hp_geometric_mesh(n_elements, mu, delta);
  PiecewisePoly interp = hp_interpolate(f, hm.mesh, hm.degrees);
  return piecewise_to_pse(interp);
}

}  // namespace psenet
