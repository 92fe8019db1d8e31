#include "psenet/polynomial.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "psenet/linalg.hpp"
#include "psenet/rng.hpp"

namespace psenet {

namespace {

constexpr double kRcondThreshold = 1e-12;
constexpr int kMaxResample = 64;

// All multi-indices with |alpha| = total over `dim` variables, first
// component outermost and descending: a fixed enumeration both the matrix
// columns and the coefficient vector share.
void enumerate_rec(int dim, int total, std::vector<int>& prefix,
                   std::vector<std::vector<int>>& out) {
  if (dim == 1) {
    prefix.push_back(total);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int head = total; head >= 0; --head) {
    prefix.push_back(head);
    enumerate_rec(dim - 1, total - head, prefix, out);
    prefix.pop_back();
  }
}

std::vector<std::vector<int>> multi_indices(int dim, int total) {
  std::vector<std::vector<int>> out;
  std::vector<int> prefix;
  enumerate_rec(dim, total, prefix, out);
  return out;
}

double multinomial(int total, const std::vector<int>& alpha) {
  // total! / prod(alpha_j!) with small arguments; exact in float64 for the
  // degrees in scope.
  double value = 1.0;
  int used = 0;
  for (int a : alpha) {
    for (int j = 1; j <= a; ++j) {
      ++used;
      value *= static_cast<double>(used) / static_cast<double>(j);
    }
  }
  (void)total;
  return value;
}

// Candidate directions for one homogeneous degree. d <= 2 uses the moment
// curve (1, t) with Chebyshev-spread t, a scaled Vandermonde system; for
// d >= 3 that family is structurally singular (distinct monomials of equal
// weighted degree yield proportional columns), so directions are drawn from
// a fixed-seed unit-sphere stream instead and re-drawn while the system is
// ill-conditioned.
std::vector<std::vector<double>> make_directions(int dim, int degree,
                                                 std::size_t count,
                                                 int attempt) {
  std::vector<std::vector<double>> dirs(count, std::vector<double>(dim, 0.0));
  if (dim == 1) {
    dirs[0][0] = 1.0;
    return dirs;
  }
  if (dim == 2) {
    for (std::size_t s = 0; s < count; ++s) {
      double t = std::cos(M_PI * (2.0 * s + 1.0) / (2.0 * count));
      dirs[s][0] = 1.0;
      dirs[s][1] = t;
    }
    return dirs;
  }
  Rng rng(0xC0FFEEull + 1315423911ull * static_cast<std::uint64_t>(dim) +
          2654435761ull * static_cast<std::uint64_t>(degree) +
          97531ull * static_cast<std::uint64_t>(attempt));
  for (auto& w : dirs) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (double& c : w) {
        c = rng.normal();
        norm2 += c * c;
      }
    } while (norm2 < 1e-12);
    double inv = 1.0 / std::sqrt(norm2);
    for (double& c : w) c *= inv;
  }
  return dirs;
}

}  // namespace

void Polynomial::validate() const {
  if (dim < 1) throw std::invalid_argument("polynomial: dim must be >= 1");
  for (const Monomial& term : terms) {
    if (term.exponents.size() != static_cast<std::size_t>(dim)) {
      throw std::invalid_argument("polynomial: exponent tuple of size " +
                                  std::to_string(term.exponents.size()) +
                                  " in dimension " + std::to_string(dim));
    }
    for (int e : term.exponents) {
      if (e < 0) throw std::invalid_argument("polynomial: negative exponent");
    }
  }
}

double Polynomial::eval(const std::vector<double>& x) const {
  if (x.size() != static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("polynomial eval: point dimension mismatch");
  }
  double acc = 0.0;
  for (const Monomial& term : terms) {
    double v = term.coeff;
    for (int i = 0; i < dim; ++i) {
      v *= ipow(x[static_cast<std::size_t>(i)], term.exponents[static_cast<std::size_t>(i)]);
    }
    acc += v;
  }
  return acc;
}

int Polynomial::degree() const {
  int deg = 0;
  for (const Monomial& term : terms) {
    if (term.coeff == 0.0) continue;
    int total = 0;
    for (int e : term.exponents) total += e;
    deg = std::max(deg, total);
  }
  return deg;
}

MonomialPair monomial_pair(int power) {
  if (power < 1) throw std::invalid_argument("monomial_pair: power must be >= 1");
  MonomialPair pair;
  pair.power = power;
  pair.coeff_pos = 1.0;
  pair.coeff_neg = power % 2 == 0 ? 1.0 : -1.0;
  return pair;
}

double MonomialPair::eval(double x) const {
  double pos = x > 0.0 ? ipow(x, power) : 0.0;
  double neg = x < 0.0 ? ipow(-x, power) : 0.0;
  return coeff_pos * pos + coeff_neg * neg;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t value = 1;
  for (int j = 1; j <= k; ++j) {
    value = value * static_cast<std::uint64_t>(n - k + j) /
            static_cast<std::uint64_t>(j);
  }
  return value;
}

OneHiddenPse polynomial_to_pse(const Polynomial& p) {
  p.validate();
  const int d = p.dim;

  // Collapse terms into per-degree coefficient maps over the shared
  // multi-index enumeration.
  std::map<int, std::map<std::vector<int>, double>> by_degree;
  for (const Monomial& term : p.terms) {
    if (term.coeff == 0.0) continue;
    int total = 0;
    for (int e : term.exponents) total += e;
    by_degree[total][term.exponents] += term.coeff;
  }

  double c0 = 0.0;
  if (by_degree.count(0)) {
    c0 = by_degree[0].begin()->second;
  }

  std::vector<double> linear(static_cast<std::size_t>(d), 0.0);
  bool has_linear = false;
  if (by_degree.count(1)) {
    for (const auto& [alpha, coeff] : by_degree[1]) {
      if (coeff == 0.0) continue;
      for (int i = 0; i < d; ++i) {
        if (alpha[static_cast<std::size_t>(i)] == 1) {
          linear[static_cast<std::size_t>(i)] = coeff;
          has_linear = true;
        }
      }
    }
  }

  // Solve the direction systems degree by degree before sizing branches.
  struct DegreeExpansion {
    int degree;
    std::vector<std::vector<double>> directions;
    std::vector<double> weights;
  };
  std::vector<DegreeExpansion> expansions;
  for (const auto& [degree, coeffs] : by_degree) {
    if (degree < 2) continue;
    auto alphas = multi_indices(d, degree);
    const std::size_t m = alphas.size();  // C(degree+d-1, degree)

    std::vector<double> rhs(m, 0.0);
    bool any = false;
    for (std::size_t r = 0; r < m; ++r) {
      auto it = coeffs.find(alphas[r]);
      if (it != coeffs.end() && it->second != 0.0) {
        rhs[r] = it->second;
        any = true;
      }
    }
    if (!any) continue;

    DenseSolve solved;
    std::vector<std::vector<double>> dirs;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxResample; ++attempt) {
      dirs = make_directions(d, degree, m, attempt);
      std::vector<double> mat(m * m, 0.0);
      for (std::size_t r = 0; r < m; ++r) {
        double mult = multinomial(degree, alphas[r]);
        for (std::size_t s = 0; s < m; ++s) {
          double wpow = 1.0;
          for (int var = 0; var < d; ++var) {
            wpow *= ipow(dirs[s][static_cast<std::size_t>(var)],
                         alphas[r][static_cast<std::size_t>(var)]);
          }
          mat[r * m + s] = mult * wpow;
        }
      }
      if (rcond_estimate(mat, m) < kRcondThreshold) continue;
      solved = solve_dense(std::move(mat), rhs, m);
      ok = true;
      break;
    }
    if (!ok) {
      throw std::runtime_error(
          "polynomial_to_pse: direction system stayed singular after " +
          std::to_string(kMaxResample) + " attempts (degree " +
          std::to_string(degree) + ", dim " + std::to_string(d) + ")");
    }
    expansions.push_back({degree, std::move(dirs), std::move(solved.x)});
  }

  int n = 0;
  for (const DegreeExpansion& e : expansions) n = std::max(n, e.degree);
  if (has_linear) n = std::max(n, 1);

  std::vector<int> widths(static_cast<std::size_t>(n) + 1, 0);
  widths[0] = has_linear ? 1 : 0;
  for (const DegreeExpansion& e : expansions) {
    int live = 0;
    for (double w : e.weights) {
      if (w != 0.0) live += 2;
    }
    widths[static_cast<std::size_t>(e.degree)] = live;
  }

  OneHiddenPse net = make_one_hidden(n, d, widths);
  net.c0 = Tensor::scalar(c0);
  if (has_linear) {
    OneHiddenBranch& br = net.branches[0];
    for (int i = 0; i < d; ++i) {
      br.W.at(0, static_cast<std::size_t>(i)) = linear[static_cast<std::size_t>(i)];
    }
    br.b.at(0) = 0.0;
    br.alpha.at(0, 0) = 1.0;
  }
  for (const DegreeExpansion& e : expansions) {
    OneHiddenBranch& br = net.branches[static_cast<std::size_t>(e.degree)];
    MonomialPair pair = monomial_pair(e.degree);
    std::size_t row = 0;
    for (std::size_t s = 0; s < e.weights.size(); ++s) {
      double cs = e.weights[s];
      if (cs == 0.0) continue;
      for (int var = 0; var < d; ++var) {
        double w = e.directions[s][static_cast<std::size_t>(var)];
        br.W.at(row, static_cast<std::size_t>(var)) = w;
        br.W.at(row + 1, static_cast<std::size_t>(var)) = -w;
      }
      br.alpha.at(0, row) = pair.coeff_pos * cs;
      br.alpha.at(0, row + 1) = pair.coeff_neg * cs;
      row += 2;
    }
  }
  return net;
}

}  // namespace psenet
