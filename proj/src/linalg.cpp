#include "psenet/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace psenet {

namespace {

// In-place LU with partial pivoting; returns pivot magnitudes' extremes.
// rhs may be null (factor-only mode for rcond_estimate).
std::pair<double, double> eliminate(std::vector<double>& a,
                                    std::vector<double>* rhs, std::size_t n) {
  double min_pivot = HUGE_VAL, max_pivot = 0.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    double best_mag = std::fabs(a[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double mag = std::fabs(a[r * n + col]);
      if (mag > best_mag) {
        best_mag = mag;
        best = r;
      }
    }
    if (best_mag == 0.0) {
      min_pivot = 0.0;
      break;
    }
    if (best != col) {
      for (std::size_t c = col; c < n; ++c) {
        std::swap(a[col * n + c], a[best * n + c]);
      }
      if (rhs) std::swap((*rhs)[col], (*rhs)[best]);
    }
    min_pivot = std::fmin(min_pivot, best_mag);
    max_pivot = std::fmax(max_pivot, best_mag);
    double inv = 1.0 / a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      double factor = a[r * n + col] * inv;
      if (factor == 0.0) continue;
      a[r * n + col] = 0.0;
      for (std::size_t c = col + 1; c < n; ++c) {
        a[r * n + c] -= factor * a[col * n + c];
      }
      if (rhs) (*rhs)[r] -= factor * (*rhs)[col];
    }
  }
  return {min_pivot, max_pivot};
}

}  // namespace

DenseSolve solve_dense(std::vector<double> a, std::vector<double> rhs,
                       std::size_t n) {
  if (a.size() != n * n || rhs.size() != n) {
    throw std::invalid_argument("solve_dense: size mismatch");
  }
  auto [min_pivot, max_pivot] = eliminate(a, &rhs, n);
  if (min_pivot == 0.0) {
    throw std::runtime_error("solve_dense: singular matrix");
  }
  DenseSolve out;
  out.rcond = max_pivot > 0.0 ? min_pivot / max_pivot : 0.0;
  out.x.assign(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double acc = rhs[ri];
    for (std::size_t c = ri + 1; c < n; ++c) {
      acc -= a[ri * n + c] * out.x[c];
    }
    out.x[ri] = acc / a[ri * n + ri];
  }
  return out;
}

double rcond_estimate(std::vector<double> a, std::size_t n) {
  if (a.size() != n * n) {
    throw std::invalid_argument("rcond_estimate: size mismatch");
  }
  auto [min_pivot, max_pivot] = eliminate(a, nullptr, n);
  if (max_pivot == 0.0) return 0.0;
  return min_pivot / max_pivot;
}

}  // namespace psenet
