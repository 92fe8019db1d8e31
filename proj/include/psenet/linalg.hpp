#pragma once

#include <cstddef>
#include <vector>

namespace psenet {

// Solution of a dense square system by Gaussian elimination with partial
// pivoting, plus a cheap reciprocal-condition proxy (ratio of smallest to
// largest pivot magnitude). Sizes in this library stay tiny (< 30), so a
// hand-rolled kernel keeps the build dependency-free and deterministic.
struct DenseSolve {
  std::vector<double> x;
  double rcond = 0.0;
};

// a: n*n row-major; rhs: length n. Throws std::runtime_error when a pivot
// is exactly zero (structurally singular system).
DenseSolve solve_dense(std::vector<double> a, std::vector<double> rhs,
                       std::size_t n);

// Pivot-ratio estimate alone, for pre-checking a candidate matrix.
double rcond_estimate(std::vector<double> a, std::size_t n);

}  // namespace psenet
