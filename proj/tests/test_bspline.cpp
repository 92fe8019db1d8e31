#include <doctest.h>

#include <cmath>
#include <vector>

#include "psenet/bspline.hpp"
#include "psenet/rng.hpp"

#include "test_helpers.hpp"

using namespace psenet;

namespace {

// Independent oracle: the Cox-de-Boor recursion for the cardinal B-spline,
// never touching the truncated-power formula under test.
double bspline_recursive(int degree, double x) {
  if (degree == 0) return (x >= 0.0 && x < 1.0) ? 1.0 : 0.0;
  double m = static_cast<double>(degree);
  return (x / m) * bspline_recursive(degree - 1, x) +
         ((m + 1.0 - x) / m) * bspline_recursive(degree - 1, x - 1.0);
}

}  // namespace

TEST_CASE("divided-difference weights: frozen low-degree values") {
  auto w1 = bspline_weights(1);
  REQUIRE(w1.size() == 3);
  CHECK(w1[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w1[1] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(w1[2] == doctest::Approx(0.5).epsilon(1e-15));

  auto w2 = bspline_weights(2);
  REQUIRE(w2.size() == 4);
  CHECK(w2[0] == doctest::Approx(-1.0 / 6.0).epsilon(1e-15));
  CHECK(w2[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(w2[2] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(w2[3] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("weights annihilate polynomials below the degree") {
  for (int n = 1; n <= 5; ++n) {
    auto w = bspline_weights(n);
    for (int r = 0; r <= n; ++r) {
      double acc = 0.0;
      for (int i = 0; i <= n + 1; ++i) {
        acc += w[static_cast<std::size_t>(i)] * ipow(static_cast<double>(i), r);
      }
      CHECK(std::fabs(acc) <= 1e-12);
    }
  }
}

TEST_CASE("truncated-power evaluation matches the recursive definition") {
  for (int n = 1; n <= 5; ++n) {
    for (int p = 0; p < 1000; ++p) {
      double x = -1.0 + (static_cast<double>(n) + 3.0) * p / 999.0;
      double got = bspline_eval(n, x);
      double want = bspline_recursive(n, x);
      CHECK(std::fabs(got - want) <= 1e-10);
    }
  }
}

TEST_CASE("hat peak and compact support") {
  CHECK(bspline_eval(1, 1.0) == 1.0);
  for (int n = 1; n <= 5; ++n) {
    CHECK(bspline_eval(n, -0.5) == 0.0);
    CHECK(bspline_eval(n, n + 1.5) == 0.0);
  }
}

TEST_CASE("partition of unity") {
  for (int n = 1; n <= 5; ++n) {
    for (int p = 0; p <= 500; ++p) {
      double t = 5.0 * p / 500.0;
      double acc = 0.0;
      for (int j = -(n + 1); j <= 6; ++j) {
        acc += bspline_eval(n, t - static_cast<double>(j));
      }
      CHECK(std::fabs(acc - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("series validation") {
  BsplineSeries bad{1, 1, {1.0}};  // needs degree+k+1 = 3 coefficients
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(bspline_series_eval(bad, 0.5), std::invalid_argument);
}

TEST_CASE("single hat spline becomes the two-neuron net found by hand") {
  // c = e_0 with degree 1, k = 1: the series is b^1(2x), which expands to
  // -2 relu(1-2x) + relu(2-2x) on [0,1].
  BsplineSeries s{1, 1, {0.0, 1.0, 0.0}};
  OneHiddenPse net = bspline_series_to_pse(s);
  CHECK(neuron_count(net) == 2);
  const OneHiddenBranch& br = net.branches[1];
  CHECK(br.W.at(0, 0) == -2.0);
  CHECK(br.b.at(0) == 1.0);
  CHECK(br.alpha.at(0, 0) == -2.0);
  CHECK(br.W.at(1, 0) == -2.0);
  CHECK(br.b.at(1) == 2.0);
  CHECK(br.alpha.at(0, 1) == 1.0);

  for (int p = 0; p < 1000; ++p) {
    double x = p / 999.0;
    double got = forward(net, Tensor::from_matrix(1, 1, {x})).at(0);
    double want = bspline_eval(1, 2.0 * x);
    CHECK(std::fabs(got - want) <= 1e-10);
  }
}

TEST_CASE("zero coefficients give the zero function and no neurons") {
  BsplineSeries s{2, 3, std::vector<double>(6, 0.0)};
  OneHiddenPse net = bspline_series_to_pse(s);
  CHECK(neuron_count(net) == 0);
  CHECK(forward(net, Tensor::from_matrix(1, 1, {0.37})).at(0) == 0.0);
}

TEST_CASE("random series nets match direct series evaluation") {
  Rng rng(31);
  for (int trial = 0; trial < 12; ++trial) {
    int n = 1 + static_cast<int>(rng.raw() % 3);
    int k = static_cast<int>(rng.raw() % 8);
    BsplineSeries s{n, k, {}};
    s.coeffs.resize(static_cast<std::size_t>(n + k + 1));
    for (double& c : s.coeffs) c = rng.uniform(-2.0, 2.0);

    OneHiddenPse net = bspline_series_to_pse(s);
    CHECK(neuron_count(net) <= k + n + 2);
    for (int p = 0; p <= 800; ++p) {
      double x = p / 800.0;
      double got = forward(net, Tensor::from_matrix(1, 1, {x})).at(0);
      double want = bspline_series_eval(s, x);
      CHECK(std::fabs(got - want) <= 1e-9);
    }
  }
}
