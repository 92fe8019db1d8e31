#include <doctest.h>

#include <cmath>
#include <vector>

#include "psenet/hp.hpp"
#include "psenet/rng.hpp"

#include "test_helpers.hpp"

using namespace psenet;
using psenet::testing::rel_err;

TEST_CASE("geometric mesh shapes") {
  HpMesh m3 = hp_geometric_mesh(3, 1.0, 1.0);
  CHECK(m3.mesh == std::vector<double>{0.0, 0.25, 0.5, 1.0});
  CHECK(m3.degrees == std::vector<int>{1, 2, 3});

  HpMesh m1 = hp_geometric_mesh(1, 2.0, 1.5);
  CHECK(m1.mesh == std::vector<double>{0.0, 1.0});
  CHECK(m1.degrees == std::vector<int>{1});

  HpMesh m5 = hp_geometric_mesh(5, 1.5, 1.2);
  for (std::size_t i = 1; i < m5.degrees.size(); ++i) {
    CHECK(m5.degrees[i] >= m5.degrees[i - 1]);
  }
  CHECK(m5.degrees[0] == 1);

  CHECK_THROWS_AS(hp_geometric_mesh(0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(hp_geometric_mesh(3, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(hp_geometric_mesh(3, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("interpolation reproduces linear functions exactly") {
  HpMesh hm = hp_geometric_mesh(5, 1.0, 1.0);
  auto f = [](double x) { return 3.0 * x - 1.25; };
  PiecewisePoly v = hp_interpolate(f, hm.mesh, hm.degrees);
  Rng rng(43);
  for (int i = 0; i < 1000; ++i) {
    double x = rng.uniform(0.0, 1.0);
    CHECK(std::fabs(v.eval(x) - f(x)) <= 1e-12);
  }
}

TEST_CASE("interpolant hits the target at mesh points") {
  auto f = [](double x) { return std::pow(x, 2.0 / 3.0); };
  HpMesh hm = hp_geometric_mesh(2, 1.0, 1.0);
  PiecewisePoly v = hp_interpolate(f, hm.mesh, hm.degrees);
  CHECK(std::fabs(v.eval(0.5) - std::pow(0.5, 2.0 / 3.0)) <= 1e-14);
  CHECK(v.eval(0.0) == 0.0);
  CHECK(std::fabs(v.eval(1.0) - 1.0) <= 1e-14);
}

TEST_CASE("degree zero is rejected") {
  auto f = [](double x) { return x; };
  CHECK_THROWS_WITH_AS(hp_interpolate(f, {0.0, 0.5, 1.0}, {1, 0}),
                       doctest::Contains("element 2"), std::invalid_argument);
}

TEST_CASE("interior continuity of the interpolant") {
  auto f = [](double x) { return std::pow(x, 2.0 / 3.0); };
  HpMesh hm = hp_geometric_mesh(8, 1.0, 1.0);
  PiecewisePoly v = hp_interpolate(f, hm.mesh, hm.degrees);  // validates internally
  for (std::size_t i = 1; i + 1 < v.mesh.size(); ++i) {
    double node = v.mesh[i];
    double left = 0.0;
    {
      double t = node - v.mesh[i - 1];
      const std::vector<double>& a = v.coeffs[i - 1];
      for (std::size_t k = a.size(); k-- > 0;) left = left * t + a[k];
    }
    double right = v.coeffs[i][0];
    CHECK(std::fabs(left - right) <= 1e-12 * std::max(1.0, std::fabs(right)));
  }
}

TEST_CASE("pipeline on a non-singular linear target is exact") {
  auto f = [](double x) { return x; };
  for (int n : {1, 2, 4, 8}) {
    OneHiddenPse net = singular_to_pse(f, n, 1.0, 1.0);
    Rng rng(47);
    for (int i = 0; i < 500; ++i) {
      double x = rng.uniform(0.0, 1.0);
      CHECK(std::fabs(eval_scalar(net, x) - x) <= 1e-12);
    }
  }
}

TEST_CASE("pipeline reproduces members of its own space") {
  Rng rng(53);
  HpMesh hm = hp_geometric_mesh(5, 1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    // Random continuous piecewise polynomial matching the degree vector.
    PiecewisePoly target;
    target.mesh = hm.mesh;
    for (std::size_t i = 0; i < hm.degrees.size(); ++i) {
      std::vector<double> a(static_cast<std::size_t>(hm.degrees[i]) + 1);
      for (double& c : a) c = rng.uniform(-1.0, 1.0);
      if (i > 0) {
        double t = target.mesh[i] - target.mesh[i - 1];
        double left = 0.0;
        for (std::size_t k = target.coeffs[i - 1].size(); k-- > 0;) {
          left = left * t + target.coeffs[i - 1][k];
        }
        a[0] = left;
      }
      target.coeffs.push_back(a);
    }
    auto f = [&target](double x) { return target.eval(x); };
    PiecewisePoly v = hp_interpolate(f, hm.mesh, hm.degrees);
    OneHiddenPse net = piecewise_to_pse(v);
    for (int i = 0; i < 1000; ++i) {
      double x = rng.uniform(0.0, 1.0);
      CHECK(rel_err(eval_scalar(net, x), target.eval(x)) <= 1e-10);
    }
  }
}

TEST_CASE("singular pipeline interpolates x^alpha at the mesh nodes") {
  auto f = [](double x) { return std::pow(x, 2.0 / 3.0); };
  OneHiddenPse net = singular_to_pse(f, 6, 1.0, 1.0);
  HpMesh hm = hp_geometric_mesh(6, 1.0, 1.0);
  for (double node : hm.mesh) {
    CHECK(std::fabs(eval_scalar(net, node) - f(node)) <= 1e-10);
  }
  // Sanity on neuron growth: |m| <= sum of element degrees.
  int bound = 0;
  for (int p : hm.degrees) bound += p;
  CHECK(neuron_count(net) <= bound);
}

TEST_CASE("scalar evaluation agrees with the tensor path and finite differences") {
  auto f = [](double x) { return std::pow(x, 2.0 / 3.0); };
  OneHiddenPse net = singular_to_pse(f, 5, 1.0, 1.0);
  Rng rng(59);
  for (int i = 0; i < 300; ++i) {
    double x = rng.uniform(0.01, 0.99);
    Tensor in = Tensor::full({1, 1}, x);
    CHECK(rel_err(eval_scalar(net, x), forward(net, in).at(0)) <= 1e-12);

    auto [v, d] = eval_scalar_with_derivative(net, x);
    CHECK(v == eval_scalar(net, x));
    double h = 1e-7;
    double fd = (eval_scalar(net, x + h) - eval_scalar(net, x - h)) / (2 * h);
    CHECK(std::fabs(d - fd) <= 1e-4 * std::max(1.0, std::fabs(fd)));
  }
}
