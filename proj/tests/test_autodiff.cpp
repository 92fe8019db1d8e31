#include <doctest.h>

#include <cmath>
#include <vector>

#include "psenet/autodiff.hpp"
#include "psenet/rng.hpp"
#include "psenet/tape.hpp"
#include "psenet/tensor.hpp"

#include "test_helpers.hpp"

using namespace psenet;
using psenet::testing::fd_partial;
using psenet::testing::rel_err;

TEST_CASE("relu_pow values") {
  Tape t;
  int x = t.leaf(Tensor::from_vector({-2.0, 1.5, 3.0, -3.0, 0.0}));

  int cubed = t.relu_pow(x, 3);
  CHECK(t.value(cubed).at(0) == 0.0);  // negative input clamps to zero

  int ident = t.relu_pow(x, 0);
  CHECK(t.value(ident).at(1) == 1.5);  // power 0 is the identity

  int squared = t.relu_pow(x, 2);
  CHECK(t.value(squared).at(2) == 9.0);
  // (-3)^2 recovered from the signed pair of half-powers.
  CHECK(t.value(squared).at(2) + t.value(squared).at(3) == 9.0);
  CHECK(t.value(squared).at(4) == 0.0);
}

TEST_CASE("relu_pow equals first power raised to k, exactly") {
  Tape t;
  Rng rng(7);
  std::vector<double> xs(64);
  for (double& v : xs) v = rng.uniform(-3.0, 3.0);
  int x = t.leaf(Tensor::from_vector(xs));
  for (int k = 1; k <= 5; ++k) {
    int direct = t.relu_pow(x, k);
    int once = t.relu_pow(x, 1);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double ref = ipow(t.value(once).at(i), k);
      CHECK(t.value(direct).at(i) == ref);
    }
  }
}

TEST_CASE("core algebra examples") {
  Tape t;
  int a = t.leaf(Tensor::from_vector({1.0, 2.0, 3.0}));
  int b = t.leaf(Tensor::from_vector({0.0, 1.0, 2.0}));
  int h = t.hadamard(a, b);
  CHECK(t.value(h).at(0) == 0.0);
  CHECK(t.value(h).at(1) == 2.0);
  CHECK(t.value(h).at(2) == 6.0);

  int eye = t.leaf(Tensor::from_matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  int v = t.leaf(Tensor::from_matrix(3, 1, {4.0, -5.0, 6.0}));
  int mv = t.matmul(eye, v);
  for (int i = 0; i < 3; ++i) CHECK(t.value(mv).at(i) == t.value(v).at(i));

  int z = t.leaf(Tensor::zeros({3}));
  int s = t.add(z, a);
  for (int i = 0; i < 3; ++i) CHECK(t.value(s).at(i) == t.value(a).at(i));
}

TEST_CASE("shape mismatch is a hard error naming both shapes") {
  Tape t;
  int a = t.leaf(Tensor::zeros({2, 3}));
  int b = t.leaf(Tensor::zeros({2, 2}));
  CHECK_THROWS_WITH_AS(t.add(a, b),
                       doctest::Contains("(2, 3)"), std::invalid_argument);
  CHECK_THROWS_AS(t.matmul(a, a), std::invalid_argument);
}

TEST_CASE("backward rejects non-scalar roots") {
  Tape t;
  int a = t.leaf(Tensor::zeros({2, 2}));
  CHECK_THROWS_AS(t.backward(a), std::invalid_argument);
}

TEST_CASE("backward: simple relu_pow derivatives") {
  {
    Tape t;
    int x = t.leaf(Tensor::scalar(3.0));
    int y = t.sum(t.relu_pow(x, 2));
    auto adj = t.backward(y);
    CHECK(t.value(adj[x]).at(0) == 6.0);  // 2x on x > 0
  }
  {
    Tape t;
    int x = t.leaf(Tensor::scalar(-1.0));
    int y = t.sum(t.relu_pow(x, 1));
    auto adj = t.backward(y);
    CHECK(t.value(adj[x]).at(0) == 0.0);  // dead region
  }
  {
    // Derivative at exactly 0 is defined as 0 for every power.
    for (int k = 1; k <= 3; ++k) {
      Tape t;
      int x = t.leaf(Tensor::scalar(0.0));
      int y = t.sum(t.relu_pow(x, k));
      auto adj = t.backward(y);
      CHECK(t.value(adj[x]).at(0) == 0.0);
    }
  }
}

TEST_CASE("backward populates matching-shape adjoints for reachable nodes") {
  Tape t;
  int x = t.leaf(Tensor::from_matrix(4, 3, std::vector<double>(12, 0.25)));
  int w = t.leaf(Tensor::from_matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  int b = t.leaf(Tensor::from_vector({0.5, -0.5}));
  int z = t.linear(x, w, b);
  int s = t.relu_pow(z, 2);
  int root = t.sum(s);
  std::size_t recorded = t.node_count();
  auto adj = t.backward(root);
  for (std::size_t id = 0; id < recorded; ++id) {
    REQUIRE(adj[id] >= 0);  // every recorded node reaches the root here
    CHECK(t.value(adj[id]).shape() == t.value(static_cast<int>(id)).shape());
  }
}

namespace {

// Scalar function of a flat parameter vector, built fresh on its own tape:
// sum(relu_pow(X W^T + b, 2) * v) through every structural op.
double composite_eval(const std::vector<double>& theta) {
  Tape t;
  int x = t.leaf(Tensor::from_matrix(3, 2, {0.3, -0.7, 1.1, 0.4, -0.2, 0.9}));
  int w = t.leaf(Tensor::from_matrix(2, 2, {theta[0], theta[1], theta[2], theta[3]}));
  int b = t.leaf(Tensor::from_vector({theta[4], theta[5]}));
  int v = t.leaf(Tensor::from_vector({theta[6], theta[7]}));
  int z = t.linear(x, w, b);
  int s = t.relu_pow(z, 2);
  int blended = t.row_scale(s, v);
  int shifted = t.row_add(blended, b);
  int folded = t.col_sum(shifted);
  int again = t.row_broadcast(folded, 2);
  return t.scalar_value(t.mean(again));
}

}  // namespace

TEST_CASE("backward matches central finite differences on a composite graph") {
  std::vector<double> theta = {0.8, -0.3, 0.5, 1.2, 0.1, -0.6, 0.7, 0.9};

  Tape t;
  int x = t.leaf(Tensor::from_matrix(3, 2, {0.3, -0.7, 1.1, 0.4, -0.2, 0.9}));
  int w = t.leaf(Tensor::from_matrix(2, 2, {theta[0], theta[1], theta[2], theta[3]}));
  int b = t.leaf(Tensor::from_vector({theta[4], theta[5]}));
  int v = t.leaf(Tensor::from_vector({theta[6], theta[7]}));
  int z = t.linear(x, w, b);
  int s = t.relu_pow(z, 2);
  int blended = t.row_scale(s, v);
  int shifted = t.row_add(blended, b);
  int folded = t.col_sum(shifted);
  int again = t.row_broadcast(folded, 2);
  int root = t.mean(again);
  auto adj = t.backward(root);

  std::vector<std::pair<int, std::size_t>> layout = {
      {w, 0}, {w, 1}, {w, 2}, {w, 3}, {b, 0}, {b, 1}, {v, 0}, {v, 1}};
  // b appears twice in the graph (linear bias and row_add shift); the
  // adjoint must pick up both paths.
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto [node, offset] = layout[i];
    double got = t.value(adj[node]).at(offset);
    double want = fd_partial(composite_eval, theta, i);
    CHECK(rel_err(got, want) <= 1e-5);
  }
}

TEST_CASE("target pruning skips unrelated parameters but matches full pass") {
  Tape t;
  int x = t.leaf(Tensor::from_matrix(2, 1, {0.4, 1.3}));
  int w = t.leaf(Tensor::from_matrix(3, 1, {0.5, -1.0, 2.0}));
  int b = t.leaf(Tensor::from_vector({0.1, 0.2, -0.3}));
  int z = t.linear(x, w, b);
  int root = t.sum(t.relu_pow(z, 3));

  Tape t2;
  int x2 = t2.leaf(Tensor::from_matrix(2, 1, {0.4, 1.3}));
  int w2 = t2.leaf(Tensor::from_matrix(3, 1, {0.5, -1.0, 2.0}));
  int b2 = t2.leaf(Tensor::from_vector({0.1, 0.2, -0.3}));
  int z2 = t2.linear(x2, w2, b2);
  int root2 = t2.sum(t2.relu_pow(z2, 3));

  auto full = t.backward(root);
  auto pruned = t2.backward(root2, {x2});
  CHECK(pruned[w2] == -1);
  CHECK(pruned[b2] == -1);
  REQUIRE(pruned[x2] >= 0);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(t2.value(pruned[x2]).at(i, 0) == t.value(full[x]).at(i, 0));
  }
}

TEST_CASE("input_derivative on elementary nets") {
  {
    // N(x) = relu(2x) at x = 1 has slope 2.
    Tape t;
    int x = t.leaf(Tensor::from_matrix(1, 1, {1.0}));
    int w = t.leaf(Tensor::from_matrix(1, 1, {2.0}));
    int b = t.leaf(Tensor::zeros({1}));
    int y = t.relu_pow(t.linear(x, w, b), 1);
    int d = input_derivative(t, y, x);
    CHECK(t.value(d).at(0, 0) == 2.0);
  }
  {
    // Identity net: slope 1 at every sample.
    Tape t;
    int x = t.leaf(Tensor::from_matrix(3, 1, {-0.5, 0.2, 0.8}));
    int w = t.leaf(Tensor::from_matrix(1, 1, {1.0}));
    int b = t.leaf(Tensor::zeros({1}));
    int y = t.linear(x, w, b);
    int d = input_derivative(t, y, x);
    for (int i = 0; i < 3; ++i) CHECK(t.value(d).at(i, 0) == 1.0);
  }
}

TEST_CASE("gradients of gradients: differentiating through input_derivative") {
  // N(x) = a * relu_pow(w x, 2) for x > 0, so N'(x) = 2 a w^2 x.
  // With L = (N'(x) - c)^2: dL/dw = 2 (2 a w^2 x - c) * 4 a w x.
  const double a = 0.7, w = 1.3, xv = 0.9, c = 2.0;
  Tape t;
  int x = t.leaf(Tensor::from_matrix(1, 1, {xv}));
  int wn = t.leaf(Tensor::from_matrix(1, 1, {w}));
  int b = t.leaf(Tensor::zeros({1}));
  int an = t.leaf(Tensor::from_matrix(1, 1, {a}));
  int y = t.matmul_nt(t.relu_pow(t.linear(x, wn, b), 2), an);
  int dycheck = input_derivative(t, y, x);
  double nprime = t.value(dycheck).at(0, 0);
  CHECK(rel_err(nprime, 2 * a * w * w * xv) <= 1e-12);

  int cn = t.leaf(Tensor::from_matrix(1, 1, {c}));
  int r = t.sub(dycheck, cn);
  int loss = t.sum(t.hadamard(r, r));
  auto adj = t.backward(loss, {wn, an});

  double analytic_w = 2 * (2 * a * w * w * xv - c) * 4 * a * w * xv;
  double analytic_a = 2 * (2 * a * w * w * xv - c) * 2 * w * w * xv;
  REQUIRE(adj[wn] >= 0);
  REQUIRE(adj[an] >= 0);
  CHECK(rel_err(t.value(adj[wn]).at(0, 0), analytic_w) <= 1e-10);
  CHECK(rel_err(t.value(adj[an]).at(0, 0), analytic_a) <= 1e-10);
}

TEST_CASE("relu_pow overflow sets the finite flag") {
  Tape t;
  int x = t.leaf(Tensor::from_vector({1e200, 1.0}));
  int y = t.relu_pow(x, 2);
  CHECK_FALSE(t.finite(y));
  int ok = t.relu_pow(x, 1);
  CHECK(t.finite(ok));
}

TEST_CASE("identical tapes produce bit-identical results, including after reset") {
  auto run = [](Tape& t) {
    Rng rng(99);
    std::vector<double> xs(40), ws(20);
    for (double& v : xs) v = rng.uniform(-2.0, 2.0);
    for (double& v : ws) v = rng.uniform(-1.0, 1.0);
    int x = t.leaf(Tensor::from_matrix(8, 5, xs));
    int w = t.leaf(Tensor::from_matrix(4, 5, ws));
    int b = t.leaf(Tensor::zeros({4}));
    int z = t.linear(x, w, b);
    int root = t.mean(t.relu_pow(z, 3));
    auto adj = t.backward(root);
    std::vector<double> out = {t.scalar_value(root)};
    const Tensor& gw = t.value(adj[w]);
    for (std::size_t i = 0; i < gw.size(); ++i) out.push_back(gw.at(i));
    return out;
  };

  Tape t1;
  auto first = run(t1);
  Tape t2;
  auto second = run(t2);
  CHECK(first == second);

  // Rebuilding on a reset tape recycles buffers; results must not change.
  t1.reset();
  auto third = run(t1);
  CHECK(first == third);
}
