#include <doctest.h>

#include <cmath>
#include <vector>

#include "psenet/layers.hpp"
#include "psenet/rng.hpp"

#include "test_helpers.hpp"

using namespace psenet;
using psenet::testing::rel_err;

namespace {

Tensor random_batch(Rng& rng, std::size_t n, std::size_t d, double lo = -2.0,
                    double hi = 2.0) {
  Tensor x = Tensor::uninitialized({n, d});
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(lo, hi);
  return x;
}

}  // namespace

TEST_CASE("pse layer with n=0, identity weights, identity readout is the identity") {
  Network net;
  PseSharedLayer layer = make_pse_shared(0, 3, 3);
  for (int i = 0; i < 3; ++i) layer.W.at(i, i) = 1.0;
  for (int i = 0; i < 3; ++i) layer.alpha[0].at(i) = 1.0;
  net.layers.push_back(layer);
  net.readout_W = Tensor::zeros({3, 3});
  for (int i = 0; i < 3; ++i) net.readout_W.at(i, i) = 1.0;
  net.readout_b = Tensor::zeros({3});

  Rng rng(1);
  Tensor x = random_batch(rng, 5, 3);
  Tensor y = forward(net, x);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.at(i) == x.at(i));
}

TEST_CASE("pse layer with n=1 and unit alphas matches the resnet block bit-exactly") {
  Rng rng(2);
  PseSharedLayer pse = make_pse_shared(1, 4, 3);
  ResNetBlock res = make_resnet(4, 3);
  for (std::size_t i = 0; i < pse.W.size(); ++i) {
    double v = rng.uniform(-1.5, 1.5);
    pse.W.data()[i] = v;
    res.W.data()[i] = v;
  }
  for (std::size_t i = 0; i < pse.b.size(); ++i) {
    double v = rng.uniform(-1.0, 1.0);
    pse.b.data()[i] = v;
    res.b.data()[i] = v;
  }
  for (int i = 0; i < 4; ++i) pse.alpha[0].at(i) = 1.0;
  for (int i = 0; i < 4; ++i) pse.alpha[1].at(i) = 1.0;

  Tensor readout_w = Tensor::uninitialized({1, 4});
  for (std::size_t i = 0; i < 4; ++i) readout_w.data()[i] = rng.uniform(-1, 1);
  Tensor readout_b = Tensor::from_vector({rng.uniform(-1, 1)});

  Network a;
  a.layers.push_back(pse);
  a.readout_W = readout_w;
  a.readout_b = readout_b;
  Network b;
  b.layers.push_back(res);
  b.readout_W = readout_w;
  b.readout_b = readout_b;

  Tensor x = random_batch(rng, 1000, 3);
  Tensor ya = forward(a, x);
  Tensor yb = forward(b, x);
  for (std::size_t i = 0; i < ya.size(); ++i) CHECK(ya.at(i) == yb.at(i));
}

TEST_CASE("networks of n=0 pse layers are affine maps") {
  // Affine interpolation identity: N(t a + (1-t) b) = t N(a) + (1-t) N(b).
  Rng rng(3);
  Network net;
  for (int depth = 0; depth < 2; ++depth) {
    PseSharedLayer layer = make_pse_shared(0, 4, depth == 0 ? 2 : 4);
    for (std::size_t i = 0; i < layer.W.size(); ++i) {
      layer.W.data()[i] = rng.uniform(-1, 1);
    }
    for (std::size_t i = 0; i < layer.b.size(); ++i) {
      layer.b.data()[i] = rng.uniform(-1, 1);
    }
    for (int i = 0; i < 4; ++i) layer.alpha[0].at(i) = rng.uniform(-1, 1);
    net.layers.push_back(layer);
  }
  net.readout_W = Tensor::uninitialized({1, 4});
  for (std::size_t i = 0; i < 4; ++i) net.readout_W.data()[i] = rng.uniform(-1, 1);
  net.readout_b = Tensor::from_vector({rng.uniform(-1, 1)});

  for (int trial = 0; trial < 20; ++trial) {
    Tensor a = random_batch(rng, 1, 2);
    Tensor b = random_batch(rng, 1, 2);
    double tmix = rng.uniform(0.0, 1.0);
    Tensor mix = Tensor::uninitialized({1, 2});
    for (std::size_t i = 0; i < 2; ++i) {
      mix.data()[i] = tmix * a.data()[i] + (1 - tmix) * b.data()[i];
    }
    double lhs = forward(net, mix).at(0);
    double rhs = tmix * forward(net, a).at(0) + (1 - tmix) * forward(net, b).at(0);
    CHECK(std::fabs(lhs - rhs) <= 1e-12);
  }
}

TEST_CASE("one-hidden net evaluates its power series formula") {
  // f(x) = c0 + a0 (w0 x + b0) + a2 relu(w2 x + b2)^2, checked by hand.
  OneHiddenPse net = make_one_hidden(2, 1, {1, 0, 1});
  net.c0 = Tensor::scalar(0.25);
  net.branches[0].W.at(0, 0) = 2.0;
  net.branches[0].b.at(0) = -1.0;
  net.branches[0].alpha.at(0, 0) = 3.0;
  net.branches[2].W.at(0, 0) = 1.0;
  net.branches[2].b.at(0) = 0.5;
  net.branches[2].alpha.at(0, 0) = -2.0;

  auto reference = [](double x) {
    double affine = 3.0 * (2.0 * x - 1.0);
    double r = std::max(0.0, x + 0.5);
    return 0.25 + affine - 2.0 * r * r;
  };
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    double x = rng.uniform(-2.0, 2.0);
    Tensor out = forward(net, Tensor::from_matrix(1, 1, {x}));
    CHECK(rel_err(out.at(0), reference(x)) <= 1e-14);
  }
  CHECK(neuron_count(net) == 2);
}

TEST_CASE("parameter and neuron counts") {
  OneHiddenPse one = make_one_hidden(2, 1, {1, 3, 2});
  CHECK(neuron_count(one) == 6);
  // c0 + (W,b,alpha) per branch: 1 + (1+1+1) + (3+3+3) + (2+2+2) = 19.
  CHECK(param_count(one) == 19);

  Network net;
  net.layers.push_back(make_fc(10, 1));
  net.readout_W = Tensor::zeros({1, 10});
  net.readout_b = Tensor::zeros({1});
  // The hidden layer alone carries 10 weights + 10 biases.
  CHECK(param_count(net) == 20 + 11);
}

TEST_CASE("init is deterministic and unknown schemes are rejected") {
  Network a, b;
  for (Network* net : {&a, &b}) {
    net->layers.push_back(make_pse_shared(3, 8, 1));
    net->readout_W = Tensor::zeros({1, 8});
    net->readout_b = Tensor::zeros({1});
  }
  init(a, "he-uniform", 42);
  init(b, "he-uniform", 42);
  auto pa = parameters(a);
  auto pb = parameters(b);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t k = 0; k < pa[i]->size(); ++k) {
      CHECK(pa[i]->at(k) == pb[i]->at(k));
    }
  }
  CHECK_THROWS_AS(init(a, "xavier", 0), std::invalid_argument);
}

TEST_CASE("resnet-start init makes every pse degree start as the same resnet") {
  // alpha_{j>=2} = 0 kills higher powers, so an n=5 net at init agrees with
  // the n=1 net that shares its W, b draws.
  auto build = [](int n) {
    Network net;
    net.layers.push_back(make_pse_shared(n, 10, 1));
    net.readout_W = Tensor::zeros({1, 10});
    net.readout_b = Tensor::zeros({1});
    init(net, "he-uniform", 7);
    return net;
  };
  Network n1 = build(1);
  Network n5 = build(5);
  Rng rng(5);
  Tensor x = random_batch(rng, 64, 1);
  Tensor y1 = forward(n1, x);
  Tensor y5 = forward(n5, x);
  for (std::size_t i = 0; i < y1.size(); ++i) CHECK(y1.at(i) == y5.at(i));
}

TEST_CASE("width validation on the affine branch") {
  CHECK_THROWS_AS(make_one_hidden(1, 1, {2, 3}), std::invalid_argument);
  CHECK_NOTHROW(make_one_hidden(1, 1, {0, 3}));
  CHECK_THROWS_AS(make_one_hidden(1, 1, {1}), std::invalid_argument);
}
