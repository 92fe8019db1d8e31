#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "psenet/tape.hpp"
#include "psenet/tensor.hpp"

namespace psenet {

// h = relu(W h_prev + b)
struct FcLayer {
  Tensor W;  // d_out x d_in
  Tensor b;  // d_out
};

// h = relu(z) + z with z = W h_prev + b (the skip carries the affine map
// itself, so d_out need not equal d_in).
struct ResNetBlock {
  Tensor W;
  Tensor b;
};

// h = sum_{j=0}^{n} alpha[j] ⊙ sigma^j(W h_prev + b), sigma^0 = identity.
struct PseSharedLayer {
  int n = 0;
  Tensor W;
  Tensor b;
  std::vector<Tensor> alpha;  // n+1 vectors of length d_out
};

// h = sum_{j=0}^{n} alpha[j] ⊙ sigma^j(W[j] h_prev + b[j]).
struct PseGeneralizedLayer {
  int n = 0;
  std::vector<Tensor> W;
  std::vector<Tensor> b;
  std::vector<Tensor> alpha;
};

using Layer =
    std::variant<FcLayer, ResNetBlock, PseSharedLayer, PseGeneralizedLayer>;

// Hidden layers plus an activation-free affine readout.
struct Network {
  std::vector<Layer> layers;
  Tensor readout_W;  // d_out x d_last
  Tensor readout_b;  // d_out
};

// One power branch of a one-hidden-layer net: alpha sigma^j(W x + b) where
// alpha is a 1 x m_j row of output coefficients.
struct OneHiddenBranch {
  Tensor W;      // m_j x d
  Tensor b;      // m_j
  Tensor alpha;  // 1 x m_j
};

// f(x) = c0 + sum_{j=0}^{n} alpha_j sigma^j(W_j x + b_j). Branch widths m_j
// may be zero (branch absent); the j=0 branch, when present, is a single
// affine term (m_0 <= 1).
struct OneHiddenPse {
  int n = 0;
  int input_dim = 1;
  Tensor c0;  // scalar, shape {1}
  std::vector<OneHiddenBranch> branches;  // indexed by power j, size n+1

  int width(int j) const { return static_cast<int>(branches.at(j).W.rows()); }
};

using Model = std::variant<Network, OneHiddenPse>;

// Construction helpers (allocate zeroed parameters of the right shapes).
FcLayer make_fc(std::size_t d_out, std::size_t d_in);
ResNetBlock make_resnet(std::size_t d_out, std::size_t d_in);
PseSharedLayer make_pse_shared(int n, std::size_t d_out, std::size_t d_in);
PseGeneralizedLayer make_pse_generalized(int n, std::size_t d_out,
                                         std::size_t d_in);
OneHiddenPse make_one_hidden(int n, int input_dim, const std::vector<int>& m);

// Forward pass recorded on a tape. `x` is a leaf of shape (N, d); the output
// node has shape (N, d_out). `params` lists the parameter leaf nodes in the
// same order as parameters() so gradients map back to tensors.
struct TapedForward {
  int output = -1;
  std::vector<int> params;
};
TapedForward forward_taped(const Network& net, Tape& tape, int x_node);
TapedForward forward_taped(const OneHiddenPse& net, Tape& tape, int x_node);
TapedForward forward_taped(const Model& model, Tape& tape, int x_node);

// Eager evaluation on a scratch tape.
Tensor forward(const Network& net, const Tensor& x);
Tensor forward(const OneHiddenPse& net, const Tensor& x);
Tensor forward(const Model& model, const Tensor& x);

// Canonical parameter enumeration: hidden layers in order (per layer: W, b,
// then alphas by power; generalized layers interleave W_j, b_j, alpha_j),
// then the readout; OneHiddenPse lists c0 first, then W, b, alpha per
// non-empty branch.
std::vector<Tensor*> parameters(Network& net);
std::vector<Tensor*> parameters(OneHiddenPse& net);
std::vector<Tensor*> parameters(Model& model);

std::size_t param_count(const Network& net);
std::size_t param_count(const OneHiddenPse& net);
std::size_t param_count(const Model& model);

// Total neuron count |m| = sum_j m_j.
int neuron_count(const OneHiddenPse& net);

// Scalar evaluation path for univariate one-hidden-layer nets, accumulated
// in extended precision: the exact constructors can carry large
// opposite-signed coefficients whose cancellation float64 sums resolve
// poorly. Requires input_dim == 1.
double eval_scalar(const OneHiddenPse& net, double x);
// Value and d/dx together (one-sided at kinks, which quadrature midpoints
// never hit).
std::pair<double, double> eval_scalar_with_derivative(const OneHiddenPse& net,
                                                      double x);

std::size_t input_dim(const Network& net);
std::size_t input_dim(const Model& model);
std::size_t output_dim(const Network& net);

// Deterministic initialization. scheme: "he-uniform" draws W and b entries
// from U(-L, L) with L = sqrt(2 / fan_in); PSE alphas are set to the
// identity-plus-relu start (alpha_0 = alpha_1 = 1, higher powers 0) so every
// PSE net begins as the matching ResNet. OneHiddenPse output coefficients
// use fan_in = |m|; c0 starts at 0. Unknown schemes are an error.
void init(Network& net, const std::string& scheme, std::uint64_t seed);
void init(OneHiddenPse& net, const std::string& scheme, std::uint64_t seed);
void init(Model& model, const std::string& scheme, std::uint64_t seed);

}  // namespace psenet
