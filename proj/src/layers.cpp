#include "psenet/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "psenet/rng.hpp"

namespace psenet {

namespace {

void fill_uniform(Tensor& t, Rng& rng, double limit) {
  double* p = t.data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    p[i] = rng.uniform(-limit, limit);
  }
}

double he_limit(std::size_t fan_in) {
  return std::sqrt(2.0 / static_cast<double>(fan_in == 0 ? 1 : fan_in));
}

void set_resnet_start_alphas(std::vector<Tensor>& alpha) {
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    double v = j <= 1 ? 1.0 : 0.0;
    double* p = alpha[j].data();
    for (std::size_t i = 0; i < alpha[j].size(); ++i) p[i] = v;
  }
}

}  // namespace

FcLayer make_fc(std::size_t d_out, std::size_t d_in) {
  return {Tensor::zeros({d_out, d_in}), Tensor::zeros({d_out})};
}

ResNetBlock make_resnet(std::size_t d_out, std::size_t d_in) {
  return {Tensor::zeros({d_out, d_in}), Tensor::zeros({d_out})};
}

PseSharedLayer make_pse_shared(int n, std::size_t d_out, std::size_t d_in) {
  if (n < 0) throw std::invalid_argument("make_pse_shared: n < 0");
  PseSharedLayer layer;
  layer.n = n;
  layer.W = Tensor::zeros({d_out, d_in});
  layer.b = Tensor::zeros({d_out});
  for (int j = 0; j <= n; ++j) layer.alpha.push_back(Tensor::zeros({d_out}));
  return layer;
}

PseGeneralizedLayer make_pse_generalized(int n, std::size_t d_out,
                                         std::size_t d_in) {
  if (n < 0) throw std::invalid_argument("make_pse_generalized: n < 0");
  PseGeneralizedLayer layer;
  layer.n = n;
  for (int j = 0; j <= n; ++j) {
    layer.W.push_back(Tensor::zeros({d_out, d_in}));
    layer.b.push_back(Tensor::zeros({d_out}));
    layer.alpha.push_back(Tensor::zeros({d_out}));
  }
  return layer;
}

OneHiddenPse make_one_hidden(int n, int input_dim, const std::vector<int>& m) {
  if (n < 0) throw std::invalid_argument("make_one_hidden: n < 0");
  if (m.size() != static_cast<std::size_t>(n) + 1) {
    throw std::invalid_argument("make_one_hidden: widths size " +
                                std::to_string(m.size()) + " for n = " +
                                std::to_string(n));
  }
  if (m[0] > 1) {
    throw std::invalid_argument(
        "make_one_hidden: the affine branch width m_0 must be 0 or 1, got " +
        std::to_string(m[0]));
  }
  OneHiddenPse net;
  net.n = n;
  net.input_dim = input_dim;
  net.c0 = Tensor::zeros({1});
  std::size_t d = static_cast<std::size_t>(input_dim);
  for (int j = 0; j <= n; ++j) {
    if (m[j] < 0) throw std::invalid_argument("make_one_hidden: negative width");
    std::size_t mj = static_cast<std::size_t>(m[j]);
    net.branches.push_back({Tensor::zeros({mj, d}), Tensor::zeros({mj}),
                            Tensor::zeros({1, mj})});
  }
  return net;
}

TapedForward forward_taped(const Network& net, Tape& tape, int x_node) {
  TapedForward result;
  int h = x_node;
  for (const Layer& layer : net.layers) {
    if (const auto* fc = std::get_if<FcLayer>(&layer)) {
      int w = tape.leaf(fc->W);
      int b = tape.leaf(fc->b);
      result.params.push_back(w);
      result.params.push_back(b);
      h = tape.relu_pow(tape.linear(h, w, b), 1);
    } else if (const auto* res = std::get_if<ResNetBlock>(&layer)) {
      int w = tape.leaf(res->W);
      int b = tape.leaf(res->b);
      result.params.push_back(w);
      result.params.push_back(b);
      int z = tape.linear(h, w, b);
      h = tape.add(z, tape.relu_pow(z, 1));
    } else if (const auto* ps = std::get_if<PseSharedLayer>(&layer)) {
      int w = tape.leaf(ps->W);
      int b = tape.leaf(ps->b);
      result.params.push_back(w);
      result.params.push_back(b);
      int z = tape.linear(h, w, b);
      int acc = -1;
      for (int j = 0; j <= ps->n; ++j) {
        int a = tape.leaf(ps->alpha[j]);
        result.params.push_back(a);
        int t = tape.row_scale(tape.relu_pow(z, j), a);
        acc = (acc < 0) ? t : tape.add(acc, t);
      }
      h = acc;
    } else if (const auto* pg = std::get_if<PseGeneralizedLayer>(&layer)) {
      int acc = -1;
      for (int j = 0; j <= pg->n; ++j) {
        int w = tape.leaf(pg->W[j]);
        int b = tape.leaf(pg->b[j]);
        int a = tape.leaf(pg->alpha[j]);
        result.params.push_back(w);
        result.params.push_back(b);
        result.params.push_back(a);
        int z = tape.linear(h, w, b);
        int t = tape.row_scale(tape.relu_pow(z, j), a);
        acc = (acc < 0) ? t : tape.add(acc, t);
      }
      h = acc;
    }
  }
  int w = tape.leaf(net.readout_W);
  int b = tape.leaf(net.readout_b);
  result.params.push_back(w);
  result.params.push_back(b);
  result.output = tape.linear(h, w, b);
  return result;
}

TapedForward forward_taped(const OneHiddenPse& net, Tape& tape, int x_node) {
  TapedForward result;
  int c0 = tape.leaf(net.c0);
  result.params.push_back(c0);
  int acc = -1;
  for (int j = 0; j <= net.n; ++j) {
    const OneHiddenBranch& br = net.branches[j];
    if (br.W.rows() == 0) continue;
    int w = tape.leaf(br.W);
    int b = tape.leaf(br.b);
    int a = tape.leaf(br.alpha);
    result.params.push_back(w);
    result.params.push_back(b);
    result.params.push_back(a);
    int z = tape.linear(x_node, w, b);
    int contrib = tape.matmul_nt(tape.relu_pow(z, j), a);
    acc = (acc < 0) ? contrib : tape.add(acc, contrib);
  }
  if (acc < 0) {
    std::size_t n_rows = tape.value(x_node).rows();
    result.output = tape.broadcast_full(c0, {n_rows, 1});
  } else {
    result.output = tape.row_add(acc, c0);
  }
  return result;
}

TapedForward forward_taped(const Model& model, Tape& tape, int x_node) {
  return std::visit(
      [&](const auto& net) { return forward_taped(net, tape, x_node); }, model);
}

namespace {

template <typename Net>
Tensor forward_eager(const Net& net, const Tensor& x) {
  if (x.rank() != 2) {
    throw std::invalid_argument("forward: input must be (N, d), got " +
                                x.shape_string());
  }
  Tape tape;
  TapedForward f = forward_taped(net, tape, tape.leaf(x));
  return tape.value(f.output);
}

}  // namespace

Tensor forward(const Network& net, const Tensor& x) {
  return forward_eager(net, x);
}

Tensor forward(const OneHiddenPse& net, const Tensor& x) {
  return forward_eager(net, x);
}

Tensor forward(const Model& model, const Tensor& x) {
  return std::visit([&](const auto& net) { return forward(net, x); }, model);
}

std::vector<Tensor*> parameters(Network& net) {
  std::vector<Tensor*> out;
  for (Layer& layer : net.layers) {
    if (auto* fc = std::get_if<FcLayer>(&layer)) {
      out.push_back(&fc->W);
      out.push_back(&fc->b);
    } else if (auto* res = std::get_if<ResNetBlock>(&layer)) {
      out.push_back(&res->W);
      out.push_back(&res->b);
    } else if (auto* ps = std::get_if<PseSharedLayer>(&layer)) {
      out.push_back(&ps->W);
      out.push_back(&ps->b);
      for (Tensor& a : ps->alpha) out.push_back(&a);
    } else if (auto* pg = std::get_if<PseGeneralizedLayer>(&layer)) {
      for (int j = 0; j <= pg->n; ++j) {
        out.push_back(&pg->W[j]);
        out.push_back(&pg->b[j]);
        out.push_back(&pg->alpha[j]);
      }
    }
  }
  out.push_back(&net.readout_W);
  out.push_back(&net.readout_b);
  return out;
}

std::vector<Tensor*> parameters(OneHiddenPse& net) {
  std::vector<Tensor*> out;
  out.push_back(&net.c0);
  for (OneHiddenBranch& br : net.branches) {
    if (br.W.rows() == 0) continue;
    out.push_back(&br.W);
    out.push_back(&br.b);
    out.push_back(&br.alpha);
  }
  return out;
}

std::vector<Tensor*> parameters(Model& model) {
  return std::visit([](auto& net) { return parameters(net); }, model);
}

namespace {

template <typename Net>
std::size_t count_params(const Net& net) {
  std::size_t total = 0;
  for (Tensor* t : parameters(const_cast<Net&>(net))) total += t->size();
  return total;
}

}  // namespace

std::size_t param_count(const Network& net) { return count_params(net); }
std::size_t param_count(const OneHiddenPse& net) { return count_params(net); }
std::size_t param_count(const Model& model) {
  return std::visit([](const auto& net) { return param_count(net); }, model);
}

int neuron_count(const OneHiddenPse& net) {
  int total = 0;
  for (const OneHiddenBranch& br : net.branches) {
    total += static_cast<int>(br.W.rows());
  }
  return total;
}

std::pair<double, double> eval_scalar_with_derivative(const OneHiddenPse& net,
                                                      double x) {
  if (net.input_dim != 1) {
    throw std::invalid_argument("eval_scalar: net is not univariate");
  }
  long double value = net.c0.at(0);
  long double deriv = 0.0L;
  for (std::size_t j = 0; j < net.branches.size(); ++j) {
    const OneHiddenBranch& br = net.branches[j];
    for (std::size_t r = 0; r < br.W.rows(); ++r) {
      const long double w = br.W.at(r, 0);
      const long double a = br.alpha.at(0, r);
      const long double z = w * static_cast<long double>(x) + br.b.at(r);
      if (j == 0) {
        value += a * z;
        deriv += a * w;
        continue;
      }
      if (z <= 0.0L) continue;
      long double zp = 1.0L;  // z^(j-1)
      for (std::size_t q = 1; q < j; ++q) zp *= z;
      value += a * zp * z;
      deriv += a * static_cast<long double>(j) * zp * w;
    }
  }
  return {static_cast<double>(value), static_cast<double>(deriv)};
}

double eval_scalar(const OneHiddenPse& net, double x) {
  return eval_scalar_with_derivative(net, x).first;
}

std::size_t input_dim(const Network& net) {
  if (net.layers.empty()) return net.readout_W.cols();
  return std::visit(
      [](const auto& layer) -> std::size_t {
        using T = std::decay_t<decltype(layer)>;
        if constexpr (std::is_same_v<T, PseGeneralizedLayer>) {
          return layer.W.at(0).cols();
        } else {
          return layer.W.cols();
        }
      },
      net.layers.front());
}

std::size_t input_dim(const Model& model) {
  if (const auto* net = std::get_if<Network>(&model)) return input_dim(*net);
  return static_cast<std::size_t>(std::get<OneHiddenPse>(model).input_dim);
}

std::size_t output_dim(const Network& net) { return net.readout_W.rows(); }

void init(Network& net, const std::string& scheme, std::uint64_t seed) {
  if (scheme != "he-uniform") {
    throw std::invalid_argument("init: unknown scheme '" + scheme + "'");
  }
  Rng rng(seed);
  for (Layer& layer : net.layers) {
    if (auto* fc = std::get_if<FcLayer>(&layer)) {
      double lim = he_limit(fc->W.cols());
      fill_uniform(fc->W, rng, lim);
      fill_uniform(fc->b, rng, lim);
    } else if (auto* res = std::get_if<ResNetBlock>(&layer)) {
      double lim = he_limit(res->W.cols());
      fill_uniform(res->W, rng, lim);
      fill_uniform(res->b, rng, lim);
    } else if (auto* ps = std::get_if<PseSharedLayer>(&layer)) {
      double lim = he_limit(ps->W.cols());
      fill_uniform(ps->W, rng, lim);
      fill_uniform(ps->b, rng, lim);
      set_resnet_start_alphas(ps->alpha);
    } else if (auto* pg = std::get_if<PseGeneralizedLayer>(&layer)) {
      for (int j = 0; j <= pg->n; ++j) {
        double lim = he_limit(pg->W[j].cols());
        fill_uniform(pg->W[j], rng, lim);
        fill_uniform(pg->b[j], rng, lim);
      }
      set_resnet_start_alphas(pg->alpha);
    }
  }
  double lim = he_limit(net.readout_W.cols());
  fill_uniform(net.readout_W, rng, lim);
  fill_uniform(net.readout_b, rng, lim);
}

void init(OneHiddenPse& net, const std::string& scheme, std::uint64_t seed) {
  if (scheme != "he-uniform") {
    throw std::invalid_argument("init: unknown scheme '" + scheme + "'");
  }
  Rng rng(seed);
  net.c0 = Tensor::zeros({1});
  double alpha_lim = he_limit(static_cast<std::size_t>(
      neuron_count(net) > 0 ? neuron_count(net) : 1));
  for (OneHiddenBranch& br : net.branches) {
    if (br.W.rows() == 0) continue;
    double lim = he_limit(br.W.cols());
    fill_uniform(br.W, rng, lim);
    fill_uniform(br.b, rng, lim);
    fill_uniform(br.alpha, rng, alpha_lim);
  }
}

void init(Model& model, const std::string& scheme, std::uint64_t seed) {
  std::visit([&](auto& net) { init(net, scheme, seed); }, model);
}

}  // namespace psenet
