#include "psenet/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "psenet/autodiff.hpp"
#include "psenet/tape.hpp"

namespace psenet {

std::vector<double> uniform_grid(double a, double b, double h) {
  if (!(a < b) || !(h > 0.0)) {
    throw std::invalid_argument("uniform_grid: need a < b and h > 0");
  }
  double steps = (b - a) / h;
  long n = std::lround(steps);
  bool integral = std::fabs(steps - static_cast<double>(n)) <= 1e-12 * steps;
  std::vector<double> pts;
  if (integral) {
    for (long i = 0; i <= n; ++i) {
      pts.push_back(i == n ? b : a + h * static_cast<double>(i));
    }
  } else {
    for (long i = 0; a + h * static_cast<double>(i) <= b + 1e-15; ++i) {
      pts.push_back(a + h * static_cast<double>(i));
    }
  }
  return pts;
}

Dataset dataset_1d(const std::function<double(double)>& f, double a, double b,
                   double h) {
  std::vector<double> xs = uniform_grid(a, b, h);
  Dataset d;
  d.inputs = Tensor::uninitialized({xs.size(), 1});
  d.targets = Tensor::uninitialized({xs.size(), 1});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d.inputs.at(i, 0) = xs[i];
    d.targets.at(i, 0) = f(xs[i]);
  }
  return d;
}

Dataset dataset_2d(const std::function<double(double, double)>& f, double a,
                   double b, double h) {
  std::vector<double> xs = uniform_grid(a, b, h);
  const std::size_t n = xs.size();
  Dataset d;
  d.inputs = Tensor::uninitialized({n * n, 2});
  d.targets = Tensor::uninitialized({n * n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d.inputs.at(i * n + j, 0) = xs[i];
      d.inputs.at(i * n + j, 1) = xs[j];
      d.targets.at(i * n + j, 0) = f(xs[i], xs[j]);
    }
  }
  return d;
}

Dataset h1_dataset(const std::function<double(double)>& f,
                   const std::function<double(double)>& f_prime, double a,
                   double b, int subintervals) {
  if (subintervals < 1 || !(a < b)) {
    throw std::invalid_argument("h1_dataset: need a < b and >= 1 subintervals");
  }
  const std::size_t n = static_cast<std::size_t>(subintervals);
  const double h = (b - a) / static_cast<double>(n);
  Dataset d;
  d.inputs = Tensor::uninitialized({n, 1});
  d.targets = Tensor::uninitialized({n, 1});
  d.target_derivatives = Tensor::uninitialized({n, 1});
  d.has_derivatives = true;
  d.quad_weight = h;
  for (std::size_t i = 0; i < n; ++i) {
    double x = a + h * (static_cast<double>(i) + 0.5);
    d.inputs.at(i, 0) = x;
    d.targets.at(i, 0) = f(x);
    d.target_derivatives.at(i, 0) = f_prime(x);
  }
  return d;
}

namespace {

// Builds the loss node over an already-taped forward pass.
int loss_from_forward(Tape& tape, const TapedForward& tf, int x_node,
                      const Dataset& data, LossKind kind) {
  int diff = tape.sub(tf.output, tape.leaf(data.targets));
  int sq = tape.hadamard(diff, diff);
  if (kind == LossKind::kMse) {
    return tape.mean(sq);
  }
  if (!data.has_derivatives) {
    throw std::invalid_argument("h1 loss: dataset carries no derivative targets");
  }
  int dnet = input_derivative(tape, tf.output, x_node);
  int ddiff = tape.sub(dnet, tape.leaf(data.target_derivatives));
  int dsq = tape.hadamard(ddiff, ddiff);
  return tape.scale(tape.add(tape.sum(sq), tape.sum(dsq)), data.quad_weight);
}

double eval_loss(const Model& model, const Dataset& data, LossKind kind) {
  Tape tape;
  int x = tape.leaf(data.inputs);
  TapedForward tf = forward_taped(model, tape, x);
  return tape.value(loss_from_forward(tape, tf, x, data, kind)).at(0);
}

}  // namespace

double mse_loss(const Model& model, const Dataset& data) {
  return eval_loss(model, data, LossKind::kMse);
}

double h1_loss(const Model& model, const Dataset& data) {
  return eval_loss(model, data, LossKind::kH1);
}

double h1_error_graded(
    const std::function<std::pair<double, double>(double)>& value_and_deriv,
    const std::function<double(double)>& f,
    const std::function<double(double)>& f_prime, double a, double b,
    int points) {
  if (points < 1 || !(a < b)) {
    throw std::invalid_argument("h1_error_graded: need a < b and >= 1 points");
  }
  const double len = b - a;
  const double dt = 1.0 / static_cast<double>(points);
  long double acc = 0.0L;
  for (int i = 0; i < points; ++i) {
    double t = (static_cast<double>(i) + 0.5) * dt;
    double x = a + len * t * t * t;
    auto [v, dv] = value_and_deriv(x);
    long double ev = v - f(x);
    long double ed = dv - f_prime(x);
    acc += (ev * ev + ed * ed) * 3.0L * t * t;
  }
  return std::sqrt(static_cast<double>(acc * len * dt));
}

void Optimizer::apply(const std::vector<Tensor*>& params,
                      const std::vector<Tensor>& grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("optimizer: parameter/gradient count mismatch");
  }
  const bool adam = cfg_.method == "adam";
  if (!adam && cfg_.method != "sgd") {
    throw std::invalid_argument("optimizer: unknown method " + cfg_.method);
  }
  if (first_.empty()) {
    for (const Tensor* p : params) {
      first_.push_back(Tensor::zeros(p->shape()));
      if (adam) second_.push_back(Tensor::zeros(p->shape()));
    }
  }
  ++step_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!p.same_shape(g) || !p.same_shape(first_[i])) {
      throw std::invalid_argument("optimizer: shape drift between steps");
    }
    double* pd = p.data();
    const double* gd = g.data();
    double* m = first_[i].data();
    const std::size_t n = p.size();
    if (adam) {
      double* v = second_[i].data();
      const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
      const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
      for (std::size_t k = 0; k < n; ++k) {
        m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gd[k];
        v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gd[k] * gd[k];
        pd[k] -= cfg_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
      }
    } else {
      for (std::size_t k = 0; k < n; ++k) {
        m[k] = cfg_.momentum * m[k] + gd[k];
        pd[k] -= cfg_.lr * m[k];
      }
    }
  }
}

RunResult train(Model& model, const Dataset& data, const TrainConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  RunResult result;
  Optimizer opt(cfg.opt);
  std::vector<Tensor*> params = parameters(model);
  Tape tape;
  std::vector<Tensor> grads;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    tape.reset();
    int x = tape.leaf(data.inputs);
    TapedForward tf = forward_taped(model, tape, x);
    int loss = loss_from_forward(tape, tf, x, data, cfg.loss);
    double loss_value = tape.value(loss).at(0);
    if (cfg.trace_every > 0 && epoch % cfg.trace_every == 0) {
      result.trace.emplace_back(epoch, loss_value);
    }
    if (!std::isfinite(loss_value)) {
      result.nan_abort = true;
      result.nan_epoch = epoch;
      break;
    }
    std::vector<int> adj = tape.backward(loss, tf.params);
    grads.clear();
    for (std::size_t i = 0; i < tf.params.size(); ++i) {
      int node = adj[static_cast<std::size_t>(tf.params[i])];
      grads.push_back(node >= 0 ? tape.value(node)
                                : Tensor::zeros(params[i]->shape()));
    }
    opt.apply(params, grads);
  }
  result.final_loss = result.nan_abort
                          ? std::numeric_limits<double>::quiet_NaN()
                          : eval_loss(model, data, cfg.loss);
  if (!result.nan_abort && !std::isfinite(result.final_loss)) {
    result.nan_abort = true;
    result.nan_epoch = cfg.epochs;
    result.final_loss = std::numeric_limits<double>::quiet_NaN();
  }
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace psenet
