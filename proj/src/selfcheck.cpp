#include "psenet/selfcheck.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "psenet/bspline.hpp"
#include "psenet/experiments.hpp"
#include "psenet/lowering.hpp"
#include "psenet/model_io.hpp"
#include "psenet/piecewise.hpp"
#include "psenet/polynomial.hpp"
#include "psenet/rng.hpp"
#include "psenet/tape.hpp"
#include "psenet/training.hpp"

namespace psenet {

namespace {

std::string fmt(double x) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::scientific << x;
  return ss.str();
}

// Mean squared error evaluated without the tape: the finite-difference
// oracle for the gradient group.
double plain_mse(const Model& model, const Tensor& inputs,
                 const Tensor& targets) {
  const Tensor out = forward(model, inputs);
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out.data()[i] - targets.data()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(out.size());
}

CheckGroup check_autodiff() {
  CheckGroup g{"autodiff", true, ""};
  Rng rng(20240u);
  const std::vector<std::string> archs = {"fc", "resnet", "pse-3", "relu-3"};
  double worst = 0.0;
  int checked = 0;
  for (std::size_t a = 0; a < archs.size(); ++a) {
    Model model = build_architecture(archs[a], 1, 4, archs[a] == "relu-3" ? 1 : 2);
    init(model, "he-uniform", 101u + a);
    const int n_pts = 9;
    std::vector<double> xs(n_pts), ys(n_pts);
    for (int i = 0; i < n_pts; ++i) {
      xs[i] = (i + 0.5) / n_pts;
      ys[i] = std::sin(3.0 * xs[i]);
    }
    const Tensor inputs = Tensor::from_matrix(n_pts, 1, xs);
    const Tensor targets = Tensor::from_matrix(n_pts, 1, ys);

    Tape tape;
    const int x_node = tape.leaf(inputs);
    TapedForward tf = forward_taped(model, tape, x_node);
    const int diff = tape.sub(tf.output, tape.leaf(targets));
    const int loss = tape.mean(tape.hadamard(diff, diff));
    const std::vector<int> adj = tape.backward(loss, tf.params);

    std::vector<Tensor*> params = parameters(model);
    for (std::size_t p = 0; p < params.size(); ++p) {
      const int node = adj[static_cast<std::size_t>(tf.params[p])];
      Tensor* t = params[p];
      for (int probe = 0; probe < 2; ++probe) {
        const std::size_t idx = rng.raw() % t->size();
        const double analytic =
            node >= 0 ? tape.value(node).data()[idx] : 0.0;
        const double h = 1e-5;
        const double keep = t->data()[idx];
        t->data()[idx] = keep + h;
        const double up = plain_mse(model, inputs, targets);
        t->data()[idx] = keep - h;
        const double dn = plain_mse(model, inputs, targets);
        t->data()[idx] = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double err =
            std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
        worst = std::max(worst, err);
        checked++;
      }
    }
  }
  // Input-derivative path used by the Sobolev loss.
  {
    Model model = build_architecture("relu-2", 1, 5, 1);
    init(model, "he-uniform", 404u);
    const auto& one = std::get<OneHiddenPse>(model);
    const double x0 = 0.377;
    const auto [v, d] = eval_scalar_with_derivative(one, x0);
    const double h = 1e-6;
    const double fd =
        (eval_scalar(one, x0 + h) - eval_scalar(one, x0 - h)) / (2.0 * h);
    const double err = std::abs(d - fd) / std::max(1.0, std::abs(fd));
    worst = std::max(worst, err);
    checked++;
    (void)v;
  }
  g.pass = worst <= 1e-4;
  g.detail = std::to_string(checked) +
             " finite-difference probes, worst rel err " + fmt(worst);
  return g;
}

double bspline_recursive(int n, double x) {
  if (n == 0) return (x >= 0.0 && x < 1.0) ? 1.0 : 0.0;
  return (x * bspline_recursive(n - 1, x) +
          (n + 1 - x) * bspline_recursive(n - 1, x - 1.0)) /
         n;
}

CheckGroup check_bspline() {
  CheckGroup g{"bspline", true, ""};
  double worst_eval = 0.0, worst_unity = 0.0;
  for (int n = 1; n <= 5; ++n) {
    for (int i = 0; i <= 200; ++i) {
      const double x = (n + 1) * i / 200.0;
      worst_eval =
          std::max(worst_eval,
                   std::abs(bspline_eval(n, x) - bspline_recursive(n, x)));
    }
    for (int i = 0; i < 100; ++i) {
      const double x = (i + 0.5) / 100.0;
      double sum = 0.0;
      for (int j = -n; j <= 0; ++j) sum += bspline_eval(n, x - j);
      worst_unity = std::max(worst_unity, std::abs(sum - 1.0));
    }
  }
  g.pass = worst_eval <= 1e-10 && worst_unity <= 1e-9;
  g.detail = "recursion dev " + fmt(worst_eval) + ", partition-of-unity dev " +
             fmt(worst_unity);
  return g;
}

CheckGroup check_equivalence() {
  CheckGroup g{"equivalence", true, ""};
  Rng rng(555u);
  // A degree-1 layer with unit series coefficients must equal the residual
  // block bit for bit.
  ResNetBlock res = make_resnet(4, 3);
  for (std::size_t i = 0; i < res.W.size(); ++i)
    res.W.data()[i] = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < res.b.size(); ++i)
    res.b.data()[i] = rng.uniform(-1.0, 1.0);
  PseSharedLayer pse = make_pse_shared(1, 4, 3);
  pse.W = res.W;
  pse.b = res.b;
  pse.alpha[0] = Tensor::full({4}, 1.0);
  pse.alpha[1] = Tensor::full({4}, 1.0);
  Network net_res, net_pse;
  net_res.layers.emplace_back(res);
  net_pse.layers.emplace_back(pse);
  net_res.readout_W = net_pse.readout_W = Tensor::full({1, 4}, 0.5);
  net_res.readout_b = net_pse.readout_b = Tensor::full({1}, 0.0);
  int exact = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                             rng.uniform(-2.0, 2.0)};
    const Tensor xin = Tensor::from_matrix(1, 3, x);
    if (forward(net_res, xin).at(0, 0) == forward(net_pse, xin).at(0, 0))
      exact++;
  }

  // Per-power weights lowered to shared weights agree to relative 1e-8.
  Network gen;
  PseGeneralizedLayer layer = make_pse_generalized(2, 3, 3);
  auto fill = [&rng](std::vector<Tensor>& ts) {
    for (Tensor& t : ts)
      for (std::size_t i = 0; i < t.size(); ++i)
        t.data()[i] = rng.uniform(-1.0, 1.0);
  };
  fill(layer.W);
  fill(layer.b);
  fill(layer.alpha);
  gen.layers.emplace_back(std::move(layer));
  gen.readout_W = Tensor::full({1, 3}, 0.7);
  gen.readout_b = Tensor::full({1}, 0.1);
  const Network lowered = lower_generalized(gen);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                             rng.uniform(-1.0, 1.0)};
    const Tensor xin = Tensor::from_matrix(1, 3, x);
    const double a = forward(gen, xin).at(0, 0);
    const double b = forward(lowered, xin).at(0, 0);
    worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
  }
  g.pass = exact == 100 && worst <= 1e-8;
  g.detail = "residual identity exact on " + std::to_string(exact) +
             "/100 inputs; lowering rel dev " + fmt(worst);
  return g;
}

CheckGroup check_polynomial() {
  CheckGroup g{"polynomial", true, ""};
  Rng rng(777u);
  double worst = 0.0;
  // x1*x2 with the documented neuron budget.
  Polynomial xy;
  xy.dim = 2;
  xy.terms.push_back({{1, 1}, 1.0});
  const OneHiddenPse net_xy = polynomial_to_pse(xy);
  int neurons = 0;
  for (const OneHiddenBranch& b : net_xy.branches)
    neurons += static_cast<int>(b.W.rows());
  for (int t = 0; t < 200; ++t) {
    const std::vector<double> x = {rng.uniform(-1.0, 1.0),
                                   rng.uniform(-1.0, 1.0)};
    const double got = forward(net_xy, Tensor::from_matrix(1, 2, x)).at(0, 0);
    worst = std::max(worst, std::abs(got - x[0] * x[1]));
  }
  const bool budget_ok = neurons <= 6;

  // Random dense bivariate cubic, relative deviation.
  Polynomial p;
  p.dim = 2;
  for (int i = 0; i <= 3; ++i)
    for (int j = 0; i + j <= 3; ++j)
      p.terms.push_back({{i, j}, rng.uniform(-1.0, 1.0)});
  const OneHiddenPse net_p = polynomial_to_pse(p);
  for (int t = 0; t < 200; ++t) {
    const std::vector<double> x = {rng.uniform(-1.0, 1.0),
                                   rng.uniform(-1.0, 1.0)};
    const double want = p.eval(x);
    const double got = forward(net_p, Tensor::from_matrix(1, 2, x)).at(0, 0);
    worst = std::max(worst,
                     std::abs(got - want) / std::max(1.0, std::abs(want)));
  }
  g.pass = worst <= 1e-8 && budget_ok;
  g.detail = "max rel dev " + fmt(worst) + "; x1*x2 uses " +
             std::to_string(neurons) + " neurons (budget 6)";
  return g;
}

CheckGroup check_piecewise() {
  CheckGroup g{"piecewise", true, ""};
  double worst = 0.0;
  // The unit hat function.
  PiecewisePoly hat;
  hat.mesh = {0.0, 0.5, 1.0};
  hat.coeffs = {{0.0, 2.0}, {1.0, -2.0}};
  const OneHiddenPse net_hat = piecewise_to_pse(hat);
  for (int i = 0; i <= 500; ++i) {
    const double x = i / 500.0;
    worst = std::max(worst, std::abs(eval_scalar(net_hat, x) - hat.eval(x)));
  }
  // Random continuous piecewise cubic.
  Rng rng(888u);
  PiecewisePoly p;
  p.mesh = {0.0, 0.25, 0.6, 1.0};
  const std::vector<int> degrees = {1, 3, 3};
  double left = rng.uniform(-1.0, 1.0);
  for (std::size_t e = 0; e < degrees.size(); ++e) {
    std::vector<double> c(static_cast<std::size_t>(degrees[e]) + 1);
    for (std::size_t q = 1; q < c.size(); ++q) c[q] = rng.uniform(-1.0, 1.0);
    c[0] = left;
    const double h = p.mesh[e + 1] - p.mesh[e];
    double v = 0.0;
    for (std::size_t q = c.size(); q-- > 0;) v = v * h + c[q];
    left = v;
    p.coeffs.push_back(std::move(c));
  }
  const OneHiddenPse net_p = piecewise_to_pse(p);
  for (int i = 0; i <= 500; ++i) {
    const double x = i / 500.0;
    worst = std::max(worst, std::abs(eval_scalar(net_p, x) - p.eval(x)));
  }
  g.pass = worst <= 1e-9;
  g.detail = "max abs dev " + fmt(worst);
  return g;
}

CheckGroup check_golden(const std::string& golden_path) {
  CheckGroup g{"golden-roundtrip", false, ""};
  std::string stored;
  try {
    stored = read_text_file(golden_path);
  } catch (const std::exception& e) {
    g.detail = e.what();
    return g;
  }
  // The reference net: unit-coefficient degree-1 series with one interior
  // knot. Any perturbation of the stored parameters breaks byte equality
  // with the fresh construction, and is reported through the value check
  // as well.
  BsplineSeries s;
  s.degree = 1;
  s.k = 1;
  s.coeffs = {1.0, 1.0, 1.0};
  const std::string fresh =
      model_to_json(Model(bspline_series_to_pse(s))).dump(2) + "\n";
  const bool bytes_ok = stored == fresh;

  double worst = std::numeric_limits<double>::infinity();
  bool value_ok = false;
  try {
    const Model loaded = model_from_json(nlohmann::json::parse(stored));
    const auto& net = std::get<OneHiddenPse>(loaded);
    worst = 0.0;
    for (int i = 0; i <= 400; ++i) {
      const double x = i / 400.0;
      worst = std::max(worst,
                       std::abs(eval_scalar(net, x) - bspline_series_eval(s, x)));
    }
    value_ok = worst <= 1e-10;
  } catch (const std::exception& e) {
    g.detail = std::string("stored file does not load: ") + e.what();
    return g;
  }
  g.pass = bytes_ok && value_ok;
  g.detail = std::string(bytes_ok ? "bytes match" : "BYTES DIFFER") +
             " vs fresh construction; value dev " + fmt(worst);
  return g;
}

}  // namespace

std::vector<CheckGroup> run_selfcheck(const std::string& golden_path) {
  std::vector<CheckGroup> groups;
  groups.push_back(check_autodiff());
  groups.push_back(check_bspline());
  groups.push_back(check_equivalence());
  groups.push_back(check_polynomial());
  groups.push_back(check_piecewise());
  if (!golden_path.empty()) groups.push_back(check_golden(golden_path));
  return groups;
}

}  // namespace psenet
