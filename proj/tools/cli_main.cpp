// Command-line front end: exact constructions with verification reports,
// declarative training sweeps, model evaluation, self tests, and the
// exponential-decay benchmark.
//
// Exit codes: 0 success, 1 verification/invariant failure, 2 usage error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "psenet/bspline.hpp"
#include "psenet/experiments.hpp"
#include "psenet/hp.hpp"
#include "psenet/lowering.hpp"
#include "psenet/model_io.hpp"
#include "psenet/piecewise.hpp"
#include "psenet/polynomial.hpp"
#include "psenet/rng.hpp"
#include "psenet/selfcheck.hpp"
#include "psenet/training.hpp"

namespace {

using nlohmann::ordered_json;
using namespace psenet;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;

double parse_fraction(const std::string& s, const std::string& flag) {
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return std::stod(s);
    const double den = std::stod(s.substr(slash + 1));
    if (den == 0.0) throw std::invalid_argument("zero denominator");
    return std::stod(s.substr(0, slash)) / den;
  } catch (const std::exception&) {
    throw CLI::ValidationError(flag, "cannot parse '" + s + "' as a number");
  }
}

std::vector<double> parse_double_list(const std::string& s,
                                      const std::string& flag) {
  std::vector<double> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(parse_fraction(cur, flag));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

int model_input_dim(const Model& model) {
  if (const auto* one = std::get_if<OneHiddenPse>(&model))
    return one->input_dim;
  const auto& net = std::get<Network>(model);
  if (net.layers.empty()) return static_cast<int>(net.readout_W.cols());
  return std::visit(
      [](const auto& layer) -> int {
        using T = std::decay_t<decltype(layer)>;
        if constexpr (std::is_same_v<T, PseGeneralizedLayer>)
          return static_cast<int>(layer.W.at(0).cols());
        else
          return static_cast<int>(layer.W.cols());
      },
      net.layers.front());
}

int count_neurons(const Model& model) {
  if (const auto* one = std::get_if<OneHiddenPse>(&model)) {
    int n = 0;
    for (const OneHiddenBranch& b : one->branches)
      n += static_cast<int>(b.W.rows());
    return n;
  }
  int n = 0;
  for (const Layer& l : std::get<Network>(model).layers)
    n += std::visit(
        [](const auto& layer) -> int {
          using T = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<T, PseGeneralizedLayer>)
            return static_cast<int>(layer.W.at(0).rows());
          else
            return static_cast<int>(layer.W.rows());
        },
        l);
  return n;
}

struct ConstructOutcome {
  Model model;
  ordered_json report;
  bool pass = false;
};

ConstructOutcome construct_lower(int layers, int n, int d, unsigned seed,
                                 double tol) {
  Rng rng(seed * 1315423911ULL + 17ULL);
  Network gen;
  std::size_t d_in = static_cast<std::size_t>(d);
  for (int l = 0; l < layers; ++l) {
    PseGeneralizedLayer layer =
        make_pse_generalized(n, static_cast<std::size_t>(d), d_in);
    auto fill = [&rng](std::vector<Tensor>& ts) {
      for (Tensor& t : ts)
        for (std::size_t i = 0; i < t.size(); ++i)
          t.data()[i] = rng.uniform(-1.0, 1.0);
    };
    fill(layer.W);
    fill(layer.b);
    fill(layer.alpha);
    gen.layers.emplace_back(std::move(layer));
    d_in = static_cast<std::size_t>(d);
  }
  gen.readout_W = Tensor::uninitialized({1, static_cast<std::size_t>(d)});
  gen.readout_b = Tensor::uninitialized({1});
  for (std::size_t i = 0; i < gen.readout_W.size(); ++i)
    gen.readout_W.data()[i] = rng.uniform(-1.0, 1.0);
  gen.readout_b.data()[0] = rng.uniform(-1.0, 1.0);

  ConstructOutcome out{Model(lower_generalized(gen)), {}, false};
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const Tensor xin = Tensor::from_matrix(1, x.size(), x);
    const double a = forward(gen, xin).at(0, 0);
    const double b = forward(out.model, xin).at(0, 0);
    worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
  }
  out.pass = worst <= tol;
  out.report = {{"format", "psenet-construct-report"},
                {"kind", "lower"},
                {"params",
                 {{"layers", layers}, {"n", n}, {"d", d}, {"seed", seed}}},
                {"max_deviation", worst},
                {"tolerance", tol},
                {"neurons", count_neurons(out.model)},
                {"pass", out.pass},
                {"detail", "shared-weight lowering vs per-power source net, "
                           "100 random inputs, relative deviation"}};
  return out;
}

ConstructOutcome construct_bspline(int degree, int k, double tol) {
  BsplineSeries s;
  s.degree = degree;
  s.k = k;
  s.coeffs.assign(static_cast<std::size_t>(k + degree + 1), 1.0);
  ConstructOutcome out{Model(bspline_series_to_pse(s)), {}, false};
  const auto& net = std::get<OneHiddenPse>(out.model);
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    worst = std::max(worst,
                     std::abs(eval_scalar(net, x) - bspline_series_eval(s, x)));
  }
  out.pass = worst <= tol;
  out.report = {{"format", "psenet-construct-report"},
                {"kind", "bspline"},
                {"params", {{"n", degree}, {"k", k}}},
                {"max_deviation", worst},
                {"tolerance", tol},
                {"neurons", count_neurons(out.model)},
                {"pass", out.pass},
                {"detail", "unit-coefficient series vs direct series "
                           "evaluation, 1001 points on [0,1]"}};
  return out;
}

// Dense-coefficient order used by --coeffs: total degree ascending, and
// exponent tuples in lexicographic order inside each total degree.
std::vector<std::vector<int>> dense_exponents(int dim, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(static_cast<std::size_t>(dim), 0);
  for (int total = 0; total <= degree; ++total) {
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == dim - 1) {
        e[static_cast<std::size_t>(pos)] = left;
        out.push_back(e);
        return;
      }
      for (int v = 0; v <= left; ++v) {
        e[static_cast<std::size_t>(pos)] = v;
        rec(pos + 1, left - v);
      }
    };
    rec(0, total);
  }
  return out;
}

ConstructOutcome construct_polynomial(int dim, int degree,
                                      const std::string& coeffs_csv,
                                      unsigned seed, double tol) {
  const auto exps = dense_exponents(dim, degree);
  std::vector<double> coeffs;
  if (!coeffs_csv.empty()) {
    coeffs = parse_double_list(coeffs_csv, "--coeffs");
    if (coeffs.size() != exps.size())
      throw CLI::ValidationError(
          "--coeffs", "expected " + std::to_string(exps.size()) +
                          " values (dense graded order), got " +
                          std::to_string(coeffs.size()));
  } else {
    Rng rng(seed * 2654435761ULL + 3ULL);
    for (std::size_t i = 0; i < exps.size(); ++i)
      coeffs.push_back(rng.uniform(-1.0, 1.0));
  }
  Polynomial p;
  p.dim = dim;
  for (std::size_t i = 0; i < exps.size(); ++i)
    if (coeffs[i] != 0.0) p.terms.push_back({exps[i], coeffs[i]});
  if (p.terms.empty()) p.terms.push_back({std::vector<int>(dim, 0), 0.0});

  ConstructOutcome out{Model(polynomial_to_pse(p)), {}, false};
  Rng probe(9001u);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (double& v : x) v = probe.uniform(-1.0, 1.0);
    const double want = p.eval(x);
    const double got =
        forward(out.model, Tensor::from_matrix(1, x.size(), x)).at(0, 0);
    worst =
        std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
  }
  const int neurons = count_neurons(out.model);
  const auto budget = 2 * binomial(degree + dim, degree);
  out.pass = worst <= tol &&
             static_cast<std::uint64_t>(neurons) <= budget;
  out.report = {{"format", "psenet-construct-report"},
                {"kind", "polynomial"},
                {"params",
                 {{"d", dim},
                  {"degree", degree},
                  {"coeffs", coeffs},
                  {"seed", seed}}},
                {"max_deviation", worst},
                {"tolerance", tol},
                {"neurons", neurons},
                {"neuron_budget", budget},
                {"pass", out.pass},
                {"detail", "relative deviation at 1000 points in [-1,1]^d"}};
  return out;
}

ConstructOutcome construct_piecewise(const std::string& mesh_csv,
                                     const std::string& degrees_csv,
                                     unsigned seed, double tol) {
  const std::vector<double> mesh = parse_double_list(mesh_csv, "--mesh");
  std::vector<int> degrees;
  for (double v : parse_double_list(degrees_csv, "--degrees"))
    degrees.push_back(static_cast<int>(v));
  if (mesh.size() < 2 || degrees.size() + 1 != mesh.size())
    throw CLI::ValidationError(
        "--degrees", "need one degree per element (mesh points - 1)");
  Rng rng(seed * 40503ULL + 5ULL);
  PiecewisePoly p;
  p.mesh = mesh;
  double left = rng.uniform(-1.0, 1.0);
  for (std::size_t e = 0; e < degrees.size(); ++e) {
    if (degrees[e] < 0)
      throw CLI::ValidationError("--degrees", "degrees must be >= 0");
    std::vector<double> c(static_cast<std::size_t>(degrees[e]) + 1);
    for (std::size_t q = 1; q < c.size(); ++q) c[q] = rng.uniform(-1.0, 1.0);
    c[0] = left;
    const double h = p.mesh[e + 1] - p.mesh[e];
    double v = 0.0;
    for (std::size_t q = c.size(); q-- > 0;) v = v * h + c[q];
    left = v;
    p.coeffs.push_back(std::move(c));
  }
  p.validate();

  ConstructOutcome out{Model(piecewise_to_pse(p)), {}, false};
  const auto& net = std::get<OneHiddenPse>(out.model);
  double worst = 0.0;
  const double a = mesh.front(), b = mesh.back();
  for (int i = 0; i <= 2000; ++i) {
    const double x = a + (b - a) * i / 2000.0;
    worst = std::max(worst, std::abs(eval_scalar(net, x) - p.eval(x)));
  }
  out.pass = worst <= tol;
  out.report = {{"format", "psenet-construct-report"},
                {"kind", "piecewise"},
                {"params",
                 {{"mesh", mesh}, {"degrees", degrees}, {"seed", seed}}},
                {"max_deviation", worst},
                {"tolerance", tol},
                {"neurons", count_neurons(out.model)},
                {"pass", out.pass},
                {"detail", "random continuous piecewise polynomial, absolute "
                           "deviation at 2001 points"}};
  return out;
}

ConstructOutcome construct_singular(const std::string& alpha_str, int n,
                                    double mu, double delta, double tol) {
  const double alpha = parse_fraction(alpha_str, "--alpha");
  if (alpha <= 0.0 || alpha >= 1.0)
    throw CLI::ValidationError("--alpha", "expected alpha in (0, 1)");
  const auto f = [alpha](double x) { return std::pow(x, alpha); };
  ConstructOutcome out{Model(singular_to_pse(f, n, mu, delta)), {}, false};
  const auto& net = std::get<OneHiddenPse>(out.model);
  const HpMesh mesh = hp_geometric_mesh(n, mu, delta);
  double worst = 0.0;
  for (double x : mesh.mesh)
    worst = std::max(worst, std::abs(eval_scalar(net, x) - f(x)));
  double h1 = std::numeric_limits<double>::quiet_NaN();
  if (alpha > 0.5) {
    h1 = h1_error_graded(
        [&net](double x) { return eval_scalar_with_derivative(net, x); }, f,
        [alpha](double x) { return alpha * std::pow(x, alpha - 1.0); }, 0.0,
        1.0, 200000);
  }
  out.pass = worst <= tol && (alpha <= 0.5 || std::isfinite(h1));
  out.report = {{"format", "psenet-construct-report"},
                {"kind", "singular"},
                {"params",
                 {{"alpha", alpha},
                  {"n", n},
                  {"mu", mu},
                  {"delta", delta}}},
                {"max_deviation", worst},
                {"tolerance", tol},
                {"neurons", count_neurons(out.model)},
                {"pass", out.pass},
                {"detail", "deviation at geometric-mesh nodes; fine-grid H1 "
                           "error attached when alpha > 1/2"}};
  if (std::isfinite(h1))
    out.report["h1_error"] = h1;
  else
    out.report["h1_error"] = nullptr;
  return out;
}

struct EvalTarget {
  bool present = false;
  std::function<double(double)> f;        // 1d value
  std::function<double(double)> f_prime;  // 1d derivative
  std::function<double(double, double)> f2;
  bool two_dim = false;
};

EvalTarget parse_eval_target(const std::string& s) {
  EvalTarget t;
  if (s.empty()) return t;
  const auto colon = s.find(':');
  const std::string head = s.substr(0, colon);
  const std::string arg =
      colon == std::string::npos ? "" : s.substr(colon + 1);
  if (head == "sin") {
    const double k = parse_fraction(arg, "--target");
    t.f = [k](double x) { return std::sin(k * std::numbers::pi * x); };
    t.f_prime = [k](double x) {
      return k * std::numbers::pi * std::cos(k * std::numbers::pi * x);
    };
  } else if (head == "sin2d") {
    const double k = parse_fraction(arg, "--target");
    t.f2 = [k](double x, double y) {
      return std::sin(k * std::numbers::pi * (x + y));
    };
    t.two_dim = true;
  } else if (head == "xalpha") {
    const double a = parse_fraction(arg, "--target");
    t.f = [a](double x) { return std::pow(x, a); };
    t.f_prime = [a](double x) { return a * std::pow(x, a - 1.0); };
  } else {
    throw CLI::ValidationError(
        "--target", "expected sin:K, sin2d:K, or xalpha:A, got '" + s + "'");
  }
  t.present = true;
  return t;
}

void ensure_out_dir(const std::string& out_dir) {
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-series layer library: exact constructions, training "
               "sweeps, and self tests"};
  app.require_subcommand(1);

  // ---- construct ----
  CLI::App* construct = app.add_subcommand(
      "construct", "Build an exact representation and verify it");
  construct->require_subcommand(1);
  std::string c_out = ".";
  unsigned c_seed = 1;
  double c_tol = 1e-8;
  for (const char* kind :
       {"lower", "bspline", "polynomial", "piecewise", "singular"}) {
    CLI::App* sub = construct->add_subcommand(kind);
    sub->add_option("--out", c_out, "Output directory");
    sub->add_option("--seed", c_seed, "Random seed for generated inputs");
    sub->add_option("--tol", c_tol, "Verification tolerance");
  }
  CLI::App* c_lower = construct->get_subcommand("lower");
  int lower_layers = 3, lower_n = 4, lower_d = 5;
  c_lower->add_option("--layers", lower_layers, "Hidden layers")
      ->check(CLI::Range(1, 8));
  c_lower->add_option("--n", lower_n, "Series degree")->check(CLI::Range(0, 8));
  c_lower->add_option("--d", lower_d, "Layer width")->check(CLI::Range(1, 16));

  CLI::App* c_bspline = construct->get_subcommand("bspline");
  int bs_n = 1, bs_k = 1;
  c_bspline->add_option("--n", bs_n, "Spline degree")->check(CLI::Range(1, 8));
  c_bspline->add_option("--k", bs_k, "Interior shift count")
      ->check(CLI::Range(0, 64));

  CLI::App* c_poly = construct->get_subcommand("polynomial");
  int poly_d = 2, poly_degree = 3;
  std::string poly_coeffs;
  c_poly->add_option("--d", poly_d, "Input dimension")->check(CLI::Range(1, 4));
  c_poly->add_option("--degree", poly_degree, "Total degree")
      ->check(CLI::Range(0, 6));
  c_poly->add_option("--coeffs", poly_coeffs,
                     "Dense coefficients, graded order (default: random)");

  CLI::App* c_piece = construct->get_subcommand("piecewise");
  std::string piece_mesh = "0,0.3,0.55,0.8,1";
  std::string piece_degrees = "1,2,2,3";
  c_piece->add_option("--mesh", piece_mesh, "Breakpoints a=x0<...<xM=b");
  c_piece->add_option("--degrees", piece_degrees,
                      "Per-element degrees (non-decreasing)");

  CLI::App* c_sing = construct->get_subcommand("singular");
  std::string sing_alpha = "2/3";
  int sing_n = 6;
  double sing_mu = 1.0, sing_delta = 1.0;
  c_sing->add_option("--alpha", sing_alpha, "Exponent of x^alpha");
  c_sing->add_option("--n", sing_n, "Geometric-mesh elements")
      ->check(CLI::Range(1, 24));
  c_sing->add_option("--mu", sing_mu, "Degree growth factor");
  c_sing->add_option("--delta", sing_delta, "Degree growth exponent");

  // ---- fit ----
  CLI::App* fit = app.add_subcommand(
      "fit", "Run a declarative experiment spec and write tables");
  std::string fit_spec;
  std::string fit_out = "fit-out";
  int fit_workers = 1;
  long long fit_seed = -1;
  fit->add_option("spec", fit_spec, "Experiment spec JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--out", fit_out, "Output directory");
  fit->add_option("--workers", fit_workers, "Concurrent training runs")
      ->check(CLI::Range(1, 64));
  fit->add_option("--seed", fit_seed,
                  "Override the spec's seed list with one seed");

  // ---- eval ----
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a stored model");
  std::string eval_model, eval_target_str, eval_out;
  int eval_grid = 256;
  eval->add_option("--model", eval_model, "Model JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--grid", eval_grid, "Grid resolution on [0,1]^d")
      ->check(CLI::Range(2, 100000));
  eval->add_option("--target", eval_target_str,
                   "Reference target: sin:K | sin2d:K | xalpha:A");
  eval->add_option("--out", eval_out, "Output directory (default: stdout)");

  // ---- check ----
  CLI::App* check = app.add_subcommand("check", "Run the built-in self test");
  std::string check_golden = "data/golden/bspline_n1_k1.json";
  std::string check_out;
  check->add_option("--golden", check_golden,
                    "Golden model file (empty to skip)");
  check->add_option("--out", check_out, "Directory for check.json");

  // ---- bench ----
  CLI::App* bench = app.add_subcommand(
      "bench", "Exponential-decay benchmark of the singular constructor");
  std::string bench_alpha = "2/3";
  int bench_nmin = 2, bench_nmax = 10;
  double bench_mu = 1.0, bench_delta = 1.0;
  std::string bench_out;
  bench->add_option("--alpha", bench_alpha, "Exponent in (1/2, 1)");
  bench->add_option("--n-min", bench_nmin, "First mesh size")
      ->check(CLI::Range(1, 24));
  bench->add_option("--n-max", bench_nmax, "Last mesh size")
      ->check(CLI::Range(1, 24));
  bench->add_option("--mu", bench_mu, "Degree growth factor");
  bench->add_option("--delta", bench_delta, "Degree growth exponent");
  bench->add_option("--out", bench_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (construct->parsed()) {
      ConstructOutcome out;
      std::string kind;
      if (c_lower->parsed()) {
        kind = "lower";
        out = construct_lower(lower_layers, lower_n, lower_d, c_seed, c_tol);
      } else if (c_bspline->parsed()) {
        kind = "bspline";
        out = construct_bspline(bs_n, bs_k, c_tol);
      } else if (c_poly->parsed()) {
        kind = "polynomial";
        out = construct_polynomial(poly_d, poly_degree, poly_coeffs, c_seed,
                                   c_tol);
      } else if (c_piece->parsed()) {
        kind = "piecewise";
        out = construct_piecewise(piece_mesh, piece_degrees, c_seed, c_tol);
      } else {
        kind = "singular";
        out = construct_singular(sing_alpha, sing_n, sing_mu, sing_delta,
                                 c_tol);
      }
      ensure_out_dir(c_out);
      const std::string model_path = c_out + "/" + kind + "_model.json";
      const std::string report_path = c_out + "/" + kind + "_report.json";
      save_model(out.model, model_path);
      write_text_file(report_path, out.report.dump(2) + "\n");
      std::printf("%s: %s  max_deviation=%s  neurons=%d\n", kind.c_str(),
                  out.pass ? "PASS" : "FAIL",
                  lossless_double(out.report["max_deviation"].get<double>())
                      .c_str(),
                  out.report["neurons"].get<int>());
      std::printf("wrote %s and %s\n", model_path.c_str(),
                  report_path.c_str());
      return out.pass ? kExitOk : kExitVerifyFail;
    }

    if (fit->parsed()) {
      ExperimentSpec spec = load_experiment_spec(fit_spec);
      if (fit_seed >= 0) {
        spec.seeds = {static_cast<unsigned>(fit_seed)};
        spec.check_seed = static_cast<unsigned>(fit_seed);
      }
      const int errors = run_experiment_to_dir(spec, fit_out, fit_workers);
      std::printf("family %s -> %s (%d error%s)\n", spec.family.c_str(),
                  fit_out.c_str(), errors, errors == 1 ? "" : "s");
      return errors == 0 ? kExitOk : kExitVerifyFail;
    }

    if (eval->parsed()) {
      const Model model = load_model(eval_model);
      const int dim = model_input_dim(model);
      const EvalTarget target = parse_eval_target(eval_target_str);
      if (target.present && target.two_dim != (dim == 2))
        throw CLI::ValidationError("--target",
                                   "target dimensionality does not match "
                                   "the model input dimension");
      ordered_json j;
      j["format"] = "psenet-eval";
      j["model"] = eval_model;
      j["input_dim"] = dim;
      j["grid"] = eval_grid;
      if (dim == 1) {
        std::vector<double> xs, values;
        for (int i = 0; i <= eval_grid; ++i)
          xs.push_back(static_cast<double>(i) / eval_grid);
        for (double x : xs)
          values.push_back(
              forward(model, Tensor::from_matrix(1, 1, {x})).at(0, 0));
        double lo = values[0], hi = values[0];
        for (double v : values) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        j["min_value"] = lo;
        j["max_value"] = hi;
        if (target.present) {
          double mse = 0.0;
          for (std::size_t i = 0; i < xs.size(); ++i) {
            const double d = values[i] - target.f(xs[i]);
            mse += d * d;
          }
          j["mse"] = mse / static_cast<double>(xs.size());
          if (const auto* one = std::get_if<OneHiddenPse>(&model)) {
            j["h1_error"] = h1_error_graded(
                [one](double x) {
                  return eval_scalar_with_derivative(*one, x);
                },
                target.f, target.f_prime, 0.0, 1.0, 200000);
          }
        }
        j["values"] = values;
      } else if (dim == 2) {
        double mse = 0.0;
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (int i = 0; i <= eval_grid; ++i)
          for (int k = 0; k <= eval_grid; ++k) {
            const double x = static_cast<double>(i) / eval_grid;
            const double y = static_cast<double>(k) / eval_grid;
            const double v =
                forward(model, Tensor::from_matrix(1, 2, {x, y})).at(0, 0);
            if (first || v < lo) lo = v;
            if (first || v > hi) hi = v;
            first = false;
            if (target.present) {
              const double d = v - target.f2(x, y);
              mse += d * d;
            }
          }
        j["min_value"] = lo;
        j["max_value"] = hi;
        if (target.present)
          j["mse"] = mse / ((eval_grid + 1.0) * (eval_grid + 1.0));
      } else {
        throw CLI::ValidationError("--model",
                                   "eval grids support 1- or 2-dimensional "
                                   "inputs");
      }
      if (eval_out.empty()) {
        std::printf("%s\n", j.dump(2).c_str());
      } else {
        ensure_out_dir(eval_out);
        write_text_file(eval_out + "/eval.json", j.dump(2) + "\n");
        std::printf("wrote %s/eval.json\n", eval_out.c_str());
      }
      return kExitOk;
    }

    if (check->parsed()) {
      const auto groups = run_selfcheck(check_golden);
      bool all = true;
      ordered_json arr = ordered_json::array();
      for (const auto& g : groups) {
        std::printf("%s %s: %s\n", g.pass ? "PASS" : "FAIL", g.name.c_str(),
                    g.detail.c_str());
        all = all && g.pass;
        arr.push_back(
            {{"name", g.name}, {"pass", g.pass}, {"detail", g.detail}});
      }
      if (!check_out.empty()) {
        ensure_out_dir(check_out);
        ordered_json j;
        j["format"] = "psenet-check";
        j["groups"] = std::move(arr);
        j["pass"] = all;
        write_text_file(check_out + "/check.json", j.dump(2) + "\n");
      }
      std::printf("%s (%zu group%s)\n", all ? "ALL PASS" : "FAILURES PRESENT",
                  groups.size(), groups.size() == 1 ? "" : "s");
      return all ? kExitOk : kExitVerifyFail;
    }

    if (bench->parsed()) {
      if (bench_nmax < bench_nmin)
        throw CLI::ValidationError("--n-max", "must be >= --n-min");
      const double alpha = parse_fraction(bench_alpha, "--alpha");
      std::vector<int> n_range;
      for (int n = bench_nmin; n <= bench_nmax; ++n) n_range.push_back(n);
      const HpSweepReport report = run_hp_sweep(
          alpha, n_range, bench_mu, bench_delta, "x^(" + bench_alpha + ")");
      std::printf("n   h1_error      |m|\n");
      bool finite = true;
      for (const HpSweepRow& r : report.rows) {
        std::printf("%-3d %-13.6e %d\n", r.n, r.h1_error, r.m_total);
        finite = finite && std::isfinite(r.h1_error);
      }
      std::printf("log-error slope vs n: %.6f (r2 %.4f)\n",
                  report.fit_vs_n.slope, report.fit_vs_n.r2);
      std::printf("log-error slope vs |m|^{1/(delta+1)}: %.6f (r2 %.4f)\n",
                  report.fit_vs_m.slope, report.fit_vs_m.r2);
      if (!bench_out.empty()) {
        ensure_out_dir(bench_out);
        write_text_file(bench_out + "/hp_sweep.json",
                        hp_report_to_json(report).dump(2) + "\n");
        write_text_file(bench_out + "/hp_sweep.csv",
                        hp_report_to_csv(report));
        std::printf("wrote %s/hp_sweep.{json,csv}\n", bench_out.c_str());
      }
      return finite ? kExitOk : kExitVerifyFail;
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitVerifyFail;
  }
  return kExitUsage;
}
