#include "psenet/experiments.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "psenet/autodiff.hpp"
#include "psenet/bspline.hpp"
#include "psenet/hp.hpp"
#include "psenet/lowering.hpp"
#include "psenet/model_io.hpp"
#include "psenet/piecewise.hpp"
#include "psenet/polynomial.hpp"
#include "psenet/rng.hpp"
#include "psenet/tape.hpp"

namespace psenet {

namespace {

constexpr int kPosthocPoints = 200000;

[[noreturn]] void spec_error(const std::string& field, const std::string& msg) {
  throw std::invalid_argument("experiment spec, field '" + field + "': " + msg);
}

// Accepts 0.75 or "3/4".
double number_or_fraction(const nlohmann::json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    double num = 0.0, den = 1.0;
    try {
      if (slash == std::string::npos) {
        num = std::stod(s);
      } else {
        num = std::stod(s.substr(0, slash));
        den = std::stod(s.substr(slash + 1));
      }
    } catch (const std::exception&) {
      spec_error(field, "cannot parse '" + s + "' as a number");
    }
    if (den == 0.0) spec_error(field, "zero denominator in '" + s + "'");
    return num / den;
  }
  spec_error(field, "expected a number or a fraction string");
}

std::string integer_like_label(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e9)
    return std::to_string(static_cast<long long>(v));
  return lossless_double(v);
}

bool is_sine_family(const std::string& family) {
  return family == "sine-1d" || family == "sine-2d";
}

TargetSpec make_target(const std::string& family, const nlohmann::json& v) {
  TargetSpec t;
  t.value = number_or_fraction(v, "targets");
  if (family == "sine-1d") {
    t.label = "sin(" + integer_like_label(t.value) + "*pi*x)";
  } else if (family == "sine-2d") {
    t.label = "sin(" + integer_like_label(t.value) + "*pi*(x1+x2))";
  } else if (v.is_string()) {
    t.label = "x^(" + v.get<std::string>() + ")";
  } else {
    t.label = "x^" + lossless_double(t.value);
  }
  return t;
}

std::string slug(const std::string& label) {
  std::string out;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(c))));
    else if (c == '/')
      out += "over";
    else if (c == '.')
      out.push_back('p');
  }
  return out;
}

struct ParsedArch {
  enum Kind { kFc, kResnet, kPse, kRelu } kind = kFc;
  int order = 0;  // PSE degree n or ReLU power k
};

ParsedArch parse_architecture(const std::string& name) {
  ParsedArch a;
  if (name == "fc") {
    a.kind = ParsedArch::kFc;
    return a;
  }
  if (name == "resnet") {
    a.kind = ParsedArch::kResnet;
    return a;
  }
  auto suffix_order = [&](const std::string& prefix) {
    const std::string digits = name.substr(prefix.size());
    if (digits.empty() ||
        digits.find_first_not_of("0123456789") != std::string::npos)
      spec_error("architectures", "unknown architecture '" + name + "'");
    return std::stoi(digits);
  };
  if (name.rfind("pse-", 0) == 0) {
    a.kind = ParsedArch::kPse;
    a.order = suffix_order("pse-");
    if (a.order < 0 || a.order > 9)
      spec_error("architectures", "pse degree out of range in '" + name + "'");
    return a;
  }
  if (name.rfind("relu-", 0) == 0) {
    a.kind = ParsedArch::kRelu;
    a.order = suffix_order("relu-");
    if (a.order < 1 || a.order > 9)
      spec_error("architectures", "relu power out of range in '" + name + "'");
    return a;
  }
  spec_error("architectures", "unknown architecture '" + name + "'");
}

nlohmann::ordered_json opt_meta(const OptimizerConfig& opt) {
  nlohmann::ordered_json j;
  j["method"] = opt.method;
  j["lr"] = opt.lr;
  return j;
}

// Values and input derivatives of a univariate model at many points. The
// one-hidden family has a closed-form scalar path; general networks get
// their derivative from one taped backward pass over the whole batch (each
// output row depends only on its own input row, so the adjoint of
// sum(outputs) recovers every pointwise derivative at once).
void batch_value_and_derivative(const Model& model,
                                const std::vector<double>& xs,
                                std::vector<double>& values,
                                std::vector<double>& derivs) {
  const std::size_t n = xs.size();
  values.resize(n);
  derivs.resize(n);
  if (const auto* one = std::get_if<OneHiddenPse>(&model)) {
    for (std::size_t i = 0; i < n; ++i) {
      auto [v, d] = eval_scalar_with_derivative(*one, xs[i]);
      values[i] = v;
      derivs[i] = d;
    }
    return;
  }
  Tape tape;
  const int x_node = tape.leaf(Tensor::from_matrix(n, 1, xs));
  TapedForward tf = forward_taped(model, tape, x_node);
  const int dx = input_derivative(tape, tf.output, x_node);
  // Take references only after backward() has stopped appending nodes.
  const Tensor& out = tape.value(tf.output);
  const Tensor& grad = tape.value(dx);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = out.at(i, 0);
    derivs[i] = grad.at(i, 0);
  }
}

double posthoc_h1_singular(const Model& model, double alpha) {
  std::vector<double> ts(kPosthocPoints), xs(kPosthocPoints);
  for (int i = 0; i < kPosthocPoints; ++i) {
    ts[i] = (i + 0.5) / kPosthocPoints;
    xs[i] = ts[i] * ts[i] * ts[i];
  }
  std::vector<double> values, derivs;
  batch_value_and_derivative(model, xs, values, derivs);
  long double acc = 0.0L;
  for (int i = 0; i < kPosthocPoints; ++i) {
    const double f = std::pow(xs[i], alpha);
    const double fp = alpha * std::pow(xs[i], alpha - 1.0);
    const double ev = values[i] - f;
    const double ed = derivs[i] - fp;
    acc += (static_cast<long double>(ev) * ev +
            static_cast<long double>(ed) * ed) *
           3.0L * ts[i] * ts[i];
  }
  acc /= kPosthocPoints;
  return std::sqrt(static_cast<double>(acc));
}

struct FamilyContext {
  int input_dim = 1;
  LossKind loss = LossKind::kMse;
  std::string loss_name = "mse";
  nlohmann::ordered_json data_meta;
  std::function<Dataset(const TargetSpec&)> dataset;
  bool singular = false;
};

FamilyContext family_context(const ExperimentSpec& spec) {
  FamilyContext ctx;
  if (spec.family == "sine-1d") {
    const double mesh = spec.grid_mesh > 0 ? spec.grid_mesh : 0.01;
    ctx.input_dim = 1;
    ctx.data_meta = {{"kind", "uniform-grid"}, {"mesh", mesh}};
    ctx.dataset = [mesh](const TargetSpec& t) {
      const double k = t.value;
      return dataset_1d(
          [k](double x) { return std::sin(k * std::numbers::pi * x); }, 0.0,
          1.0, mesh);
    };
  } else if (spec.family == "sine-2d") {
    // The 2D grid resolution is a recorded default: 0.02 per axis keeps a
    // full sweep tractable while matching the 1D protocol's shape.
    const double mesh = spec.grid_mesh > 0 ? spec.grid_mesh : 0.02;
    ctx.input_dim = 2;
    ctx.data_meta = {{"kind", "uniform-grid-2d"}, {"mesh", mesh}};
    ctx.dataset = [mesh](const TargetSpec& t) {
      const double k = t.value;
      return dataset_2d(
          [k](double x, double y) {
            return std::sin(k * std::numbers::pi * (x + y));
          },
          0.0, 1.0, mesh);
    };
  } else if (spec.family == "singular-h1") {
    ctx.input_dim = 1;
    ctx.loss = LossKind::kH1;
    ctx.loss_name = "h1";
    ctx.singular = true;
    const int sub = spec.h1_subintervals;
    ctx.data_meta = {{"kind", "h1-midpoint"}, {"subintervals", sub}};
    ctx.dataset = [sub](const TargetSpec& t) {
      const double a = t.value;
      return h1_dataset(
          [a](double x) { return std::pow(x, a); },
          [a](double x) { return a * std::pow(x, a - 1.0); }, 0.0, 1.0, sub);
    };
  } else {
    spec_error("family", "'" + spec.family + "' is not a table family");
  }
  return ctx;
}

SweepOutput run_table_family(const ExperimentSpec& spec, int workers) {
  const FamilyContext ctx = family_context(spec);
  if (spec.targets.empty()) spec_error("targets", "must be non-empty");
  if (spec.seeds.empty()) spec_error("seeds", "must be non-empty");
  if (spec.architectures.empty())
    spec_error("architectures", "must be non-empty");
  for (const std::string& name : spec.architectures) {
    const ParsedArch a = parse_architecture(name);
    if (is_sine_family(spec.family) && a.kind == ParsedArch::kRelu)
      spec_error("architectures",
                 "'" + name + "' is a singular-family baseline");
    if (a.kind == ParsedArch::kFc && spec.family == "singular-h1")
      spec_error("architectures", "'fc' is not a singular-family column");
    if (a.kind == ParsedArch::kRelu)
      for (int d : spec.depths)
        if (d != 1)
          spec_error("depths",
                     "'" + name + "' is one-hidden-layer only (depth 1)");
  }

  struct CellKey {
    TargetSpec target;
    int depth;
    std::string arch;
  };
  std::vector<CellKey> cells;
  for (const TargetSpec& t : spec.targets)
    for (int d : spec.depths)
      for (const std::string& a : spec.architectures)
        cells.push_back({t, d, a});

  // Datasets are shared per target (read-only across runs).
  std::vector<Dataset> datasets;
  datasets.reserve(spec.targets.size());
  for (const TargetSpec& t : spec.targets) datasets.push_back(ctx.dataset(t));

  const std::size_t runs_per_cell = spec.seeds.size();
  const std::size_t total_runs = cells.size() * runs_per_cell;
  std::vector<RunRecord> runs(total_runs);

  auto run_one = [&](std::size_t job) {
    const std::size_t cell_idx = job / runs_per_cell;
    const CellKey& cell = cells[cell_idx];
    const unsigned seed = spec.seeds[job % runs_per_cell];
    const std::size_t target_idx = cell_idx / (spec.depths.size() *
                                               spec.architectures.size());
    RunRecord& rec = runs[job];
    rec.family = spec.family;
    rec.target = cell.target.label;
    rec.depth = cell.depth;
    rec.architecture = cell.arch;
    rec.width = spec.width;
    rec.seed = seed;
    rec.loss = ctx.loss_name;
    rec.epochs = spec.epochs;
    rec.opt = spec.opt;
    rec.data_meta = ctx.data_meta;
    try {
      Model model = build_architecture(cell.arch, ctx.input_dim, spec.width,
                                       cell.depth);
      init(model, "he-uniform", seed);
      TrainConfig cfg;
      cfg.loss = ctx.loss;
      cfg.epochs = spec.epochs;
      cfg.opt = spec.opt;
      rec.result = train(model, datasets[target_idx], cfg);
      if (ctx.singular && std::isfinite(rec.result.final_loss))
        rec.posthoc_h1_error = posthoc_h1_singular(model, cell.target.value);
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  };

  const int n_workers =
      std::max(1, std::min({workers, static_cast<int>(total_runs), 64}));
  if (n_workers == 1) {
    for (std::size_t job = 0; job < total_runs; ++job) run_one(job);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t job = next.fetch_add(1); job < total_runs;
             job = next.fetch_add(1))
          run_one(job);
      });
    for (std::thread& t : pool) t.join();
  }

  SweepOutput out;
  out.table.family = spec.family;
  out.table.metadata = {{"width", spec.width},
                        {"epochs", spec.epochs},
                        {"optimizer", opt_meta(spec.opt)},
                        {"init", "he-uniform"},
                        {"loss", ctx.loss_name},
                        {"data", ctx.data_meta},
                        {"seeds", spec.seeds}};
  for (std::size_t c = 0; c < cells.size(); ++c) {
    TableCell cell;
    cell.target = cells[c].target.label;
    cell.depth = cells[c].depth;
    cell.architecture = cells[c].arch;
    std::vector<double> finals;
    for (std::size_t s = 0; s < runs_per_cell; ++s) {
      const RunRecord& rec = runs[c * runs_per_cell + s];
      cell.run_files.push_back("runs/" + spec.family + "_" +
                               slug(rec.target) + "_d" +
                               std::to_string(rec.depth) + "_" +
                               rec.architecture + "_s" +
                               std::to_string(rec.seed) + ".json");
      if (!rec.error.empty()) {
        cell.error_count++;
        continue;
      }
      finals.push_back(rec.result.final_loss);
      if (!std::isfinite(rec.result.final_loss)) cell.nan_count++;
    }
    cell.median_loss = median_with_nan(finals);
    out.table.cells.push_back(std::move(cell));
  }

  // Per (target, depth) row, flag the best-performing PSE degree --- the
  // computed form of the source tables' bolding convention.
  const std::size_t row_len = spec.architectures.size();
  for (std::size_t row = 0; row * row_len < out.table.cells.size(); ++row) {
    int best = -1;
    double best_loss = 0.0;
    for (std::size_t i = 0; i < row_len; ++i) {
      TableCell& cell = out.table.cells[row * row_len + i];
      if (cell.architecture.rfind("pse-", 0) != 0) continue;
      if (!std::isfinite(cell.median_loss)) continue;
      if (best < 0 || cell.median_loss < best_loss) {
        best = static_cast<int>(i);
        best_loss = cell.median_loss;
      }
    }
    if (best >= 0)
      out.table.cells[row * row_len + static_cast<std::size_t>(best)]
          .best_flag = true;
  }

  out.runs = std::move(runs);
  return out;
}

}  // namespace

Model build_architecture(const std::string& name, int input_dim, int width,
                         int depth) {
  const ParsedArch a = parse_architecture(name);
  if (width < 1) spec_error("width", "must be >= 1");
  if (a.kind == ParsedArch::kRelu) {
    if (depth != 1)
      spec_error("depths", "'" + name + "' is one-hidden-layer only (depth 1)");
    std::vector<int> m(static_cast<std::size_t>(a.order) + 1, 0);
    m.back() = width;
    return Model(make_one_hidden(a.order, input_dim, m));
  }
  if (depth < 1) spec_error("depths", "must be >= 1");
  Network net;
  std::size_t d_in = static_cast<std::size_t>(input_dim);
  const std::size_t w = static_cast<std::size_t>(width);
  for (int l = 0; l < depth; ++l) {
    switch (a.kind) {
      case ParsedArch::kFc:
        net.layers.emplace_back(make_fc(w, d_in));
        break;
      case ParsedArch::kResnet:
        net.layers.emplace_back(make_resnet(w, d_in));
        break;
      default:
        net.layers.emplace_back(make_pse_shared(a.order, w, d_in));
        break;
    }
    d_in = w;
  }
  net.readout_W = Tensor::zeros({1, w});
  net.readout_b = Tensor::zeros({1});
  return Model(std::move(net));
}

ExperimentSpec parse_experiment_spec(const nlohmann::json& j) {
  if (!j.is_object()) spec_error("<root>", "expected a JSON object");
  ExperimentSpec spec;
  if (!j.contains("family") || !j.at("family").is_string())
    spec_error("family", "required string");
  spec.family = j.at("family").get<std::string>();
  const bool table_family =
      is_sine_family(spec.family) || spec.family == "singular-h1";
  if (!table_family && spec.family != "hp-sweep" &&
      spec.family != "construct-check")
    spec_error("family", "unknown family '" + spec.family + "'");

  if (table_family) {
    if (!j.contains("targets") || !j.at("targets").is_array() ||
        j.at("targets").empty())
      spec_error("targets", "required non-empty array");
    for (const auto& v : j.at("targets"))
      spec.targets.push_back(make_target(spec.family, v));

    spec.depths = j.value("depths", std::vector<int>{1});
    if (spec.depths.empty()) spec_error("depths", "must be non-empty");
    for (int d : spec.depths)
      if (d < 1 || d > 8) spec_error("depths", "each depth must be in 1..8");

    if (!j.contains("architectures"))
      spec_error("architectures", "required array");
    spec.architectures =
        j.at("architectures").get<std::vector<std::string>>();
    for (const std::string& a : spec.architectures) parse_architecture(a);

    spec.width = j.value("width", spec.family == "singular-h1" ? 20 : 10);
    if (spec.width < 1) spec_error("width", "must be >= 1");
    spec.seeds = j.value("seeds", std::vector<unsigned>{1, 2, 3, 4, 5});
    if (spec.seeds.empty()) spec_error("seeds", "must be non-empty");
    spec.epochs = j.value("epochs", 20000);
    if (spec.epochs < 0) spec_error("epochs", "must be >= 0");
    spec.grid_mesh = j.value("grid_mesh", 0.0);
    if (spec.grid_mesh < 0) spec_error("grid_mesh", "must be positive");
    spec.h1_subintervals = j.value("h1_subintervals", 1000);
    if (spec.h1_subintervals < 1)
      spec_error("h1_subintervals", "must be >= 1");
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      spec.opt.method = o.value("method", std::string("adam"));
      if (spec.opt.method != "adam" && spec.opt.method != "sgd")
        spec_error("optimizer.method", "'" + spec.opt.method + "' unknown");
      spec.opt.lr = o.value("lr", 0.01);
      spec.opt.beta1 = o.value("beta1", spec.opt.beta1);
      spec.opt.beta2 = o.value("beta2", spec.opt.beta2);
      spec.opt.eps = o.value("eps", spec.opt.eps);
      spec.opt.momentum = o.value("momentum", spec.opt.momentum);
      if (spec.opt.lr <= 0) spec_error("optimizer.lr", "must be positive");
    }
  } else if (spec.family == "hp-sweep") {
    if (!j.contains("alpha")) spec_error("alpha", "required");
    spec.targets.push_back(make_target(spec.family, j.at("alpha")));
    spec.mu = j.value("mu", 1.0);
    spec.delta = j.value("delta", 1.0);
    if (spec.mu <= 0) spec_error("mu", "must be positive");
    if (spec.delta < 1) spec_error("delta", "must be >= 1");
    if (j.contains("n_range")) {
      spec.n_range = j.at("n_range").get<std::vector<int>>();
    } else {
      const int lo = j.value("n_min", 2), hi = j.value("n_max", 10);
      if (lo < 1 || hi < lo) spec_error("n_min/n_max", "need 1 <= n_min <= n_max");
      for (int n = lo; n <= hi; ++n) spec.n_range.push_back(n);
    }
    if (spec.n_range.empty()) spec_error("n_range", "must be non-empty");
    for (int n : spec.n_range)
      if (n < 1) spec_error("n_range", "each n must be >= 1");
  } else {  // construct-check
    spec.kinds = j.value("kinds",
                         std::vector<std::string>{"lower", "bspline",
                                                  "polynomial", "piecewise",
                                                  "singular"});
    if (spec.kinds.empty()) spec_error("kinds", "must be non-empty");
    for (const std::string& k : spec.kinds)
      if (k != "lower" && k != "bspline" && k != "polynomial" &&
          k != "piecewise" && k != "singular")
        spec_error("kinds", "unknown construction '" + k + "'");
    spec.check_seed = j.value("seed", 7u);
    spec.check_tol = j.value("tol", 1e-8);
    if (spec.check_tol <= 0) spec_error("tol", "must be positive");
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("experiment spec " + path + ": " + e.what());
  }
  return parse_experiment_spec(j);
}

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("fit_line needs two same-length samples");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r2 = syy == 0 ? (ss_res == 0 ? 1.0 : 0.0) : 1.0 - ss_res / syy;
  return fit;
}

SweepOutput run_sine_sweep(const ExperimentSpec& spec, int workers) {
  if (!is_sine_family(spec.family))
    spec_error("family", "run_sine_sweep expects a sine family");
  return run_table_family(spec, workers);
}

SweepOutput run_singular_sweep(const ExperimentSpec& spec, int workers) {
  if (spec.family != "singular-h1")
    spec_error("family", "run_singular_sweep expects family singular-h1");
  return run_table_family(spec, workers);
}

HpSweepReport run_hp_sweep(double alpha, const std::vector<int>& n_range,
                           double mu, double delta,
                           const std::string& alpha_label) {
  if (alpha <= 0.5 || alpha >= 1.0)
    throw std::invalid_argument(
        "hp sweep: alpha must lie in (1/2, 1) for a finite H1 error");
  if (n_range.empty())
    throw std::invalid_argument("hp sweep: empty n range");
  HpSweepReport report;
  report.alpha = alpha;
  report.alpha_label =
      alpha_label.empty() ? "x^" + lossless_double(alpha) : alpha_label;
  report.mu = mu;
  report.delta = delta;
  const auto f = [alpha](double x) { return std::pow(x, alpha); };
  const auto fp = [alpha](double x) {
    return alpha * std::pow(x, alpha - 1.0);
  };
  for (int n : n_range) {
    OneHiddenPse net = singular_to_pse(f, n, mu, delta);
    HpSweepRow row;
    row.n = n;
    for (const OneHiddenBranch& b : net.branches)
      row.m_total += static_cast<int>(b.W.rows());
    row.h1_error = h1_error_graded(
        [&net](double x) { return eval_scalar_with_derivative(net, x); }, f,
        fp, 0.0, 1.0, kPosthocPoints);
    report.rows.push_back(row);
    const double ratio =
        row.m_total / std::pow(static_cast<double>(n), delta + 1.0);
    report.max_m_ratio = std::max(report.max_m_ratio, ratio);
  }
  if (report.rows.size() >= 2) {
    std::vector<double> ns, ms, logs;
    for (const HpSweepRow& r : report.rows) {
      ns.push_back(r.n);
      ms.push_back(std::pow(r.m_total, 1.0 / (delta + 1.0)));
      logs.push_back(std::log(r.h1_error));
    }
    report.fit_vs_n = fit_line(ns, logs);
    report.fit_vs_m = fit_line(ms, logs);
  }
  return report;
}

nlohmann::ordered_json hp_report_to_json(const HpSweepReport& report) {
  nlohmann::ordered_json j;
  j["format"] = "psenet-hp-sweep";
  j["target"] = report.alpha_label;
  j["alpha"] = report.alpha;
  j["mu"] = report.mu;
  j["delta"] = report.delta;
  j["quadrature"] = {{"kind", "graded-midpoint-t3"},
                     {"points", kPosthocPoints}};
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const HpSweepRow& r : report.rows)
    rows.push_back({{"n", r.n},
                    {"h1_error", r.h1_error},
                    {"m_total", r.m_total}});
  j["rows"] = std::move(rows);
  auto fit_json = [](const LineFit& f) {
    return nlohmann::ordered_json{
        {"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
  };
  j["fit_log_error_vs_n"] = fit_json(report.fit_vs_n);
  j["fit_log_error_vs_m_pow"] = fit_json(report.fit_vs_m);
  j["m_pow_exponent"] = 1.0 / (report.delta + 1.0);
  j["max_m_ratio"] = report.max_m_ratio;
  return j;
}

std::string hp_report_to_csv(const HpSweepReport& report) {
  std::string out = "n,h1_error,m_total\n";
  for (const HpSweepRow& r : report.rows)
    out += std::to_string(r.n) + "," + lossless_double(r.h1_error) + "," +
           std::to_string(r.m_total) + "\n";
  return out;
}

std::vector<ConstructCheckRow> run_construct_check(
    const std::vector<std::string>& kinds, unsigned seed, double tol) {
  std::vector<ConstructCheckRow> rows;
  for (std::size_t idx = 0; idx < kinds.size(); ++idx) {
    const std::string& kind = kinds[idx];
    ConstructCheckRow row;
    row.kind = kind;
    row.tolerance = tol;
    Rng rng(seed * 2654435761ULL + idx * 97531ULL + 11ULL);
    if (kind == "lower") {
      // Random three-layer generalized net, lowered, compared on 100 inputs.
      const int n = 4;
      const std::size_t d = 5;
      Network net;
      std::size_t d_in = d;
      for (int l = 0; l < 3; ++l) {
        PseGeneralizedLayer layer = make_pse_generalized(n, d, d_in);
        auto fill = [&rng](std::vector<Tensor>& ts) {
          for (Tensor& t : ts)
            for (std::size_t i = 0; i < t.size(); ++i)
              t.data()[i] = rng.uniform(-1.0, 1.0);
        };
        fill(layer.W);
        fill(layer.b);
        fill(layer.alpha);
        net.layers.emplace_back(std::move(layer));
        d_in = d;
      }
      net.readout_W = Tensor::uninitialized({1, d});
      net.readout_b = Tensor::uninitialized({1});
      for (std::size_t i = 0; i < d; ++i)
        net.readout_W.data()[i] = rng.uniform(-1.0, 1.0);
      net.readout_b.data()[0] = rng.uniform(-1.0, 1.0);
      const Network lowered = lower_generalized(net);
      row.neurons = 0;
      for (const Layer& l : lowered.layers)
        row.neurons += static_cast<int>(
            std::get<PseSharedLayer>(l).W.rows());
      double worst = 0.0;
      for (int t = 0; t < 100; ++t) {
        std::vector<double> x(d);
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        const Tensor xin = Tensor::from_matrix(1, d, x);
        const double a = forward(net, xin).at(0, 0);
        const double b = forward(lowered, xin).at(0, 0);
        worst = std::max(worst,
                         std::abs(a - b) / std::max(1.0, std::abs(a)));
      }
      row.max_deviation = worst;
      row.pass = worst <= tol;
      row.detail = "generalized L=3 n=4 d=5 vs lowered, 100 inputs";
    } else if (kind == "bspline") {
      BsplineSeries s;
      s.degree = 3;
      s.k = 7;
      s.coeffs.resize(static_cast<std::size_t>(s.k + s.degree + 1));
      for (double& c : s.coeffs) c = rng.uniform(-1.0, 1.0);
      const OneHiddenPse net = bspline_series_to_pse(s);
      row.neurons = 0;
      for (const OneHiddenBranch& b : net.branches)
        row.neurons += static_cast<int>(b.W.rows());
      double worst = 0.0;
      for (int i = 0; i <= 1000; ++i) {
        const double x = i / 1000.0;
        worst = std::max(worst, std::abs(eval_scalar(net, x) -
                                         bspline_series_eval(s, x)));
      }
      row.max_deviation = worst;
      row.pass = worst <= tol;
      row.detail = "degree-3 series, k=7, 1001 points on [0,1]";
    } else if (kind == "polynomial") {
      Polynomial p;
      p.dim = 2;
      for (int i = 0; i <= 3; ++i)
        for (int jj = 0; i + jj <= 3; ++jj)
          p.terms.push_back({{i, jj}, rng.uniform(-1.0, 1.0)});
      const OneHiddenPse net = polynomial_to_pse(p);
      row.neurons = 0;
      for (const OneHiddenBranch& b : net.branches)
        row.neurons += static_cast<int>(b.W.rows());
      double worst = 0.0;
      for (int t = 0; t < 500; ++t) {
        const std::vector<double> x = {rng.uniform(-1.0, 1.0),
                                       rng.uniform(-1.0, 1.0)};
        const double want = p.eval(x);
        const double got =
            forward(net, Tensor::from_matrix(1, 2, x)).at(0, 0);
        worst = std::max(worst,
                         std::abs(got - want) / std::max(1.0, std::abs(want)));
      }
      row.max_deviation = worst;
      row.pass = worst <= tol;
      row.detail = "random dense degree-3 bivariate, 500 points";
    } else if (kind == "piecewise") {
      PiecewisePoly p;
      p.mesh = {0.0, 0.3, 0.55, 0.8, 1.0};
      const std::vector<int> degrees = {1, 2, 2, 3};
      double left_value = rng.uniform(-1.0, 1.0);
      for (std::size_t e = 0; e < degrees.size(); ++e) {
        std::vector<double> c(static_cast<std::size_t>(degrees[e]) + 1);
        for (std::size_t q = 1; q < c.size(); ++q)
          c[q] = rng.uniform(-1.0, 1.0);
        c[0] = left_value;  // continuity at the left node
        const double h = p.mesh[e + 1] - p.mesh[e];
        double v = 0.0;
        for (std::size_t q = c.size(); q-- > 0;) v = v * h + c[q];
        left_value = v;
        p.coeffs.push_back(std::move(c));
      }
      p.validate();
      const OneHiddenPse net = piecewise_to_pse(p);
      row.neurons = 0;
      for (const OneHiddenBranch& b : net.branches)
        row.neurons += static_cast<int>(b.W.rows());
      double worst = 0.0;
      for (int i = 0; i <= 1000; ++i) {
        const double x = i / 1000.0;
        worst = std::max(worst, std::abs(eval_scalar(net, x) - p.eval(x)));
      }
      row.max_deviation = worst;
      row.pass = worst <= tol;
      row.detail = "4 elements, degrees 1/2/2/3, 1001 points";
    } else {  // singular
      const auto f = [](double x) { return std::pow(x, 2.0 / 3.0); };
      const int n = 6;
      const OneHiddenPse net = singular_to_pse(f, n, 1.0, 1.0);
      row.neurons = 0;
      for (const OneHiddenBranch& b : net.branches)
        row.neurons += static_cast<int>(b.W.rows());
      const HpMesh mesh = hp_geometric_mesh(n, 1.0, 1.0);
      double worst = 0.0;
      for (double x : mesh.mesh)
        worst = std::max(worst, std::abs(eval_scalar(net, x) - f(x)));
      const double h1 = h1_error_graded(
          [&net](double x) { return eval_scalar_with_derivative(net, x); },
          f, [](double x) { return (2.0 / 3.0) * std::pow(x, -1.0 / 3.0); },
          0.0, 1.0, kPosthocPoints);
      row.max_deviation = worst;
      row.pass = worst <= tol && std::isfinite(h1);
      row.detail = "x^(2/3), n=6: node deviation; h1_error=" +
                   lossless_double(h1);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::ordered_json construct_check_to_json(
    const std::vector<ConstructCheckRow>& rows) {
  nlohmann::ordered_json j;
  j["format"] = "psenet-construct-check";
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const ConstructCheckRow& r : rows)
    arr.push_back({{"kind", r.kind},
                   {"max_deviation", r.max_deviation},
                   {"tolerance", r.tolerance},
                   {"neurons", r.neurons},
                   {"pass", r.pass},
                   {"detail", r.detail}});
  j["checks"] = std::move(arr);
  return j;
}

std::string construct_check_to_csv(const std::vector<ConstructCheckRow>& rows) {
  std::string out = "kind,max_deviation,tolerance,neurons,pass\n";
  for (const ConstructCheckRow& r : rows)
    out += r.kind + "," + lossless_double(r.max_deviation) + "," +
           lossless_double(r.tolerance) + "," + std::to_string(r.neurons) +
           "," + (r.pass ? "1" : "0") + "\n";
  return out;
}

int run_experiment_to_dir(const ExperimentSpec& spec,
                          const std::string& out_dir, int workers) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  if (spec.family == "hp-sweep") {
    const HpSweepReport report =
        run_hp_sweep(spec.targets.at(0).value, spec.n_range, spec.mu,
                     spec.delta, spec.targets.at(0).label);
    write_text_file(out_dir + "/hp_sweep.json",
                    hp_report_to_json(report).dump(2) + "\n");
    write_text_file(out_dir + "/hp_sweep.csv", hp_report_to_csv(report));
    return 0;
  }
  if (spec.family == "construct-check") {
    const auto rows =
        run_construct_check(spec.kinds, spec.check_seed, spec.check_tol);
    write_text_file(out_dir + "/construct_check.json",
                    construct_check_to_json(rows).dump(2) + "\n");
    write_text_file(out_dir + "/construct_check.csv",
                    construct_check_to_csv(rows));
    int failures = 0;
    for (const auto& r : rows)
      if (!r.pass) failures++;
    return failures;
  }
  const SweepOutput out = spec.family == "singular-h1"
                              ? run_singular_sweep(spec, workers)
                              : run_sine_sweep(spec, workers);
  fs::create_directories(out_dir + "/runs");
  std::size_t run_idx = 0;
  int errors = 0;
  for (const TableCell& cell : out.table.cells)
    for (const std::string& rel : cell.run_files) {
      save_run_record(out.runs[run_idx], out_dir + "/" + rel);
      if (!out.runs[run_idx].error.empty()) errors++;
      run_idx++;
    }
  write_text_file(out_dir + "/table.csv", table_to_csv(out.table));
  write_text_file(out_dir + "/table.json",
                  table_to_json(out.table).dump(2) + "\n");
  return errors;
}

}  // namespace psenet
