#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "psenet/results.hpp"
#include "psenet/training.hpp"

namespace psenet {

// A target function together with its table label. Sine families use
// sin frequencies; the singular family uses exponents alpha (accepted as
// JSON numbers or fraction strings like "2/3").
struct TargetSpec {
  std::string label;
  double value = 0.0;  // frequency k, or exponent alpha
};

// Declarative description of one benchmark sweep, parsed from JSON.
struct ExperimentSpec {
  std::string family;  // sine-1d | sine-2d | singular-h1 |
                       // hp-sweep | construct-check
  std::vector<TargetSpec> targets;
  std::vector<int> depths;
  std::vector<std::string> architectures;
  int width = 10;
  std::vector<unsigned> seeds;
  int epochs = 20000;
  OptimizerConfig opt;     // defaults to adam, lr 0.01
  double grid_mesh = 0.0;  // sine-family sampling mesh; 0 = family default
  int h1_subintervals = 1000;

  // hp-sweep fields
  double mu = 1.0;
  double delta = 1.0;
  std::vector<int> n_range;

  // construct-check fields
  std::vector<std::string> kinds;
  unsigned check_seed = 7;
  double check_tol = 1e-8;
};

ExperimentSpec parse_experiment_spec(const nlohmann::json& j);
ExperimentSpec load_experiment_spec(const std::string& path);

// Resolves an architecture name ("fc", "resnet", "pse-N", "relu-K") into a
// freshly built, uninitialized model. relu-K names are only meaningful at
// depth 1 (one-hidden-layer family); other names build `depth` hidden
// layers of the given width.
Model build_architecture(const std::string& name, int input_dim, int width,
                         int depth);

// Ordinary least squares of y against x plus coefficient of determination.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

// Output of a sweep: the aggregated table plus every per-run record in
// cell-major, seed-minor order (provenance for the no-silent-loss check).
struct SweepOutput {
  ComparisonTable table;
  std::vector<RunRecord> runs;
};

// Train every (target, depth, architecture) x seed cell of a table family.
// Individual run failures are recorded in the corresponding RunRecord and
// counted on the cell; they never abort the sweep. `workers` >= 1 bounds
// the number of concurrent training runs; aggregation order is fixed, so
// results are identical for any worker count.
SweepOutput run_sine_sweep(const ExperimentSpec& spec, int workers = 1);
SweepOutput run_singular_sweep(const ExperimentSpec& spec, int workers = 1);

// Exponential-decay sweep for the singular-function constructor: builds
// the hp approximant for each n, measures the graded fine-grid H1 error
// and the neuron count, and fits log(error) against n and against
// |m|^{1/(delta+1)}.
struct HpSweepRow {
  int n = 0;
  double h1_error = 0.0;
  int m_total = 0;
};
struct HpSweepReport {
  std::string alpha_label;
  double alpha = 0.0;
  double mu = 1.0;
  double delta = 1.0;
  std::vector<HpSweepRow> rows;
  LineFit fit_vs_n;       // log(error) against n
  LineFit fit_vs_m;      // log(error) against |m|^{1/(delta+1)}
  double max_m_ratio = 0.0;  // max over rows of |m| / n^{delta+1}
};
HpSweepReport run_hp_sweep(double alpha, const std::vector<int>& n_range,
                           double mu, double delta,
                           const std::string& alpha_label = "");
nlohmann::ordered_json hp_report_to_json(const HpSweepReport& report);
std::string hp_report_to_csv(const HpSweepReport& report);

// Constructor verification battery: rebuilds each requested construction
// ("lower", "bspline", "polynomial", "piecewise", "singular") and checks
// it against an independent evaluation.
struct ConstructCheckRow {
  std::string kind;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  int neurons = 0;
  bool pass = false;
  std::string detail;
};
std::vector<ConstructCheckRow> run_construct_check(
    const std::vector<std::string>& kinds, unsigned seed, double tol);
nlohmann::ordered_json construct_check_to_json(
    const std::vector<ConstructCheckRow>& rows);
std::string construct_check_to_csv(const std::vector<ConstructCheckRow>& rows);

// Runs the family named in the spec and writes every artifact under
// out_dir: runs/<...>.json per training run, table.csv + table.json for
// table families, hp_sweep.{json,csv} or construct_check.{json,csv} for
// the other families. Returns the number of runs that recorded an error
// (0 = fully clean sweep).
int run_experiment_to_dir(const ExperimentSpec& spec,
                          const std::string& out_dir, int workers = 1);

}  // namespace psenet
