#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "psenet/layers.hpp"

namespace psenet {

// a, a+h, ..., b; the endpoint is included when (b-a)/h is integral to
// 1e-12.
std::vector<double> uniform_grid(double a, double b, double h);

// Full-batch dataset: N x d inputs, N x 1 targets. Derivative targets (and
// the quadrature weight) are carried only by datasets built for the
// derivative-matching objective.
struct Dataset {
  Tensor inputs;
  Tensor targets;
  bool has_derivatives = false;
  Tensor target_derivatives;
  double quad_weight = 0.0;  // subinterval length of the midpoint rule
};

Dataset dataset_1d(const std::function<double(double)>& f, double a, double b,
                   double h);
Dataset dataset_2d(const std::function<double(double, double)>& f, double a,
                   double b, double h);
// Midpoint-rule quadrature dataset on [a, b] sampling f and f'; nodes are
// interior midpoints, so an integrable endpoint singularity of f' is never
// evaluated.
Dataset h1_dataset(const std::function<double(double)>& f,
                   const std::function<double(double)>& f_prime, double a,
                   double b, int subintervals);

enum class LossKind { kMse, kH1 };

// Measurement-form losses on the current parameters.
double mse_loss(const Model& model, const Dataset& data);
double h1_loss(const Model& model, const Dataset& data);

// H1 distance between a univariate model-like function and a target,
// measured with the singularity-graded substitution x = a + (b-a) t^3 and a
// uniform midpoint rule in t: the Jacobian 3t^2 tames an integrable
// derivative singularity at the left endpoint, which a uniform rule would
// systematically under-sample.
double h1_error_graded(
    const std::function<std::pair<double, double>(double)>& value_and_deriv,
    const std::function<double(double)>& f,
    const std::function<double(double)>& f_prime, double a, double b,
    int points);

struct OptimizerConfig {
  std::string method = "adam";  // "adam" | "sgd"
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum = 0.9;
};

// First-order optimizer with per-parameter state. Stateless with respect to
// the model: apply() pairs the given parameter tensors with its
// accumulators positionally.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(std::move(cfg)) {}

  void apply(const std::vector<Tensor*>& params,
             const std::vector<Tensor>& grads);
  long steps() const { return step_; }

 private:
  OptimizerConfig cfg_;
  std::vector<Tensor> first_;   // Adam first moment / SGD velocity
  std::vector<Tensor> second_;  // Adam second moment
  long step_ = 0;
};

struct TrainConfig {
  LossKind loss = LossKind::kMse;
  OptimizerConfig opt;
  int epochs = 20000;
  int trace_every = 100;
};

struct RunResult {
  double final_loss = 0.0;  // NaN on abort
  bool nan_abort = false;
  int nan_epoch = -1;  // epoch whose loss evaluation went non-finite
  std::vector<std::pair<int, double>> trace;  // (epoch, loss before that step)
  double wall_time_seconds = 0.0;  // measured; serialized as null (see docs)
};

// Full-batch training, deterministic for a fixed model state. A non-finite
// loss is an outcome, not an error: the loop stops, the result records the
// epoch, and final_loss is NaN.
RunResult train(Model& model, const Dataset& data, const TrainConfig& cfg);

}  // namespace psenet
