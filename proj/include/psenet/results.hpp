#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "psenet/training.hpp"

namespace psenet {

// One training (or construction) run of an experiment cell, together with
// the configuration that produced it. Serialized one file per run so table
// medians stay recomputable from disk.
struct RunRecord {
  std::string family;
  std::string target;        // human-readable label, e.g. "sin(3*pi*x)"
  int depth = 0;             // hidden layers (0 for construction records)
  std::string architecture;  // "fc", "resnet", "pse-3", "relu-5", ...
  int width = 0;
  unsigned seed = 0;
  std::string loss;  // "mse" or "h1"
  int epochs = 0;
  OptimizerConfig opt;
  nlohmann::ordered_json data_meta;  // sampling-grid description
  RunResult result;
  // Independent fine-grid H1 error measured after training (singular-target
  // runs only); NaN means "not applicable".
  double posthoc_h1_error = std::numeric_limits<double>::quiet_NaN();
  std::string error;  // non-empty if the run threw instead of finishing
};

// NaN and infinities serialize as JSON null (nlohmann's behavior, kept
// deliberately: table cells that fail to train are null in JSON and the
// literal string "NaN" in CSV). Wall time is serialized as null always so
// rerunning a configuration reproduces files byte-identically.
nlohmann::ordered_json run_record_to_json(const RunRecord& rec);
void save_run_record(const RunRecord& rec, const std::string& path);

// One (target, depth, architecture) cell aggregated over seeds.
struct TableCell {
  std::string target;
  int depth = 0;
  std::string architecture;
  double median_loss = std::numeric_limits<double>::quiet_NaN();
  int nan_count = 0;
  int error_count = 0;
  bool best_flag = false;
  std::vector<std::string> run_files;  // provenance, relative paths
};

struct ComparisonTable {
  std::string family;
  nlohmann::ordered_json metadata;
  std::vector<TableCell> cells;
};

// Median over seed outcomes with NaN sorted to +infinity; an even count
// averages the two middle values (NaN-contaminated averages stay NaN).
double median_with_nan(std::vector<double> values);

// CSV with exactly the columns
//   target,depth,architecture,median_loss,nan_count,best_flag
// one row per cell; NaN median prints as the literal "NaN"; best_flag
// prints as 1/0. Numbers use the shortest round-trip encoding.
std::string table_to_csv(const ComparisonTable& table);
nlohmann::ordered_json table_to_json(const ComparisonTable& table);

// Shortest decimal string that parses back to exactly x ("NaN" for
// non-finite x), shared by every text artifact.
std::string lossless_double(double x);

}  // namespace psenet
