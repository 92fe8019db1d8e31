#include "psenet/results.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "psenet/model_io.hpp"

namespace psenet {

namespace {

nlohmann::ordered_json opt_to_json(const OptimizerConfig& opt) {
  nlohmann::ordered_json j;
  j["method"] = opt.method;
  j["lr"] = opt.lr;
  if (opt.method == "adam") {
    j["beta1"] = opt.beta1;
    j["beta2"] = opt.beta2;
    j["eps"] = opt.eps;
  } else {
    j["momentum"] = opt.momentum;
  }
  return j;
}

}  // namespace

std::string lossless_double(double x) {
  if (!std::isfinite(x)) return "NaN";
  return nlohmann::ordered_json(x).dump();
}

nlohmann::ordered_json run_record_to_json(const RunRecord& rec) {
  nlohmann::ordered_json j;
  j["format"] = "psenet-run";
  j["family"] = rec.family;
  j["target"] = rec.target;
  j["depth"] = rec.depth;
  j["architecture"] = rec.architecture;
  j["width"] = rec.width;
  j["seed"] = rec.seed;
  j["loss"] = rec.loss;
  j["epochs"] = rec.epochs;
  j["optimizer"] = opt_to_json(rec.opt);
  j["data"] = rec.data_meta;
  j["init"] = "he-uniform";
  if (!rec.error.empty()) {
    j["error"] = rec.error;
    return j;
  }
  if (std::isfinite(rec.result.final_loss))
    j["final_loss"] = rec.result.final_loss;
  else
    j["final_loss"] = nullptr;  // the JSON face of a NaN outcome
  j["nan_abort"] = rec.result.nan_abort;
  if (rec.result.nan_abort) j["nan_epoch"] = rec.result.nan_epoch;
  nlohmann::ordered_json trace = nlohmann::ordered_json::array();
  for (const auto& [epoch, loss] : rec.result.trace)
    trace.push_back({epoch, loss});
  j["trace"] = std::move(trace);
  if (rec.loss == "h1") {
    if (std::isfinite(rec.posthoc_h1_error))
      j["posthoc_h1_error"] = rec.posthoc_h1_error;
    else
      j["posthoc_h1_error"] = nullptr;
  }
  // Measured but serialized as null: keeps identical reruns byte-identical.
  j["wall_time_seconds"] = nullptr;
  return j;
}

void save_run_record(const RunRecord& rec, const std::string& path) {
  write_text_file(path, run_record_to_json(rec).dump(2) + "\n");
}

double median_with_nan(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end(), [](double a, double b) {
    if (std::isnan(a)) return false;  // NaN compares greatest
    if (std::isnan(b)) return true;
    return a < b;
  });
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string table_to_csv(const ComparisonTable& table) {
  std::ostringstream out;
  out << "target,depth,architecture,median_loss,nan_count,best_flag\n";
  for (const TableCell& c : table.cells) {
    out << c.target << ',' << c.depth << ',' << c.architecture << ','
        << lossless_double(c.median_loss) << ',' << c.nan_count << ','
        << (c.best_flag ? 1 : 0) << '\n';
  }
  return out.str();
}

nlohmann::ordered_json table_to_json(const ComparisonTable& table) {
  nlohmann::ordered_json j;
  j["format"] = "psenet-table";
  j["family"] = table.family;
  j["metadata"] = table.metadata;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const TableCell& c : table.cells) {
    nlohmann::ordered_json cj;
    cj["target"] = c.target;
    cj["depth"] = c.depth;
    cj["architecture"] = c.architecture;
    if (std::isfinite(c.median_loss))
      cj["median_loss"] = c.median_loss;
    else
      cj["median_loss"] = nullptr;
    cj["nan_count"] = c.nan_count;
    if (c.error_count > 0) cj["error_count"] = c.error_count;
    cj["best_flag"] = c.best_flag;
    cj["runs"] = c.run_files;
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  return j;
}

}  // namespace psenet
