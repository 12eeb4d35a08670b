// Experiment orchestration behind the command-line tool: JSON run
// configuration, the trial grid, CSV emission, and SVG regret plots.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ocdm/datagen.hpp"
#include "ocdm/simulate.hpp"

namespace ocdm {

struct ArmConfig {
  std::string name;
  std::optional<LossKind> loss;  // empty for benchmark predictors
  PredictorChoice predictor;
};

struct RunConfig {
  Family family = Family::kKnapsack;
  KnapsackOptions knapsack;
  LongestPathOptions longest_path;
  std::vector<ArmConfig> arms;
  std::vector<int> horizons;
  int n_trials = 1;
  std::optional<ConstraintMode> mode;  // instance default when unset
  Schedule schedule = Schedule::periodic(10);
  std::optional<double> zeta;
  TrainOptions train;
  std::optional<double> learning_rate;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: OCDM_WORKERS or hardware concurrency
  std::string output = "results.csv";
  bool timing = false;  // wall_ms stays empty unless set, keeping output byte-stable
};

// Parses the JSON run configuration. Errors carry "line N:" prefixes.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

Problem build_instance(const RunConfig& config);

struct CsvRow {
  std::string instance;
  std::string arm;
  std::string loss;
  std::string predictor;
  Metrics metrics;
};

inline constexpr const char* kCsvHeader =
    "instance,arm,loss,predictor,T,trial,seed,tau,obj,obj_hindsight,rel_regret,infeasibility,"
    "dv_measured,wall_ms";

// Runs every (T, trial, arm) cell. Each (T, trial) pair shares one arrival
// stream and one hindsight run across the arms. Rows are ordered by T, then
// arm, then trial.
std::vector<CsvRow> run_experiment(const RunConfig& config, int workers);

// Locale-independent %.9g formatting.
std::string format_number(double v);

void write_csv(std::ostream& os, const std::vector<CsvRow>& rows, bool timing);
// Counts rows whose relative regret is undefined.
int count_undefined(const std::vector<CsvRow>& rows);

struct CsvRecord {
  std::string instance;
  std::string arm;
  int T = 0;
  int tau = 0;
  std::optional<double> rel_regret;
  double infeasibility = 0.0;
  double obj = 0.0;
};

std::vector<CsvRecord> read_csv(std::istream& is);

// SVG layout, one file per instance:
//   <g class="panel" data-metric="rel_regret|infeasibility" data-left data-top
//      data-width data-height data-xmin data-xmax data-ymin data-ymax>
//     axis lines, <text class="xlabel">T</text>, <text class="ylabel">...</text>,
//     per arm: <polyline class="series" data-arm="..." points="x,y ..."/> and
//     <line class="errbar" .../> for +/- one standard deviation,
//     <text class="legend-entry">arm</text>.
// A value maps to y = top + height * (ymax - value) / (ymax - ymin) and T to
// x = left + width * (T - xmin) / (xmax - xmin). The infeasibility panel appears
// when some run finished all T rounds with positive infeasibility (SOFT mode).
std::string render_svg(const std::vector<CsvRecord>& records, const std::string& instance);

// Writes one SVG per instance found in the CSV. With several instances the
// instance name is appended to the file stem. Returns the written paths.
std::vector<std::string> plot_csv(const std::string& csv_path, const std::string& svg_path);

int default_worker_count();

}  // namespace ocdm
