// Online primal-dual episode loop, update schedules, objective and regret
// metrics, and the multi-trial runner.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ocdm/core.hpp"
#include "ocdm/datagen.hpp"
#include "ocdm/duals.hpp"
#include "ocdm/losses.hpp"
#include "ocdm/models.hpp"

namespace ocdm {

// Rounds at which the duals and the prediction model are updated.
struct Schedule {
  enum class Kind { kPeriodic, kPower };
  Kind kind = Kind::kPeriodic;
  int period = 10;    // kPeriodic
  double beta = 1.0;  // kPower: updates at floor(k^beta), k = 1, 2, ...

  static Schedule periodic(int period) { return {Kind::kPeriodic, period, 1.0}; }
  static Schedule power(double beta) { return {Kind::kPower, 1, beta}; }
};

// Sorted, duplicate-free update rounds in [1, T].
std::vector<int> update_schedule(const Schedule& schedule, int T);

// sum_k (t_k - t_{k-1})^2 over the update rounds with t_0 = 0.
double squared_gap_total(const std::vector<int>& rounds);

struct ModelPredictor {
  ModelKind kind = ModelKind::kLinear;
};

using PredictorChoice = std::variant<ModelPredictor, BenchmarkKind>;

std::string predictor_name(const PredictorChoice& predictor);

struct EpisodeConfig {
  ConstraintMode mode = ConstraintMode::kHard;
  int T = 1000;
  std::optional<double> zeta;  // calibrated when unset
  Schedule schedule = Schedule::periodic(10);
  LossKind loss = LossKind::kSpoPlus;
  PredictorChoice predictor = ModelPredictor{};
  TrainOptions train;
  std::optional<double> learning_rate;  // linear: 1e-2, mlp: 1e-3
  std::optional<double> eta_lambda;
  std::optional<double> eta_theta;
  std::optional<DualState::Bounds> bounds;  // calibrated when unset
  std::uint64_t seed = 1;                   // model initialization and minibatches
  bool check_invariants = true;

  void validate() const;
};

// Instance-level constants shared by every arm and trial of an experiment.
struct Calibration {
  double zeta = 1.0;
  double dv_estimate = 1.0;
  double obj_estimate = 0.0;
  DualState::Bounds bounds;
};

// Estimates, on `warmup` arrivals from a dedicated stream:
//   OBJ*  ~ mean_t r_t^T w*(r_t) + u(mean_t v_t) (unconstrained hindsight),
//   zeta  = OBJ* / B_V,
//   D_v   = max(1, mean_t ||V_t^T w||), the larger of the means under the
//           reward-greedy and the consumption-greedy decisions,
//   D     = diam^2 / 2 for Lambda and Theta, G = ||b|| + D_v.
Calibration calibrate(const Problem& instance, std::uint64_t seed, int warmup = 200);

struct StepRecord {
  int t = 0;
  Vec w;
  double reward = 0.0;
  Vec v;
  Vec lambda;
  Vec theta;
  double wall_us = 0.0;
};

struct Trajectory {
  int T = 0;
  int tau = 0;  // T when the consumption never left the set
  double zeta = 0.0;
  std::vector<StepRecord> steps;
  std::vector<std::pair<int, double>> spo_diagnostics;  // (t, SPO loss) at update rounds
  double lambda_regret = 0.0;
  double theta_regret = 0.0;
  DualState::Bounds bounds;

  double reward_sum() const;
  Vec consumption_sum() const;
};

std::vector<Arrival> generate_stream(const Problem& instance, int T, std::uint64_t seed);

// Runs one episode over stream[0, T). In HARD mode the episode stops at the
// first t with (1/T) sum_{s<=t} v_s outside the consumption set; that round is
// recorded and becomes tau.
Trajectory run_episode(const EpisodeConfig& config, const Problem& instance,
                       const std::vector<Arrival>& stream,
                       const std::optional<Calibration>& calibration = std::nullopt);

// (1/T) sum r_t^T w_t + u((1/T) sum v_t) over the recorded rounds (truncated at
// tau in HARD mode, still normalized by T).
double compute_objective(const Trajectory& traj, const UtilityModel& utility);

// 1 - obj / obj_hindsight; nullopt when obj_hindsight <= 0.
std::optional<double> relative_regret(double obj, double obj_hindsight);

struct Metrics {
  int trial = 0;
  std::uint64_t seed = 0;
  int T = 0;
  int tau = 0;
  double obj = 0.0;
  double obj_hindsight = 0.0;
  std::optional<double> rel_regret;
  double infeasibility = 0.0;
  double dv_measured = 0.0;
  double lambda_regret = 0.0;
  double theta_regret = 0.0;
  double kappa_md = 0.0;
  double wall_ms = 0.0;
};

Metrics evaluate(const Trajectory& traj, const Trajectory& hindsight, const Problem& instance);

struct Summary {
  int trials = 0;
  double mean_obj = 0.0;
  double std_obj = 0.0;
  double mean_rel_regret = 0.0;
  double std_rel_regret = 0.0;
  int rel_regret_defined = 0;
  double mean_infeasibility = 0.0;
  double std_infeasibility = 0.0;
  double mean_tau = 0.0;
};

// Sample standard deviation (n - 1); 0 for a single value.
Summary summarize(const std::vector<Metrics>& rows);

struct TrialResult {
  std::vector<Metrics> rows;  // sorted by trial index
  Summary summary;
};

// Trial i uses seed derive_seed(master_seed, i) for its arrival stream and model.
// Each trial also runs the hindsight benchmark on the same stream for OBJ*.
// Trials run on `workers` threads; results do not depend on the worker count.
TrialResult run_trials(const EpisodeConfig& config, const Problem& instance, int n_trials,
                       std::uint64_t master_seed, int workers = 1,
                       const std::optional<Calibration>& calibration = std::nullopt);

}  // namespace ocdm
