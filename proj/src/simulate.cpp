#include "ocdm/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace ocdm {

namespace {

constexpr std::uint64_t kArrivalStream = 0x4152;      // "AR"
constexpr std::uint64_t kModelStream = 0x4D4F;        // "MO"
constexpr std::uint64_t kCalibrationStream = 0x4341;  // "CA"

}  // namespace

std::vector<int> update_schedule(const Schedule& schedule, int T) {
  std::vector<int> rounds;
  if (T < 1) return rounds;
  if (schedule.kind == Schedule::Kind::kPeriodic) {
    if (schedule.period < 1) throw ConfigError("schedule: period must be >= 1");
    for (int t = schedule.period; t <= T; t += schedule.period) rounds.push_back(t);
    return rounds;
  }
  if (!(schedule.beta >= 1.0)) throw ConfigError("schedule: beta must be >= 1");
  for (long k = 1;; ++k) {
    const double t = std::floor(std::pow(static_cast<double>(k), schedule.beta) + 1e-9);
    if (t > T) break;
    const int ti = static_cast<int>(t);
    if (rounds.empty() || rounds.back() != ti) rounds.push_back(ti);
  }
  return rounds;
}

double squared_gap_total(const std::vector<int>& rounds) {
  double total = 0.0;
  int prev = 0;
  for (int t : rounds) {
    const double gap = t - prev;
    total += gap * gap;
    prev = t;
  }
  return std::max(total, 1.0);
}

std::string predictor_name(const PredictorChoice& predictor) {
  if (const auto* m = std::get_if<ModelPredictor>(&predictor)) return std::string(to_string(m->kind));
  return std::string(to_string(std::get<BenchmarkKind>(predictor)));
}

void EpisodeConfig::validate() const {
  if (T < 1) throw ConfigError("episode: T must be >= 1");
  if (zeta && !(*zeta > 0.0)) throw ConfigError("episode: zeta must be positive");
  if (schedule.kind == Schedule::Kind::kPeriodic && schedule.period < 1) {
    throw ConfigError("episode: period must be >= 1");
  }
  if (schedule.kind == Schedule::Kind::kPower && !(schedule.beta >= 1.0)) {
    throw ConfigError("episode: beta must be >= 1");
  }
  if (train.steps < 0 || train.batch_size < 0) {
    throw ConfigError("episode: training steps and batch size must be >= 0");
  }
  if (learning_rate && !(*learning_rate > 0.0)) throw ConfigError("episode: lr must be positive");
  if (eta_lambda && !(*eta_lambda > 0.0)) throw ConfigError("episode: eta_lambda must be positive");
  if (eta_theta && !(*eta_theta > 0.0)) throw ConfigError("episode: eta_theta must be positive");
}

Calibration calibrate(const Problem& instance, std::uint64_t seed, int warmup) {
  if (warmup < 1) throw ConfigError("calibrate: warmup must be >= 1");
  Philox rng(seed, kCalibrationStream);
  const FeasibleRegion& region = *instance.region;
  const int m = instance.dims().m;
  double reward = 0.0;
  Vec total_v = Vec::Zero(m);
  double greedy_norm = 0.0;
  double heavy_norm = 0.0;
  for (int i = 0; i < warmup; ++i) {
    const Arrival a = instance.sample(rng);
    const Vec w = region.solve(a.r);
    const Vec v = a.V.transpose() * w;
    reward += a.r.dot(w);
    total_v += v;
    const Vec w_heavy = region.solve(a.V * Vec::Ones(m));
    greedy_norm += v.norm();
    heavy_norm += (a.V.transpose() * w_heavy).norm();
  }
  // Typical consumption scale. A sample maximum is useless here: heavy-tailed
  // consumptions make it grow with the warmup size and freeze the duals.
  const double dv = std::max({1.0, greedy_norm / warmup, heavy_norm / warmup});
  Calibration c;
  c.obj_estimate = reward / warmup + instance.utility.value(total_v / warmup);
  const double radius = instance.consumption.boundary_radius();
  if (!(radius > 0.0)) throw ConfigError("calibrate: consumption set must contain 0 in its interior");
  c.zeta = std::max(c.obj_estimate, 1e-6) / radius;
  c.dv_estimate = dv;
  const double lambda_diam = instance.utility.diameter();
  const double theta_diam = instance.consumption.theta_diameter();
  const double g = instance.consumption.upper().norm() + dv;
  c.bounds = {0.5 * lambda_diam * lambda_diam, 0.5 * theta_diam * theta_diam, g, g};
  return c;
}

double Trajectory::reward_sum() const {
  double s = 0.0;
  for (const auto& step : steps) s += step.reward;
  return s;
}

Vec Trajectory::consumption_sum() const {
  if (steps.empty()) return Vec();
  Vec s = Vec::Zero(steps.front().v.size());
  for (const auto& step : steps) s += step.v;
  return s;
}

std::vector<Arrival> generate_stream(const Problem& instance, int T, std::uint64_t seed) {
  Philox rng(seed, kArrivalStream);
  std::vector<Arrival> out;
  out.reserve(static_cast<std::size_t>(std::max(T, 0)));
  for (int t = 0; t < T; ++t) out.push_back(instance.sample(rng));
  return out;
}

Trajectory run_episode(const EpisodeConfig& config, const Problem& instance,
                       const std::vector<Arrival>& stream,
                       const std::optional<Calibration>& calibration) {
  config.validate();
  const int T = config.T;
  if (static_cast<int>(stream.size()) < T) throw ConfigError("episode: stream shorter than T");
  const ConsumptionSet& set = instance.consumption;
  const UtilityModel& utility = instance.utility;
  const FeasibleRegion& region = *instance.region;
  const Dims dims = instance.dims();
  const OutputLayout layout = instance.layout();
  if (config.mode == ConstraintMode::kHard && !set.contains(Vec::Zero(set.dim()))) {
    throw ConfigError("episode: HARD mode needs 0 in the consumption set");
  }

  const Calibration calib = calibration ? *calibration : calibrate(instance, config.seed);
  const double zeta = config.zeta.value_or(calib.zeta);
  const std::vector<int> rounds = update_schedule(config.schedule, T);
  DualState duals(utility, set, config.bounds.value_or(calib.bounds), squared_gap_total(rounds));
  duals.override_step_sizes(config.eta_lambda, config.eta_theta);

  std::unique_ptr<Model> model;
  AdamState adam;
  Philox model_rng(config.seed, kModelStream);
  if (const auto* mp = std::get_if<ModelPredictor>(&config.predictor)) {
    model = make_model(mp->kind, dims.p, layout.size());
    initialize(*model, model_rng);
    adam.lr = config.learning_rate.value_or(mp->kind == ModelKind::kLinear ? 1e-2 : 1e-3);
  }
  const ConditionalMean true_mean = instance.true_mean();
  SaaPredictor saa(dims.d, dims.m);
  Mat X(dims.p, T);
  Mat Y(layout.size(), T);

  Trajectory traj;
  traj.T = T;
  traj.tau = T;
  traj.zeta = zeta;
  traj.bounds = duals.bounds();
  traj.steps.reserve(static_cast<std::size_t>(T));
  Vec cumulative = Vec::Zero(dims.m);
  std::size_t next_round = 0;

  for (int t = 1; t <= T; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const Arrival& a = stream[static_cast<std::size_t>(t - 1)];
    if (config.check_invariants) check_arrival(a, dims);
    const DualPair omega = duals.omega();

    const Prediction prediction =
        model ? layout.to_prediction(model->forward(a.x))
              : benchmark_predict(std::get<BenchmarkKind>(config.predictor), a.x, saa, a, true_mean);
    const Vec c_hat = decision_cost(prediction, omega, zeta);
    Vec w = region.solve(c_hat);
    if (config.check_invariants && !region.is_vertex(w)) {
      throw ContractError("oracle returned a point outside the decision region");
    }

    StepRecord rec;
    rec.t = t;
    rec.reward = a.r.dot(w);
    rec.v = a.V.transpose() * w;
    rec.lambda = omega.lambda;
    rec.theta = omega.theta;
    rec.w = std::move(w);
    cumulative += rec.v;
    const bool left_set = !set.contains(cumulative / static_cast<double>(T));

    const bool update_now = next_round < rounds.size() && rounds[next_round] == t;
    if (update_now && model) {
      traj.spo_diagnostics.emplace_back(t, spo_loss(prediction, a, omega, zeta, region));
    }
    duals.observe(rec.v);
    if (config.mode == ConstraintMode::kHard && left_set) {
      rec.wall_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
      traj.steps.push_back(std::move(rec));
      traj.tau = t;
      break;
    }

    saa.observe(a);
    X.col(t - 1) = a.x;
    Y.col(t - 1) = layout.target(a.r, a.V);
    if (update_now) {
      ++next_round;
      duals.update();
      if (model) {
        const TrainingSet data{X.leftCols(t), Y.leftCols(t)};
        fit_erm(*model, adam, data, layout, duals.omega(), zeta, config.loss, region, config.train,
                model_rng);
      }
      if (config.check_invariants) {
        if (!utility.contains(duals.omega().lambda, 1e-9) ||
            !set.theta_contains(duals.omega().theta, 1e-9)) {
          throw ContractError("dual update left its domain");
        }
      }
    }
    rec.wall_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
    traj.steps.push_back(std::move(rec));
  }
  traj.lambda_regret = duals.lambda_regret();
  traj.theta_regret = duals.theta_regret();
  return traj;
}

double compute_objective(const Trajectory& traj, const UtilityModel& utility) {
  if (traj.T < 1) throw ConfigError("compute_objective: empty trajectory");
  const double T = traj.T;
  Vec v_sum = traj.consumption_sum();
  if (v_sum.size() == 0) v_sum = Vec::Zero(utility.dim());
  return traj.reward_sum() / T + utility.value(v_sum / T);
}

std::optional<double> relative_regret(double obj, double obj_hindsight) {
  if (!(obj_hindsight > 0.0)) return std::nullopt;
  return 1.0 - obj / obj_hindsight;
}

Metrics evaluate(const Trajectory& traj, const Trajectory& hindsight, const Problem& instance) {
  Metrics m;
  m.T = traj.T;
  m.tau = traj.tau;
  m.obj = compute_objective(traj, instance.utility);
  m.obj_hindsight = compute_objective(hindsight, instance.utility);
  m.rel_regret = relative_regret(m.obj, m.obj_hindsight);
  Vec v_sum = traj.consumption_sum();
  if (v_sum.size() == 0) v_sum = Vec::Zero(instance.dims().m);
  m.infeasibility = instance.consumption.dist(v_sum / static_cast<double>(traj.T));
  for (const auto& s : traj.steps) m.dv_measured = std::max(m.dv_measured, s.v.norm());
  m.lambda_regret = traj.lambda_regret;
  m.theta_regret = traj.theta_regret;
  m.kappa_md = std::max(1.0, m.dv_measured) *
               (traj.zeta * std::sqrt(traj.bounds.D_theta) + std::sqrt(traj.bounds.D_lambda));
  for (const auto& s : traj.steps) m.wall_ms += s.wall_us / 1000.0;
  return m;
}

Summary summarize(const std::vector<Metrics>& rows) {
  Summary s;
  s.trials = static_cast<int>(rows.size());
  if (rows.empty()) return s;
  auto mean_std = [](const std::vector<double>& xs) -> std::pair<double, double> {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
  };
  std::vector<double> obj, rr, inf, tau;
  for (const auto& r : rows) {
    obj.push_back(r.obj);
    inf.push_back(r.infeasibility);
    tau.push_back(r.tau);
    if (r.rel_regret) rr.push_back(*r.rel_regret);
  }
  std::tie(s.mean_obj, s.std_obj) = mean_std(obj);
  std::tie(s.mean_rel_regret, s.std_rel_regret) = mean_std(rr);
  s.rel_regret_defined = static_cast<int>(rr.size());
  std::tie(s.mean_infeasibility, s.std_infeasibility) = mean_std(inf);
  s.mean_tau = mean_std(tau).first;
  return s;
}

TrialResult run_trials(const EpisodeConfig& config, const Problem& instance, int n_trials,
                       std::uint64_t master_seed, int workers,
                       const std::optional<Calibration>& calibration) {
  if (n_trials < 1) throw ConfigError("run_trials: n_trials must be >= 1");
  config.validate();
  const Calibration calib = calibration ? *calibration : calibrate(instance, master_seed);
  TrialResult result;
  result.rows.resize(static_cast<std::size_t>(n_trials));

  auto run_one = [&](int trial) {
    const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(trial));
    const std::vector<Arrival> stream = generate_stream(instance, config.T, seed);
    EpisodeConfig arm = config;
    arm.seed = seed;
    EpisodeConfig hindsight = arm;
    hindsight.predictor = BenchmarkKind::kHindsight;
    const Trajectory traj = run_episode(arm, instance, stream, calib);
    const Trajectory best = run_episode(hindsight, instance, stream, calib);
    Metrics m = evaluate(traj, best, instance);
    m.trial = trial;
    m.seed = seed;
    result.rows[static_cast<std::size_t>(trial)] = m;
  };

  const int threads = std::clamp(workers, 1, n_trials);
  if (threads == 1) {
    for (int i = 0; i < n_trials; ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n_trials; i = next++) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  result.summary = summarize(result.rows);
  return result;
}

}  // namespace ocdm
