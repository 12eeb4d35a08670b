// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any fails.
// Experiment CSVs and SVGs are left in the working directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ocdm/experiment.hpp"
#include "ocdm/verify.hpp"

using namespace ocdm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// ---- 1-5: property checks ----

Verdict oracle_exactness() {
  const auto start = Clock::now();
  Philox rng(101, 0);
  int bad = 0, total = 0;
  for (int k : {1, 3, 10}) {
    const OracleCheck r = check_oracle(KnapsackRegion(10, k), 1000, rng);
    bad += r.mismatches + r.non_vertex;
    total += r.samples;
  }
  const OracleCheck g = check_oracle(GridPathRegion(4), 1000, rng);
  bad += g.mismatches + g.non_vertex;
  total += g.samples;
  const double secs = seconds_since(start);
  return {bad == 0 && secs < 5.0, fmt("%d/%d exact, %.2f s (limit 5 s)", total - bad, total, secs)};
}

Verdict spo_plus_consistency() {
  Philox rng(102, 0);
  const SpoPlusCheck k = check_spo_plus(KnapsackRegion(10, 3), 1000, rng);
  const SpoPlusCheck g = check_spo_plus(GridPathRegion(4), 1000, rng);
  const int bad = k.nonzero_at_truth + k.order_violations + g.nonzero_at_truth + g.order_violations;
  return {bad == 0, fmt("knapsack %d+%d, grid %d+%d violations over 2x1000 pairs", k.nonzero_at_truth,
                        k.order_violations, g.nonzero_at_truth, g.order_violations)};
}

Verdict gradient_fidelity() {
  Philox rng(103, 0);
  double worst = 0.0;
  int min_checked = 1 << 30;
  for (Family fam : {Family::kKnapsack, Family::kGridPath})
    for (ModelKind mk : {ModelKind::kLinear, ModelKind::kMlp})
      for (LossKind lk : {LossKind::kSpoPlus, LossKind::kLsCost, LossKind::kLsPred}) {
        const GradientCheck r = check_gradient(fam, mk, lk, 20, rng);
        worst = std::max(worst, r.max_rel_error);
        min_checked = std::min(min_checked, r.checked);
      }
  return {worst <= 1e-4 && min_checked >= 20,
          fmt("max rel error %.2e (limit 1e-4), >= %d points per combination", worst, min_checked)};
}

Verdict conjugates() {
  Philox rng(104, 0);
  const Vec y = vec2(0.3, 0.7), b = vec2(0.8, 1.4);
  int violations = 0;
  double gap = 0.0;
  for (const UtilityModel& u :
       {UtilityModel::zero(2), UtilityModel::leftover_value(y, b), UtilityModel::separable_quadratic(2)}) {
    const FenchelCheck r = check_utility_conjugate(u, 10000, rng);
    violations += r.inequality_violations;
    gap = std::max(gap, r.max_equality_gap);
  }
  const ConsumptionSet set(b);
  const FenchelCheck s = check_set_conjugate(set, 10000, rng);
  violations += s.inequality_violations;
  gap = std::max(gap, s.max_equality_gap);
  double sup_err = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Vec th = project_theta_box_ball(vec2(std::abs(rng.normal()), std::abs(rng.normal())));
    sup_err = std::max(sup_err, std::abs(numeric_distance_conjugate(set, th) - set.conj(th)));
  }
  return {violations == 0 && gap <= 1e-8 && sup_err <= 1e-4,
          fmt("%d inequality violations, equality gap %.1e (limit 1e-8), numeric sup error %.1e (limit 1e-4)",
              violations, gap, sup_err)};
}

Verdict projection() {
  Philox rng(105, 0);
  const ProjectionCheck r = check_theta_projection(100, rng);
  return {r.max_grid_distance <= 1e-3 && r.max_idempotence_error == 0.0 && r.infeasible == 0,
          fmt("grid distance %.1e (limit 1e-3), idempotence error %.1e, %d infeasible", r.max_grid_distance,
              r.max_idempotence_error, r.infeasible)};
}

// ---- 6: mirror descent regret against grid-searched comparators ----

struct RegretRun {
  double lambda_regret = 0.0, lambda_bound = 0.0;
  double theta_regret = 0.0, theta_bound = 0.0;
};

RegretRun omd_regret(const std::vector<Vec>& vs, const UtilityModel& u, const ConsumptionSet& set) {
  const int T = static_cast<int>(vs.size());
  double vmax = 0.0;
  Vec S = Vec::Zero(2);
  for (const Vec& v : vs) {
    vmax = std::max(vmax, v.norm());
    S += v;
  }
  DualState::Bounds bounds;
  bounds.D_lambda = 0.5 * u.diameter() * u.diameter();
  bounds.D_theta = 0.5 * set.theta_diameter() * set.theta_diameter();
  // Subgradient norms: ||conj_subgrad(lambda) - v|| and ||b - v||.
  bounds.G_lambda = vmax + std::sqrt(2.0);
  bounds.G_theta = set.upper().norm() + vmax;
  DualState state(u, set, bounds, static_cast<double>(T));

  double xi = 0.0, phi = 0.0;
  for (const Vec& v : vs) {
    const DualPair w = state.omega();
    xi += -v.dot(w.lambda) + u.conj(w.lambda);
    phi += -v.dot(w.theta) + set.conj(w.theta);
    state.observe(v);
    state.update();
  }

  // Comparators by brute grid search over Lambda = [-1, 1]^2 and Theta.
  double best_xi = 1e300;
  const int nl = 2000;
  for (int i = 0; i <= nl; ++i)
    for (int j = 0; j <= nl; ++j) {
      const Vec l = vec2(-1.0 + 2.0 * i / nl, -1.0 + 2.0 * j / nl);
      best_xi = std::min(best_xi, -S.dot(l) + T * u.conj(l));
    }
  double best_phi = 1e300;
  const Vec lin = T * set.upper() - S;
  const int nr = 1000, na = 1600;
  for (int i = 0; i <= nr; ++i)
    for (int j = 0; j <= na; ++j) {
      const double r = static_cast<double>(i) / nr, a = 0.5 * std::numbers::pi * j / na;
      best_phi = std::min(best_phi, lin.dot(vec2(r * std::cos(a), r * std::sin(a))));
    }

  RegretRun out;
  out.lambda_regret = xi - best_xi;
  out.theta_regret = phi - best_phi;
  out.lambda_bound = 2.0 * bounds.G_lambda * std::sqrt(bounds.D_lambda * T);
  out.theta_bound = 2.0 * bounds.G_theta * std::sqrt(bounds.D_theta * T);
  return out;
}

Verdict omd() {
  const auto start = Clock::now();
  const int T = 10000;
  Philox rng(106, 0);
  std::vector<std::vector<Vec>> sequences(3);
  for (int t = 0; t < T; ++t) {
    sequences[0].push_back(vec2(2.0 * rng.uniform(), 2.0 * rng.uniform()));
    const double phase = 2.0 * std::numbers::pi * t / T;
    sequences[1].push_back(vec2(1.0 + std::sin(phase) * rng.uniform(), 1.0 + std::cos(3 * phase) * rng.uniform()));
    sequences[2].push_back((t / 500) % 2 == 0 ? vec2(2.0, 0.0) : vec2(0.0, 2.0));
  }
  const UtilityModel u = UtilityModel::separable_quadratic(2);
  const ConsumptionSet set(vec2(0.8, 1.4));
  bool ok = true;
  double worst_l = 0.0, worst_t = 0.0;
  for (const auto& vs : sequences) {
    const RegretRun r = omd_regret(vs, u, set);
    ok &= r.lambda_regret <= 1.05 * r.lambda_bound && r.theta_regret <= 1.05 * r.theta_bound;
    worst_l = std::max(worst_l, r.lambda_regret / r.lambda_bound);
    worst_t = std::max(worst_t, r.theta_regret / r.theta_bound);
  }
  const double secs = seconds_since(start);
  return {ok && secs < 30.0,
          fmt("regret/bound max: lambda %.3f, theta %.3f (limit 1.05), %.1f s (limit 30 s)", worst_l, worst_t, secs)};
}

// ---- 7: HARD-mode stopping time ----

struct StopStats {
  int trials = 0, stopped = 0, early_violations = 0, missed_stops = 0;
};

StopStats hard_runs(const Problem& problem, int T, int trials) {
  EpisodeConfig cfg;
  cfg.mode = ConstraintMode::kHard;
  cfg.T = T;
  cfg.loss = LossKind::kSpoPlus;
  const Calibration calib = calibrate(problem, 7);
  StopStats s;
  for (int i = 0; i < trials; ++i) {
    const std::uint64_t seed = derive_seed(7, static_cast<std::uint64_t>(i));
    cfg.seed = seed;
    const Trajectory traj = run_episode(cfg, problem, generate_stream(problem, T, seed), calib);
    ++s.trials;
    Vec cum = Vec::Zero(problem.dims().m);
    for (const StepRecord& rec : traj.steps) {
      cum += rec.v;
      const bool inside = (cum / static_cast<double>(T) - problem.consumption.upper()).maxCoeff() <= 0.0;
      if (rec.t < traj.tau && !inside) ++s.early_violations;
      if (rec.t == traj.tau && traj.tau < T && inside) ++s.missed_stops;
    }
    if (traj.tau < T) ++s.stopped;
  }
  return s;
}

Verdict stopping_time() {
  const StopStats tight = hard_runs(make_knapsack_instance({}), 500, 40);
  KnapsackOptions loose;
  loose.overdemand = 0.1;  // budget = 10x the greedy demand
  const StopStats wide = hard_runs(make_knapsack_instance(loose), 500, 40);
  const bool ok = tight.early_violations == 0 && tight.missed_stops == 0 && wide.early_violations == 0 &&
                  wide.stopped == 0;
  return {ok, fmt("calibrated budget: %d/%d stopped early, %d infeasible records before tau; 10x budget: %d/%d "
                  "with tau < T",
                  tight.stopped, tight.trials, tight.early_violations + tight.missed_stops, wide.stopped,
                  wide.trials)};
}

// ---- 8: update counts ----

Verdict schedule_counts() {
  int bad = 0;
  std::string worst;
  for (double beta : {1.0, 1.5, 2.0})
    for (int T : {100, 1000, 10000}) {
      const double n = static_cast<double>(update_schedule(Schedule::power(beta), T).size());
      if (std::abs(n - std::floor(std::pow(T, 1.0 / beta))) > 1.0) ++bad;
    }
  return {bad == 0, fmt("%d of 9 (beta, T) pairs off by more than one", bad)};
}

// ---- 9-12: experiments ----

struct Cell {
  double mean = 0.0, sd = 0.0, se = 0.0;
  int n = 0;
};

Cell cell(const std::vector<CsvRow>& rows, const std::string& arm, int T, const std::function<double(const Metrics&)>& f) {
  std::vector<double> xs;
  for (const auto& r : rows)
    if (r.arm == arm && r.metrics.T == T) xs.push_back(f(r.metrics));
  Cell c;
  c.n = static_cast<int>(xs.size());
  if (xs.empty()) return c;
  for (double x : xs) c.mean += x;
  c.mean /= c.n;
  double ss = 0.0;
  for (double x : xs) ss += (x - c.mean) * (x - c.mean);
  c.sd = c.n > 1 ? std::sqrt(ss / (c.n - 1)) : 0.0;
  c.se = c.sd / std::sqrt(static_cast<double>(c.n));
  return c;
}

double rel(const Metrics& m) { return m.rel_regret.value_or(std::nan("")); }
double infeas(const Metrics& m) { return m.infeasibility; }
double obj(const Metrics& m) { return m.obj; }

std::string to_csv(const std::vector<CsvRow>& rows) {
  std::ostringstream os;
  write_csv(os, rows, false);
  return os.str();
}

void save(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

struct Experiment {
  RunConfig config;
  std::vector<CsvRow> rows;
  std::string csv;
  double seconds = 0.0;
  int workers = 1;
};

Experiment run_config(const std::string& name, int workers) {
  Experiment e;
  e.config = load_run_config(std::string(OCDM_SOURCE_DIR) + "/configs/" + name + ".json");
  e.workers = workers;
  const auto start = Clock::now();
  e.rows = run_experiment(e.config, workers);
  e.seconds = seconds_since(start);
  e.csv = to_csv(e.rows);
  save(name + ".csv", e.csv);
  try {
    plot_csv(name + ".csv", name + ".svg");
  } catch (const std::exception& ex) {
    std::cerr << "plot failed: " << ex.what() << "\n";
  }
  return e;
}

Verdict knapsack_ordering(const Experiment& e) {
  std::ostringstream info;
  for (int T : e.config.horizons) {
    info << "    T=" << T << ":";
    for (const auto& arm : e.config.arms) {
      const Cell c = cell(e.rows, arm.name, T, rel);
      info << fmt(" %s %.4f (se %.4f)", arm.name.c_str(), c.mean, c.se);
    }
    info << "\n";
  }
  std::cout << info.str();
  const int T = 2000;
  const Cell spo = cell(e.rows, "spo_plus_linear", T, rel);
  const Cell lsc = cell(e.rows, "ls_cost_linear", T, rel);
  const Cell lsp = cell(e.rows, "ls_pred_linear", T, rel);
  const bool order = spo.mean < lsc.mean && lsc.mean < lsp.mean;
  const bool separated = spo.mean + spo.se < lsp.mean - lsp.se;
  const bool fast = e.seconds < 20 * 60;
  return {order && separated && fast && spo.n >= 20,
          fmt("T=2000: SPO+ %.4f, LS_COST %.4f, LS_PRED %.4f (ordering %s); SPO+ vs LS_PRED intervals %s; "
              "%.0f s on %d worker(s) (limit 1200 s)",
              spo.mean, lsc.mean, lsp.mean, order ? "holds" : "violated", separated ? "disjoint" : "overlap",
              e.seconds, e.workers)};
}

Verdict sublinear(const Experiment& e) {
  std::vector<double> means;
  bool ok = true;
  std::string trace;
  for (int T : e.config.horizons) {
    means.push_back(cell(e.rows, "spo_plus_linear", T, rel).mean);
    trace += fmt("%s%d: %.4f", trace.empty() ? "" : ", ", T, means.back());
    if (means.size() > 1) ok &= means[means.size() - 1] < means[means.size() - 2];
  }
  return {ok, "SPO+ mean relative regret " + trace};
}

Verdict soft_constraint(const Experiment& e) {
  std::ostringstream info;
  for (int T : e.config.horizons) {
    info << "    T=" << T << ":";
    for (const auto& arm : e.config.arms) {
      info << fmt(" %s obj %.2f infeas %.4f", arm.name.c_str(), cell(e.rows, arm.name, T, obj).mean,
                  cell(e.rows, arm.name, T, infeas).mean);
    }
    info << "\n";
  }
  std::cout << info.str();
  const Cell early = cell(e.rows, "spo_plus_linear", 250, infeas);
  const Cell late = cell(e.rows, "spo_plus_linear", 1000, infeas);
  const double h = cell(e.rows, "hindsight", 1000, obj).mean;
  const double t = cell(e.rows, "true_model", 1000, obj).mean;
  const double s = cell(e.rows, "saa", 1000, obj).mean;
  const bool decay = late.mean < early.mean;
  const bool order = h >= t && t >= s;
  return {decay && order && late.n >= 20,
          fmt("SPO+ infeasibility T=250 %.4g -> T=1000 %.4g (%s); OBJ hindsight %.2f, true %.2f, saa %.2f (%s)",
              early.mean, late.mean, decay ? "decreases" : "does not decrease", h, t, s,
              order ? "ordered" : "not ordered")};
}

Verdict determinism(const Experiment& path, const Experiment& knap) {
  // Same master seed, different worker count.
  const int other = path.workers == 1 ? 3 : 1;
  const std::string again = to_csv(run_experiment(path.config, other));
  RunConfig small = knap.config;
  small.horizons = {500};
  small.n_trials = 3;
  const std::string a = to_csv(run_experiment(small, 1));
  const std::string b = to_csv(run_experiment(small, 2));
  // The small knapsack run must also equal the matching rows of the full run.
  std::vector<CsvRow> subset;
  for (const auto& row : knap.rows)
    if (row.metrics.T == 500 && row.metrics.trial < 3) subset.push_back(row);
  const bool same_path = again == path.csv;
  const bool same_knap = a == b && a == to_csv(subset);
  return {same_path && same_knap,
          fmt("longest-path CSV %s across %d and %d workers; knapsack subset %s", same_path ? "identical" : "differs",
              path.workers, other, same_knap ? "identical" : "differs")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Verdict& v) {
    std::cout << "criterion " << id << " [" << (v.pass ? "PASS" : "FAIL") << "] " << name << ": " << v.detail
              << std::endl;
    if (!v.pass) ++failures;
  };
  auto guarded = [&](int id, const char* name, const std::function<Verdict()>& f) {
    try {
      report(id, name, f());
    } catch (const std::exception& ex) {
      report(id, name, {false, std::string("exception: ") + ex.what()});
    }
  };

  const int workers = default_worker_count();
  guarded(1, "oracle exactness", oracle_exactness);
  guarded(2, "SPO+ consistency", spo_plus_consistency);
  guarded(3, "gradient fidelity", gradient_fidelity);
  guarded(4, "conjugate correctness", conjugates);
  guarded(5, "projection optimality", projection);
  guarded(6, "OMD regret", omd);
  guarded(7, "stopping-time semantics", stopping_time);
  guarded(8, "power schedule counts", schedule_counts);

  Experiment knap, path;
  bool have_knap = false, have_path = false;
  try {
    knap = run_config("knapsack", workers);
    have_knap = true;
  } catch (const std::exception& ex) {
    std::cerr << "knapsack experiment failed: " << ex.what() << "\n";
  }
  guarded(9, "knapsack loss ordering", [&] { return have_knap ? knapsack_ordering(knap) : Verdict{false, "no run"}; });
  guarded(10, "sublinear regret", [&] { return have_knap ? sublinear(knap) : Verdict{false, "no run"}; });
  try {
    path = run_config("longest_path", workers);
    have_path = true;
  } catch (const std::exception& ex) {
    std::cerr << "longest-path experiment failed: " << ex.what() << "\n";
  }
  guarded(11, "soft-constraint behavior",
          [&] { return have_path ? soft_constraint(path) : Verdict{false, "no run"}; });
  guarded(12, "determinism",
          [&] { return have_path && have_knap ? determinism(path, knap) : Verdict{false, "no run"}; });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
