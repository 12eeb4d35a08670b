// Fast property suite: oracles against brute force, SPO+ consistency, model
// gradients against central differences, Fenchel-Young for the conjugates, and
// the Theta projection. The individual checks are reused by the tests.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ocdm/datagen.hpp"
#include "ocdm/duals.hpp"
#include "ocdm/losses.hpp"
#include "ocdm/models.hpp"
#include "ocdm/oracles.hpp"
#include "ocdm/rng.hpp"

namespace ocdm {

struct OracleCheck {
  int samples = 0;
  int mismatches = 0;  // objective differs from the brute-force optimum
  int non_vertex = 0;
};

// Gaussian cost vectors; compares region.solve against brute_force_solve.
OracleCheck check_oracle(const FeasibleRegion& region, int samples, Philox& rng);

struct SpoPlusCheck {
  int samples = 0;
  int nonzero_at_truth = 0;  // spo_plus_loss(c, c) != 0
  int order_violations = 0;  // spo_plus < spo or spo < 0
};

SpoPlusCheck check_spo_plus(const FeasibleRegion& region, int samples, Philox& rng);

// Gap between the best and the second-best vertex objective.
double argmax_margin(const Eigen::Ref<const Vec>& c, const std::vector<Vec>& vertices);

struct GradientCheck {
  int checked = 0;
  int skipped = 0;  // argmax margin or ReLU kink too close
  double max_rel_error = 0.0;
};

// Composed parameter gradient of the empirical surrogate at one random sample
// against central differences, repeated until `points` samples passed the
// filters. The relative error of a point is ||fd - g|| / max(||fd||, ||g||).
GradientCheck check_gradient(Family family, ModelKind model, LossKind loss, int points,
                             Philox& rng, double min_margin = 1e-3);

struct FenchelCheck {
  int samples = 0;
  int inequality_violations = 0;
  double max_equality_gap = 0.0;  // at conj_subgrad maximizers
};

// (-u)^*(lambda) >= lambda^T v + u(v) for random lambda in Lambda and v, with
// equality at v = conj_subgrad(lambda). For the leftover utility v is drawn
// from the feasible side v <= b where its conjugate is defined.
FenchelCheck check_utility_conjugate(const UtilityModel& utility, int samples, Philox& rng);
// d_V^*(theta) >= theta^T v - d_V(v), equality at v = conj_subgrad(theta).
FenchelCheck check_set_conjugate(const ConsumptionSet& set, int samples, Philox& rng);

// sup_v theta^T v - d_V(v) by nested grid search (m = 2 only).
double numeric_distance_conjugate(const ConsumptionSet& set, const Eigen::Ref<const Vec>& theta);

// Nearest point of Theta (m = 2) on a polar grid with radial and angular
// spacing `step`.
Vec grid_nearest_theta(const Eigen::Ref<const Vec>& z, double step);

struct ProjectionCheck {
  int samples = 0;
  double max_grid_distance = 0.0;
  double max_idempotence_error = 0.0;
  int infeasible = 0;
};

ProjectionCheck check_theta_projection(int samples, Philox& rng, double grid_step = 1e-3);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<CheckResult> run_verify_suite(std::uint64_t seed = 20240611);

// Prints the table and returns true when every check passed.
bool print_verify_table(std::ostream& os, const std::vector<CheckResult>& results);

}  // namespace ocdm
