// Shared domain types for the online contextual decision-making simulator.
#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ocdm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Raised for inconsistent dimensions or invalid configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a caller breaks a documented precondition (e.g. empty vertex list,
// dual point outside its domain).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// HARD: the episode stops at the first round whose (1/T)-averaged cumulative
// consumption leaves the consumption set. SOFT: all T rounds run and
// infeasibility is reported.
enum class ConstraintMode { kHard, kSoft };

struct Dims {
  int p = 0;  // features
  int d = 0;  // decision entries
  int m = 0;  // resources

  bool operator==(const Dims&) const = default;
};

// One draw (x, r, V) from the arrival distribution.
struct Arrival {
  Vec x;  // p
  Vec r;  // d
  Mat V;  // d x m
};

// Predicted reward vector and consumption matrix.
struct Prediction {
  Vec r;  // d
  Mat V;  // d x m
};

struct DualPair {
  Vec lambda;  // m
  Vec theta;   // m

  static DualPair zeros(int m) { return {Vec::Zero(m), Vec::Zero(m)}; }
};

// Flat model-output layout: vec(r, V) = [r; V(:,0); V(:,1); ...; V(:,m-1)],
// i.e. r first, then V column-stacked. Length d(m+1).
Vec flatten(const Vec& r, const Mat& V);
Prediction unflatten(const Eigen::Ref<const Vec>& flat, int d, int m);

// Price vector s = lambda + zeta * theta; the cost assembled from (r, V) is r - V s.
Vec price_vector(const DualPair& omega, double zeta);

// c = r - V (lambda + zeta * theta).
Vec decision_cost(const Vec& r, const Mat& V, const DualPair& omega, double zeta);

inline Vec decision_cost(const Prediction& mu, const DualPair& omega, double zeta) {
  return decision_cost(mu.r, mu.V, omega, zeta);
}

inline Vec decision_cost(const Arrival& a, const DualPair& omega, double zeta) {
  return decision_cost(a.r, a.V, omega, zeta);
}

bool all_finite(const Eigen::Ref<const Mat>& m);

// Throws ConfigError when the arrival does not match the dimensions or holds
// non-finite entries.
void check_arrival(const Arrival& a, const Dims& dims);

}  // namespace ocdm
