// Utility models, consumption sets, their Fenchel conjugates, and the Euclidean
// online mirror descent updates of the dual pair (lambda, theta).
#pragma once

#include <functional>
#include <optional>
#include <string_view>

#include "ocdm/core.hpp"

namespace ocdm {

// Concave utility u of the averaged consumption, together with the conjugate
// (-u)^*(lambda) = sup_v { lambda^T v + u(v) } on its domain Lambda.
//
//   kZero:                u = 0, Lambda = {0}.
//   kLeftoverValue(y, b): u(v) = y^T (b - v)^+. On the feasible side v <= b the
//                         conjugate is lambda^T b over Lambda = [y, y + e].
//   kSeparableQuadratic:  u(v) = sum_i v_i (1 - v_i), conjugate
//                         sum_i (lambda_i + 1)^2 / 4, Lambda = [-1, 1]^m.
class UtilityModel {
 public:
  enum class Kind { kZero, kLeftoverValue, kSeparableQuadratic };

  static UtilityModel zero(int m);
  static UtilityModel leftover_value(Vec y, Vec b);
  static UtilityModel separable_quadratic(int m);

  Kind kind() const { return kind_; }
  int dim() const { return m_; }
  std::string_view name() const;

  double value(const Eigen::Ref<const Vec>& v) const;
  double conj(const Eigen::Ref<const Vec>& lambda) const;
  // A maximizer of lambda^T v + u(v); also a subgradient of the conjugate.
  Vec conj_subgrad(const Eigen::Ref<const Vec>& lambda) const;

  bool contains(const Eigen::Ref<const Vec>& lambda, double tol = 1e-12) const;
  Vec project(const Eigen::Ref<const Vec>& z) const;
  // A point of Lambda used as the initial iterate: 0 if 0 is in Lambda.
  Vec initial_point() const { return project(Vec::Zero(m_)); }

  double lipschitz() const;
  // Euclidean diameter of Lambda.
  double diameter() const;

  // argmin over Lambda of sum_t xi_t(lambda) = -sum_v^T lambda + count * conj(lambda).
  Vec best_fixed(const Eigen::Ref<const Vec>& sum_v, double count) const;

 private:
  UtilityModel(Kind kind, int m) : kind_(kind), m_(m) {}

  Kind kind_;
  int m_;
  Vec y_;
  Vec b_;
};

// Upper-box consumption set V = { v : v <= b } measured in the Euclidean norm.
// d_V(v) = ||(v - b)^+||, d_V^*(theta) = theta^T b on Theta = {theta >= 0, ||theta|| <= 1}.
class ConsumptionSet {
 public:
  explicit ConsumptionSet(Vec upper);

  int dim() const { return static_cast<int>(b_.size()); }
  const Vec& upper() const { return b_; }

  bool contains(const Eigen::Ref<const Vec>& v) const;
  double dist(const Eigen::Ref<const Vec>& v) const;
  double conj(const Eigen::Ref<const Vec>& theta) const;
  Vec conj_subgrad(const Eigen::Ref<const Vec>& theta) const;

  bool theta_contains(const Eigen::Ref<const Vec>& theta, double tol = 1e-12) const;
  Vec project_theta(const Eigen::Ref<const Vec>& z) const;
  double theta_diameter() const;

  // Distance from the origin to the boundary of V: min_i b_i.
  double boundary_radius() const { return b_.minCoeff(); }

  // argmin over Theta of sum_t phi_t(theta) = theta^T (count * b - sum_v).
  Vec best_fixed(const Eigen::Ref<const Vec>& sum_v, double count) const;

 private:
  Vec b_;
};

// Euclidean projection onto {theta >= 0, ||theta||_2 <= 1}: clamp to the
// orthant, then rescale into the ball.
Vec project_theta_box_ball(const Eigen::Ref<const Vec>& z);

// Subgradient of xi_t(lambda) = -v_t^T lambda + (-u)^*(lambda).
Vec subgrad_xi(const Eigen::Ref<const Vec>& lambda, const Eigen::Ref<const Vec>& v_t,
               const UtilityModel& utility);
// Subgradient of phi_t(theta) = -v_t^T theta + d_V^*(theta).
Vec subgrad_phi(const Eigen::Ref<const Vec>& theta, const Eigen::Ref<const Vec>& v_t,
                const ConsumptionSet& set);

using Projector = std::function<Vec(const Eigen::Ref<const Vec>&)>;

// Euclidean mirror step: projector(point - eta * grad).
Vec omd_step(const Eigen::Ref<const Vec>& point, const Eigen::Ref<const Vec>& grad, double eta,
             const Projector& projector);

// Constant step size sqrt(D) / (G sqrt(T)) that yields regret <= 2 G sqrt(D T).
double constant_step_size(double D, double G, double T);

// Online mirror descent state for one episode. Between updates the subgradients
// of the skipped rounds are summed, so a step that covers `gap` rounds uses the
// gradient of their sum. With squared-gap total S = sum_k gap_k^2 the step size
// is constant_step_size(D, G, S), which reduces to the every-round rule when all
// gaps are 1.
class DualState {
 public:
  struct Bounds {
    double D_lambda = 0.0;
    double D_theta = 0.0;
    double G_lambda = 1.0;
    double G_theta = 1.0;
  };

  DualState(const UtilityModel& utility, const ConsumptionSet& set, const Bounds& bounds,
            double squared_gap_total);

  const DualPair& omega() const { return omega_; }
  void override_step_sizes(std::optional<double> eta_lambda, std::optional<double> eta_theta);
  double eta_lambda() const { return eta_lambda_; }
  double eta_theta() const { return eta_theta_; }
  const Bounds& bounds() const { return bounds_; }

  // Adds round t's consumption to the pending interval and to the diagnostics.
  void observe(const Eigen::Ref<const Vec>& v_t);
  // Applies one mirror step for the pending interval and clears it.
  void update();

  // sum_t xi_t(lambda_t) - min_lambda sum_t xi_t(lambda); same for theta.
  double lambda_regret() const;
  double theta_regret() const;

 private:
  const UtilityModel* utility_;
  const ConsumptionSet* set_;
  Bounds bounds_;
  DualPair omega_;
  double eta_lambda_ = 0.0;
  double eta_theta_ = 0.0;
  Vec pending_v_;
  long pending_rounds_ = 0;
  Vec total_v_;
  long total_rounds_ = 0;
  double xi_sum_ = 0.0;
  double phi_sum_ = 0.0;
};

}  // namespace ocdm
