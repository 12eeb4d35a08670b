#include "ocdm/duals.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace ocdm {

namespace {

void require_dim(const Eigen::Ref<const Vec>& v, int m, const char* who) {
  if (v.size() != m) throw ConfigError(std::string(who) + ": dimension mismatch");
}

}  // namespace

UtilityModel UtilityModel::zero(int m) { return {Kind::kZero, m}; }

UtilityModel UtilityModel::leftover_value(Vec y, Vec b) {
  if (y.size() != b.size()) throw ConfigError("leftover utility: y and b lengths differ");
  UtilityModel u(Kind::kLeftoverValue, static_cast<int>(y.size()));
  u.y_ = std::move(y);
  u.b_ = std::move(b);
  return u;
}

UtilityModel UtilityModel::separable_quadratic(int m) { return {Kind::kSeparableQuadratic, m}; }

std::string_view UtilityModel::name() const {
  switch (kind_) {
    case Kind::kZero:
      return "zero";
    case Kind::kLeftoverValue:
      return "leftover_value";
    case Kind::kSeparableQuadratic:
      return "separable_quadratic";
  }
  return "?";
}

double UtilityModel::value(const Eigen::Ref<const Vec>& v) const {
  require_dim(v, m_, "utility");
  switch (kind_) {
    case Kind::kZero:
      return 0.0;
    case Kind::kLeftoverValue:
      return y_.dot((b_ - v).cwiseMax(0.0));
    case Kind::kSeparableQuadratic:
      return (v.array() * (1.0 - v.array())).sum();
  }
  return 0.0;
}

double UtilityModel::conj(const Eigen::Ref<const Vec>& lambda) const {
  require_dim(lambda, m_, "utility conjugate");
  switch (kind_) {
    case Kind::kZero:
      return 0.0;
    case Kind::kLeftoverValue:
      return lambda.dot(b_);
    case Kind::kSeparableQuadratic:
      return 0.25 * (lambda.array() + 1.0).square().sum();
  }
  return 0.0;
}

Vec UtilityModel::conj_subgrad(const Eigen::Ref<const Vec>& lambda) const {
  require_dim(lambda, m_, "utility conjugate");
  switch (kind_) {
    case Kind::kZero:
      return Vec::Zero(m_);
    case Kind::kLeftoverValue:
      return b_;
    case Kind::kSeparableQuadratic:
      return 0.5 * (lambda.array() + 1.0).matrix();
  }
  return Vec::Zero(m_);
}

bool UtilityModel::contains(const Eigen::Ref<const Vec>& lambda, double tol) const {
  if (lambda.size() != m_ || !lambda.allFinite()) return false;
  switch (kind_) {
    case Kind::kZero:
      return lambda.cwiseAbs().maxCoeff() <= tol;
    case Kind::kLeftoverValue:
      return ((lambda - y_).array() >= -tol).all() && ((lambda - y_).array() <= 1.0 + tol).all();
    case Kind::kSeparableQuadratic:
      return (lambda.array().abs() <= 1.0 + tol).all();
  }
  return false;
}

Vec UtilityModel::project(const Eigen::Ref<const Vec>& z) const {
  require_dim(z, m_, "lambda projection");
  switch (kind_) {
    case Kind::kZero:
      return Vec::Zero(m_);
    case Kind::kLeftoverValue:
      return z.cwiseMax(y_).cwiseMin((y_.array() + 1.0).matrix());
    case Kind::kSeparableQuadratic:
      return z.cwiseMax(-1.0).cwiseMin(1.0);
  }
  return Vec::Zero(m_);
}

double UtilityModel::lipschitz() const {
  switch (kind_) {
    case Kind::kZero:
      return 0.0;
    case Kind::kLeftoverValue:
      return y_.norm();
    case Kind::kSeparableQuadratic:
      return 1.0;
  }
  return 0.0;
}

double UtilityModel::diameter() const {
  switch (kind_) {
    case Kind::kZero:
      return 0.0;
    case Kind::kLeftoverValue:
      return std::sqrt(static_cast<double>(m_));
    case Kind::kSeparableQuadratic:
      return 2.0 * std::sqrt(static_cast<double>(m_));
  }
  return 0.0;
}

Vec UtilityModel::best_fixed(const Eigen::Ref<const Vec>& sum_v, double count) const {
  require_dim(sum_v, m_, "best fixed lambda");
  switch (kind_) {
    case Kind::kZero:
      return Vec::Zero(m_);
    case Kind::kLeftoverValue: {
      // Linear objective lambda^T (count b - sum_v) over a box.
      const Vec coef = count * b_ - sum_v;
      return (coef.array() >= 0.0).select(y_, (y_.array() + 1.0).matrix());
    }
    case Kind::kSeparableQuadratic:
      if (count <= 0.0) return Vec::Zero(m_);
      // Separable convex quadratic: clip the stationary point.
      return project((2.0 / count) * sum_v - Vec::Ones(m_));
  }
  return Vec::Zero(m_);
}

ConsumptionSet::ConsumptionSet(Vec upper) : b_(std::move(upper)) {
  if (b_.size() < 1) throw ConfigError("consumption set: empty upper bound");
  if (!b_.allFinite()) throw ConfigError("consumption set: non-finite upper bound");
}

bool ConsumptionSet::contains(const Eigen::Ref<const Vec>& v) const {
  require_dim(v, dim(), "consumption set");
  return (v.array() <= b_.array()).all();
}

double ConsumptionSet::dist(const Eigen::Ref<const Vec>& v) const {
  require_dim(v, dim(), "consumption set");
  return (v - b_).cwiseMax(0.0).norm();
}

double ConsumptionSet::conj(const Eigen::Ref<const Vec>& theta) const {
  require_dim(theta, dim(), "distance conjugate");
  return theta.dot(b_);
}

Vec ConsumptionSet::conj_subgrad(const Eigen::Ref<const Vec>& theta) const {
  require_dim(theta, dim(), "distance conjugate");
  return b_;
}

bool ConsumptionSet::theta_contains(const Eigen::Ref<const Vec>& theta, double tol) const {
  if (theta.size() != dim() || !theta.allFinite()) return false;
  return (theta.array() >= -tol).all() && theta.norm() <= 1.0 + tol;
}

Vec ConsumptionSet::project_theta(const Eigen::Ref<const Vec>& z) const {
  require_dim(z, dim(), "theta projection");
  return project_theta_box_ball(z);
}

double ConsumptionSet::theta_diameter() const { return dim() == 1 ? 1.0 : std::sqrt(2.0); }

Vec ConsumptionSet::best_fixed(const Eigen::Ref<const Vec>& sum_v, double count) const {
  require_dim(sum_v, dim(), "best fixed theta");
  const Vec excess = (sum_v - count * b_).cwiseMax(0.0);
  const double n = excess.norm();
  return n > 0.0 ? Vec(excess / n) : Vec(Vec::Zero(dim()));
}

Vec project_theta_box_ball(const Eigen::Ref<const Vec>& z) {
  Vec out = z.cwiseMax(0.0);
  const double n = out.norm();
  // A rescaled point can land a few ulps outside the sphere; leaving those alone
  // keeps the projection exactly idempotent.
  if (n > 1.0 + 8 * std::numeric_limits<double>::epsilon()) out /= n;
  return out;
}

Vec subgrad_xi(const Eigen::Ref<const Vec>& lambda, const Eigen::Ref<const Vec>& v_t,
               const UtilityModel& utility) {
  if (!utility.contains(lambda, 1e-9)) throw ContractError("subgrad_xi: lambda outside Lambda");
  require_dim(v_t, utility.dim(), "subgrad_xi");
  return utility.conj_subgrad(lambda) - v_t;
}

Vec subgrad_phi(const Eigen::Ref<const Vec>& theta, const Eigen::Ref<const Vec>& v_t,
                const ConsumptionSet& set) {
  if (!set.theta_contains(theta, 1e-9)) throw ContractError("subgrad_phi: theta outside Theta");
  require_dim(v_t, set.dim(), "subgrad_phi");
  return set.conj_subgrad(theta) - v_t;
}

Vec omd_step(const Eigen::Ref<const Vec>& point, const Eigen::Ref<const Vec>& grad, double eta,
             const Projector& projector) {
  if (!(eta > 0.0)) throw ConfigError("omd_step: eta must be positive");
  return projector(point - eta * grad);
}

double constant_step_size(double D, double G, double T) {
  if (!(D > 0.0) || !(G > 0.0) || !(T >= 1.0)) {
    throw ConfigError("step size: need D > 0, G > 0, T >= 1");
  }
  return std::sqrt(D) / (G * std::sqrt(T));
}

DualState::DualState(const UtilityModel& utility, const ConsumptionSet& set, const Bounds& bounds,
                     double squared_gap_total)
    : utility_(&utility), set_(&set), bounds_(bounds) {
  if (utility.dim() != set.dim()) throw ConfigError("utility and consumption set dimensions differ");
  const int m = set.dim();
  omega_ = {utility.initial_point(), Vec::Zero(m)};
  // A singleton Lambda never moves, so it needs no step size.
  if (bounds.D_lambda > 0.0) {
    eta_lambda_ = constant_step_size(bounds.D_lambda, bounds.G_lambda, squared_gap_total);
  }
  eta_theta_ = constant_step_size(bounds.D_theta, bounds.G_theta, squared_gap_total);
  pending_v_ = Vec::Zero(m);
  total_v_ = Vec::Zero(m);
}

void DualState::override_step_sizes(std::optional<double> eta_lambda,
                                    std::optional<double> eta_theta) {
  if (eta_lambda) {
    if (!(*eta_lambda > 0.0)) throw ConfigError("eta_lambda must be positive");
    if (bounds_.D_lambda > 0.0) eta_lambda_ = *eta_lambda;
  }
  if (eta_theta) {
    if (!(*eta_theta > 0.0)) throw ConfigError("eta_theta must be positive");
    eta_theta_ = *eta_theta;
  }
}

void DualState::observe(const Eigen::Ref<const Vec>& v_t) {
  pending_v_ += v_t;
  ++pending_rounds_;
  total_v_ += v_t;
  ++total_rounds_;
  xi_sum_ += -v_t.dot(omega_.lambda) + utility_->conj(omega_.lambda);
  phi_sum_ += -v_t.dot(omega_.theta) + set_->conj(omega_.theta);
}

void DualState::update() {
  if (pending_rounds_ == 0) return;
  const double k = static_cast<double>(pending_rounds_);
  if (eta_lambda_ > 0.0) {
    const Vec g = k * utility_->conj_subgrad(omega_.lambda) - pending_v_;
    omega_.lambda = utility_->project(omega_.lambda - eta_lambda_ * g);
  }
  const Vec g = k * set_->conj_subgrad(omega_.theta) - pending_v_;
  omega_.theta = set_->project_theta(omega_.theta - eta_theta_ * g);
  assert(utility_->contains(omega_.lambda, 1e-9));
  assert(set_->theta_contains(omega_.theta, 1e-9));
  pending_v_.setZero();
  pending_rounds_ = 0;
}

double DualState::lambda_regret() const {
  const double n = static_cast<double>(total_rounds_);
  const Vec best = utility_->best_fixed(total_v_, n);
  return xi_sum_ - (-total_v_.dot(best) + n * utility_->conj(best));
}

double DualState::theta_regret() const {
  const double n = static_cast<double>(total_rounds_);
  const Vec best = set_->best_fixed(total_v_, n);
  return phi_sum_ - (-total_v_.dot(best) + n * set_->conj(best));
}

}  // namespace ocdm
