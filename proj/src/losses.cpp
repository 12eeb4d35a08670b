#include "ocdm/losses.hpp"

#include <algorithm>
#include <atomic>
#include <string>

namespace ocdm {

namespace {

void require_same_length(const Eigen::Ref<const Vec>& a, const Eigen::Ref<const Vec>& b,
                         const char* who) {
  if (a.size() != b.size()) throw ConfigError(std::string(who) + ": length mismatch");
}

std::atomic<bool> g_spo_sign_fault{false};

}  // namespace

void set_spo_plus_sign_fault(bool enabled) { g_spo_sign_fault = enabled; }
double spo_plus_subgrad_sign() { return g_spo_sign_fault ? -2.0 : 2.0; }

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kSpoPlus:
      return "spo_plus";
    case LossKind::kLsCost:
      return "ls_cost";
    case LossKind::kLsPred:
      return "ls_pred";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "spo_plus" || name == "spo+") return LossKind::kSpoPlus;
  if (name == "ls_cost") return LossKind::kLsCost;
  if (name == "ls_pred") return LossKind::kLsPred;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

double spo_loss(const Eigen::Ref<const Vec>& c_hat, const Eigen::Ref<const Vec>& c,
                const FeasibleRegion& region) {
  require_same_length(c_hat, c, "spo_loss");
  const Vec w_true = region.solve(c);
  const Vec w_pred = region.solve(c_hat);
  // Both terms share the summation order so equal decisions give exactly 0.
  return std::max(0.0, c.dot(w_true) - c.dot(w_pred));
}

double spo_loss(const Prediction& mu_hat, const Arrival& mu, const DualPair& omega, double zeta,
                const FeasibleRegion& region) {
  return spo_loss(decision_cost(mu_hat, omega, zeta), decision_cost(mu, omega, zeta), region);
}

double spo_plus_loss(const Eigen::Ref<const Vec>& c_hat, const Eigen::Ref<const Vec>& c,
                     const FeasibleRegion& region) {
  require_same_length(c_hat, c, "spo_plus_loss");
  const Vec shifted = 2.0 * c_hat - c;
  const Vec w_shifted = region.solve(shifted);
  const Vec w_true = region.solve(c);
  return shifted.dot(w_shifted) - shifted.dot(w_true);
}

Vec spo_plus_subgrad_cost(const Eigen::Ref<const Vec>& c_hat, const Eigen::Ref<const Vec>& c,
                          const Eigen::Ref<const Vec>& w_star_c, const FeasibleRegion& region) {
  require_same_length(c_hat, c, "spo_plus_subgrad_cost");
  return spo_plus_subgrad_sign() * (region.solve(2.0 * c_hat - c) - w_star_c);
}

Vec spo_plus_subgrad_cost(const Eigen::Ref<const Vec>& c_hat, const Eigen::Ref<const Vec>& c,
                          const FeasibleRegion& region) {
  return spo_plus_subgrad_cost(c_hat, c, region.solve(c), region);
}

double ls_cost_loss(const Eigen::Ref<const Vec>& c_hat, const Eigen::Ref<const Vec>& c) {
  require_same_length(c_hat, c, "ls_cost_loss");
  return (c_hat - c).squaredNorm();
}

Vec ls_cost_grad(const Eigen::Ref<const Vec>& c_hat, const Eigen::Ref<const Vec>& c) {
  require_same_length(c_hat, c, "ls_cost_grad");
  return 2.0 * (c_hat - c);
}

double ls_pred_loss(const Prediction& mu_hat, const Prediction& mu) {
  if (mu_hat.r.size() != mu.r.size() || mu_hat.V.rows() != mu.V.rows() ||
      mu_hat.V.cols() != mu.V.cols()) {
    throw ConfigError("ls_pred_loss: shape mismatch");
  }
  return (mu_hat.r - mu.r).squaredNorm() + (mu_hat.V - mu.V).squaredNorm();
}

std::pair<Vec, Mat> ls_pred_grad(const Prediction& mu_hat, const Prediction& mu) {
  if (mu_hat.r.size() != mu.r.size() || mu_hat.V.rows() != mu.V.rows() ||
      mu_hat.V.cols() != mu.V.cols()) {
    throw ConfigError("ls_pred_grad: shape mismatch");
  }
  return {2.0 * (mu_hat.r - mu.r), 2.0 * (mu_hat.V - mu.V)};
}

std::pair<Vec, Mat> cost_grad_to_prediction_grad(const Eigen::Ref<const Vec>& g_c,
                                                 const DualPair& omega, double zeta) {
  const Vec s = price_vector(omega, zeta);
  return {g_c, -g_c * s.transpose()};
}

}  // namespace ocdm
