// Decision-aware losses over the dual-parameterized cost vector
// c = r - V (lambda + zeta * theta).
#pragma once

#include <string_view>
#include <utility>

#include "ocdm/core.hpp"
#include "ocdm/oracles.hpp"

namespace ocdm {

// Training surrogates. The true SPO loss is evaluation-only and has no entry here.
enum class LossKind { kSpoPlus, kLsCost, kLsPred };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

// c^T (w*(c) - w*(c_hat)). Never negative.
double spo_loss(const Eigen::Ref<const Vec>& c_hat, const Eigen::Ref<const Vec>& c,
                const FeasibleRegion& region);

// SPO loss for a prediction against a realization at the given duals.
double spo_loss(const Prediction& mu_hat, const Arrival& mu, const DualPair& omega, double zeta,
                const FeasibleRegion& region);

// Maximization-form SPO+ surrogate:
//   max_{w in S} (2 c_hat - c)^T w - 2 c_hat^T w*(c) + c^T w*(c).
// Zero at c_hat == c and an upper bound on spo_loss.
double spo_plus_loss(const Eigen::Ref<const Vec>& c_hat, const Eigen::Ref<const Vec>& c,
                     const FeasibleRegion& region);

// Subgradient in c_hat: 2 (w*(2 c_hat - c) - w*(c)).
Vec spo_plus_subgrad_cost(const Eigen::Ref<const Vec>& c_hat, const Eigen::Ref<const Vec>& c,
                          const FeasibleRegion& region);

// Same, with w*(c) supplied by the caller (it does not depend on c_hat).
Vec spo_plus_subgrad_cost(const Eigen::Ref<const Vec>& c_hat, const Eigen::Ref<const Vec>& c,
                          const Eigen::Ref<const Vec>& w_star_c, const FeasibleRegion& region);

double ls_cost_loss(const Eigen::Ref<const Vec>& c_hat, const Eigen::Ref<const Vec>& c);
Vec ls_cost_grad(const Eigen::Ref<const Vec>& c_hat, const Eigen::Ref<const Vec>& c);

// ||r_hat - r||^2 + ||V_hat - V||_F^2; the duals play no role.
double ls_pred_loss(const Prediction& mu_hat, const Prediction& mu);
std::pair<Vec, Mat> ls_pred_grad(const Prediction& mu_hat, const Prediction& mu);

// Fault hook for the mutation canary of the verify suite: when enabled, every
// SPO+ subgradient is returned with its sign flipped.
void set_spo_plus_sign_fault(bool enabled);
// Leading factor of the SPO+ subgradient: 2, or -2 while the fault is on.
double spo_plus_subgrad_sign();

// Chain rule through c_hat = r_hat - V_hat s with s = lambda + zeta * theta:
// d r_hat = g_c, d V_hat = -g_c s^T.
std::pair<Vec, Mat> cost_grad_to_prediction_grad(const Eigen::Ref<const Vec>& g_c,
                                                 const DualPair& omega, double zeta);

}  // namespace ocdm
