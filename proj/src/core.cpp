#include "ocdm/core.hpp"

namespace ocdm {

Vec flatten(const Vec& r, const Mat& V) {
  const auto d = r.size();
  if (V.rows() != d) throw ConfigError("flatten: V rows must equal length of r");
  Vec out(d * (V.cols() + 1));
  out.head(d) = r;
  for (Eigen::Index j = 0; j < V.cols(); ++j) out.segment(d * (j + 1), d) = V.col(j);
  return out;
}

Prediction unflatten(const Eigen::Ref<const Vec>& flat, int d, int m) {
  if (flat.size() != static_cast<Eigen::Index>(d) * (m + 1)) {
    throw ConfigError("unflatten: flat length must be d*(m+1)");
  }
  Prediction p{flat.head(d), Mat(d, m)};
  for (int j = 0; j < m; ++j) p.V.col(j) = flat.segment(static_cast<Eigen::Index>(d) * (j + 1), d);
  return p;
}

Vec price_vector(const DualPair& omega, double zeta) {
  if (omega.lambda.size() != omega.theta.size()) {
    throw ConfigError("dual pair: lambda and theta lengths differ");
  }
  return omega.lambda + zeta * omega.theta;
}

Vec decision_cost(const Vec& r, const Mat& V, const DualPair& omega, double zeta) {
  if (!(zeta > 0.0)) throw ConfigError("decision_cost: zeta must be positive");
  if (V.rows() != r.size()) throw ConfigError("decision_cost: V rows must equal length of r");
  if (V.cols() != omega.lambda.size() || V.cols() != omega.theta.size()) {
    throw ConfigError("decision_cost: V columns must equal dual dimension");
  }
  return r - V * price_vector(omega, zeta);
}

bool all_finite(const Eigen::Ref<const Mat>& m) { return m.allFinite(); }

void check_arrival(const Arrival& a, const Dims& dims) {
  if (a.x.size() != dims.p || a.r.size() != dims.d || a.V.rows() != dims.d ||
      a.V.cols() != dims.m) {
    throw ConfigError("arrival dimensions do not match the instance");
  }
  if (!a.x.allFinite() || !a.r.allFinite() || !a.V.allFinite()) {
    throw ConfigError("arrival holds non-finite entries");
  }
}

}  // namespace ocdm
