// Synthetic instances: polynomial-kernel rewards and consumptions with
// multiplicative uniform noise, plus the two experiment families.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ocdm/core.hpp"
#include "ocdm/duals.hpp"
#include "ocdm/models.hpp"
#include "ocdm/oracles.hpp"
#include "ocdm/rng.hpp"

namespace ocdm {

enum class Family { kKnapsack, kGridPath };

std::string_view to_string(Family family);

// Generative model: x ~ N(0, I_p) and, for every row j of W,
//   out_j = (1 + (1 + W_j^T x / sqrt(p))^deg) * eps_j,  eps_j ~ U[1 - noise, 1 + noise].
// Knapsack: out = vec(r, V) with W of d(m+1) rows. Grid path: out = r with W of
// d rows, and V = I.
struct SyntheticInstance {
  Family family = Family::kKnapsack;
  Dims dims;
  int degree = 6;
  double noise = 0.5;
  Mat W;

  bool identity_consumption() const { return family == Family::kGridPath; }
  int rows() const { return identity_consumption() ? dims.d : dims.d * (dims.m + 1); }
  void validate() const;
};

// Fair-coin 0/1 matrix.
Mat sample_weight_matrix(int rows, int p, Philox& rng);

Arrival sample_arrival(const SyntheticInstance& inst, Philox& rng);
// Same with the features given; only the noise is drawn.
Arrival sample_arrival_at(const SyntheticInstance& inst, const Eigen::Ref<const Vec>& x, Philox& rng);
Prediction conditional_mean(const SyntheticInstance& inst, const Eigen::Ref<const Vec>& x);

// A complete problem: data model, decision region, utility, consumption set.
struct Problem {
  std::string name;
  SyntheticInstance data;
  std::shared_ptr<const FeasibleRegion> region;
  UtilityModel utility;
  ConsumptionSet consumption;
  ConstraintMode default_mode = ConstraintMode::kHard;
  int default_horizon = 1000;

  const Dims& dims() const { return data.dims; }
  OutputLayout layout() const {
    return {data.dims.d, data.dims.m, data.identity_consumption()};
  }
  Arrival sample(Philox& rng) const { return sample_arrival(data, rng); }
  ConditionalMean true_mean() const;
};

struct KnapsackOptions {
  int p = 5;
  int d = 10;
  int m = 3;
  int degree = 6;
  double noise = 0.5;
  int k = 3;
  // Per-round budget b (V = {v <= b e}). When unset it is calibrated so the
  // unconstrained greedy decision consumes `overdemand` times the budget on
  // average over `warmup` arrivals.
  std::optional<double> budget;
  double overdemand = 1.5;
  int warmup = 1000;
  std::uint64_t seed = 1;
};

struct LongestPathOptions {
  int p = 5;
  int n = 4;
  int degree = 6;
  double noise = 0.5;
  double v_cap = 0.6;
  int horizon = 1000;
  std::uint64_t seed = 1;
};

Problem make_knapsack_instance(const KnapsackOptions& options);
Problem make_longest_path_instance(const LongestPathOptions& options);

// Text formats, one value per token, doubles as %.17g:
//   ocdm-instance <knapsack|grid_path> <p> <d> <m> <degree> <noise>
//   <rows of W, p values each>
// and
//   ocdm-stream <p> <d> <m> <count>
//   <per arrival: x (p), r (d), vec(V) column-stacked (d*m)>
void write_instance(std::ostream& os, const SyntheticInstance& inst);
SyntheticInstance read_instance(std::istream& is);
void write_stream(std::ostream& os, const Dims& dims, const std::vector<Arrival>& arrivals);
std::vector<Arrival> read_stream(std::istream& is);

}  // namespace ocdm
