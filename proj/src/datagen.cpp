#include "ocdm/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

namespace ocdm {

namespace {

constexpr std::uint64_t kWeightStream = 0x5745;   // "WE"
constexpr std::uint64_t kWarmupStream = 0x574D;   // "WM"

void put(std::ostream& os, double v, char sep) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
  os << buf;
}

double get(std::istream& is) {
  std::string token;
  if (!(is >> token)) throw ConfigError("unexpected end of input");
  try {
    return std::stod(token);
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + token + "'");
  }
}

// (1 + (1 + w^T x / sqrt(p))^deg) for every row of W.
Vec kernel_values(const SyntheticInstance& inst, const Eigen::Ref<const Vec>& x) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(inst.dims.p));
  Vec z = inst.W * x;
  Vec out(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    out[j] = 1.0 + std::pow(1.0 + scale * z[j], inst.degree);
  }
  return out;
}

Prediction reshape(const SyntheticInstance& inst, const Vec& flat) {
  if (inst.identity_consumption()) return {flat, Mat::Identity(inst.dims.d, inst.dims.m)};
  return unflatten(flat, inst.dims.d, inst.dims.m);
}

}  // namespace

std::string_view to_string(Family family) {
  return family == Family::kKnapsack ? "knapsack" : "grid_path";
}

void SyntheticInstance::validate() const {
  if (dims.p < 1 || dims.d < 1 || dims.m < 1) throw ConfigError("instance: dimensions must be >= 1");
  if (degree < 1) throw ConfigError("instance: degree must be >= 1");
  if (!(noise >= 0.0 && noise < 1.0)) throw ConfigError("instance: noise must lie in [0, 1)");
  if (identity_consumption() && dims.m != dims.d) {
    throw ConfigError("instance: identity consumption needs m == d");
  }
  if (W.rows() != rows() || W.cols() != dims.p) throw ConfigError("instance: W has the wrong shape");
  if (((W.array() != 0.0) && (W.array() != 1.0)).any()) {
    throw ConfigError("instance: W entries must be 0 or 1");
  }
}

Mat sample_weight_matrix(int rows, int p, Philox& rng) {
  Mat W(rows, p);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < p; ++j) W(i, j) = rng.bernoulli_half() ? 1.0 : 0.0;
  }
  return W;
}

Arrival sample_arrival(const SyntheticInstance& inst, Philox& rng) {
  Vec x(inst.dims.p);
  for (auto& v : x) v = rng.normal();
  return sample_arrival_at(inst, x, rng);
}

Arrival sample_arrival_at(const SyntheticInstance& inst, const Eigen::Ref<const Vec>& x, Philox& rng) {
  if (x.size() != inst.dims.p) throw ConfigError("sample_arrival: feature length mismatch");
  Vec flat = kernel_values(inst, x);
  // The noise draw happens even when noise == 0 so streams line up across noise levels.
  for (auto& v : flat) v *= rng.uniform(1.0 - inst.noise, 1.0 + inst.noise);
  Prediction mu = reshape(inst, flat);
  return {Vec(x), std::move(mu.r), std::move(mu.V)};
}

Prediction conditional_mean(const SyntheticInstance& inst, const Eigen::Ref<const Vec>& x) {
  if (x.size() != inst.dims.p) throw ConfigError("conditional_mean: feature length mismatch");
  return reshape(inst, kernel_values(inst, x));
}

ConditionalMean Problem::true_mean() const {
  return [data = this->data](const Vec& x) { return conditional_mean(data, x); };
}

Problem make_knapsack_instance(const KnapsackOptions& o) {
  SyntheticInstance data;
  data.family = Family::kKnapsack;
  data.dims = {o.p, o.d, o.m};
  data.degree = o.degree;
  data.noise = o.noise;
  if (o.p < 1 || o.d < 1 || o.m < 1) throw ConfigError("knapsack: dimensions must be >= 1");
  Philox weight_rng(o.seed, kWeightStream);
  data.W = sample_weight_matrix(data.rows(), o.p, weight_rng);
  data.validate();
  auto region = std::make_shared<KnapsackRegion>(o.d, o.k);

  double budget = 0.0;
  if (o.budget) {
    budget = *o.budget;
  } else {
    if (o.warmup < 1 || !(o.overdemand > 0.0)) {
      throw ConfigError("knapsack: warmup must be >= 1 and overdemand > 0");
    }
    Philox warm(o.seed, kWarmupStream);
    Vec total = Vec::Zero(o.m);
    for (int i = 0; i < o.warmup; ++i) {
      const Arrival a = sample_arrival(data, warm);
      total += a.V.transpose() * region->solve(a.r);
    }
    budget = total.mean() / o.warmup / o.overdemand;
  }
  if (!(budget > 0.0)) throw ConfigError("knapsack: budget must be positive");

  return Problem{
      .name = "knapsack",
      .data = std::move(data),
      .region = std::move(region),
      .utility = UtilityModel::zero(o.m),
      .consumption = ConsumptionSet(Vec::Constant(o.m, budget)),
      .default_mode = ConstraintMode::kHard,
      .default_horizon = 1000,
  };
}

Problem make_longest_path_instance(const LongestPathOptions& o) {
  auto region = std::make_shared<GridPathRegion>(o.n);
  const int d = region->dim();
  SyntheticInstance data;
  data.family = Family::kGridPath;
  data.dims = {o.p, d, d};
  data.degree = o.degree;
  data.noise = o.noise;
  if (o.p < 1) throw ConfigError("longest path: p must be >= 1");
  Philox weight_rng(o.seed, kWeightStream);
  data.W = sample_weight_matrix(data.rows(), o.p, weight_rng);
  data.validate();
  if (!(o.v_cap > 0.0)) throw ConfigError("longest path: v_cap must be positive");
  if (o.horizon < 1) throw ConfigError("longest path: horizon must be >= 1");
  return Problem{
      .name = "longest_path",
      .data = std::move(data),
      .region = std::move(region),
      .utility = UtilityModel::separable_quadratic(d),
      .consumption = ConsumptionSet(Vec::Constant(d, o.v_cap)),
      .default_mode = ConstraintMode::kSoft,
      .default_horizon = o.horizon,
  };
}

void write_instance(std::ostream& os, const SyntheticInstance& inst) {
  os << "ocdm-instance " << to_string(inst.family) << ' ' << inst.dims.p << ' ' << inst.dims.d
     << ' ' << inst.dims.m << ' ' << inst.degree << ' ';
  put(os, inst.noise, '\n');
  for (Eigen::Index i = 0; i < inst.W.rows(); ++i) {
    for (Eigen::Index j = 0; j < inst.W.cols(); ++j) {
      put(os, inst.W(i, j), j + 1 == inst.W.cols() ? '\n' : ' ');
    }
  }
}

SyntheticInstance read_instance(std::istream& is) {
  std::string magic, family;
  SyntheticInstance inst;
  if (!(is >> magic >> family >> inst.dims.p >> inst.dims.d >> inst.dims.m >> inst.degree) ||
      magic != "ocdm-instance") {
    throw ConfigError("read_instance: bad header");
  }
  if (family == "knapsack") {
    inst.family = Family::kKnapsack;
  } else if (family == "grid_path") {
    inst.family = Family::kGridPath;
  } else {
    throw ConfigError("read_instance: unknown family '" + family + "'");
  }
  inst.noise = get(is);
  if (inst.dims.p < 1 || inst.dims.d < 1 || inst.dims.m < 1) {
    throw ConfigError("read_instance: bad dimensions");
  }
  inst.W.resize(inst.rows(), inst.dims.p);
  for (Eigen::Index i = 0; i < inst.W.rows(); ++i) {
    for (Eigen::Index j = 0; j < inst.W.cols(); ++j) inst.W(i, j) = get(is);
  }
  inst.validate();
  return inst;
}

void write_stream(std::ostream& os, const Dims& dims, const std::vector<Arrival>& arrivals) {
  os << "ocdm-stream " << dims.p << ' ' << dims.d << ' ' << dims.m << ' ' << arrivals.size()
     << '\n';
  for (const Arrival& a : arrivals) {
    check_arrival(a, dims);
    for (double v : a.x) put(os, v, ' ');
    for (double v : a.r) put(os, v, ' ');
    const Eigen::Index n = a.V.size();
    for (Eigen::Index i = 0; i < n; ++i) put(os, a.V.data()[i], i + 1 == n ? '\n' : ' ');
  }
}

std::vector<Arrival> read_stream(std::istream& is) {
  std::string magic;
  Dims dims;
  long count = 0;
  if (!(is >> magic >> dims.p >> dims.d >> dims.m >> count) || magic != "ocdm-stream" ||
      count < 0 || dims.p < 1 || dims.d < 1 || dims.m < 1) {
    throw ConfigError("read_stream: bad header");
  }
  std::vector<Arrival> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long t = 0; t < count; ++t) {
    Arrival a{Vec(dims.p), Vec(dims.d), Mat(dims.d, dims.m)};
    for (auto& v : a.x) v = get(is);
    for (auto& v : a.r) v = get(is);
    for (Eigen::Index i = 0; i < a.V.size(); ++i) a.V.data()[i] = get(is);
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace ocdm
