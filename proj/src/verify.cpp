#include "ocdm/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>

namespace ocdm {

namespace {

Vec gaussian(int n, Philox& rng, double scale = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

Vec uniform_vec(int n, Philox& rng, double lo, double hi) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

// Uniform-ish point of Theta, drawn without the projection under test.
Vec sample_theta(int m, Philox& rng) {
  Vec t = gaussian(m, rng).cwiseAbs();
  const double n = t.norm();
  if (n == 0.0) return t;
  return t * (rng.uniform() / n);
}

struct GradientSetup {
  Dims dims;
  std::shared_ptr<const FeasibleRegion> region;
  OutputLayout layout;
  bool quadratic_lambda = false;
};

GradientSetup gradient_setup(Family family) {
  GradientSetup s;
  if (family == Family::kKnapsack) {
    s.dims = {5, 10, 3};
    s.region = std::make_shared<KnapsackRegion>(10, 3);
    s.layout = {10, 3, false};
  } else {
    auto grid = std::make_shared<GridPathRegion>(4);
    const int d = grid->dim();
    s.dims = {5, d, d};
    s.region = grid;
    s.layout = {d, d, true};
    s.quadratic_lambda = true;
  }
  return s;
}

}  // namespace

OracleCheck check_oracle(const FeasibleRegion& region, int samples, Philox& rng) {
  const std::vector<Vec> vertices = region.vertices();
  if (vertices.empty()) throw ContractError("check_oracle: region offers no vertex list");
  OracleCheck out;
  for (int i = 0; i < samples; ++i) {
    const Vec c = gaussian(region.dim(), rng);
    const Vec w = region.solve(c);
    const Vec w_ref = brute_force_solve(c, vertices);
    ++out.samples;
    if (objective(c, w) != objective(c, w_ref)) ++out.mismatches;
    if (!region.is_vertex(w)) ++out.non_vertex;
  }
  return out;
}

SpoPlusCheck check_spo_plus(const FeasibleRegion& region, int samples, Philox& rng) {
  SpoPlusCheck out;
  for (int i = 0; i < samples; ++i) {
    const Vec c = gaussian(region.dim(), rng);
    // Mix of near and far predictions.
    const double spread = (i % 3 == 0) ? 0.05 : 1.0 + 2.0 * rng.uniform();
    const Vec c_hat = c + gaussian(region.dim(), rng, spread);
    ++out.samples;
    if (spo_plus_loss(c, c, region) != 0.0) ++out.nonzero_at_truth;
    const double plus = spo_plus_loss(c_hat, c, region);
    const double spo = spo_loss(c_hat, c, region);
    const double slack = 1e-12 * (1.0 + c.lpNorm<1>() + c_hat.lpNorm<1>());
    if (spo < 0.0 || plus < spo - slack) ++out.order_violations;
  }
  return out;
}

double argmax_margin(const Eigen::Ref<const Vec>& c, const std::vector<Vec>& vertices) {
  double best = -std::numeric_limits<double>::infinity();
  double second = best;
  for (const Vec& v : vertices) {
    const double val = c.dot(v);
    if (val > best) {
      second = best;
      best = val;
    } else if (val > second) {
      second = val;
    }
  }
  return best - second;
}

GradientCheck check_gradient(Family family, ModelKind model_kind, LossKind loss, int points,
                             Philox& rng, double min_margin) {
  const GradientSetup s = gradient_setup(family);
  const std::vector<Vec> vertices = s.region->vertices();
  const int m = s.layout.m;
  const int d = s.layout.d;
  GradientCheck out;
  const int max_attempts = 50 * points;
  for (int attempt = 0; out.checked < points && attempt < max_attempts; ++attempt) {
    auto model = make_model(model_kind, s.dims.p, s.layout.size());
    initialize(*model, rng);
    Mat X = gaussian(s.dims.p, rng);
    const Vec r = uniform_vec(d, rng, 0.5, 2.0);
    Mat V(d, m);
    for (int j = 0; j < m; ++j) V.col(j) = uniform_vec(d, rng, 0.0, 1.0);
    Mat Y = s.layout.target(r, V);
    DualPair omega{s.quadratic_lambda ? uniform_vec(m, rng, -1.0, 1.0) : Vec(Vec::Zero(m)),
                   sample_theta(m, rng)};
    const double zeta = rng.uniform(0.5, 2.0);
    const TrainingSet data{X, Y};

    Model::Cache cache;
    const Vec outv = model->forward_batch(X, &cache).col(0);
    if (model_kind == ModelKind::kMlp && cache.hidden_pre.cwiseAbs().minCoeff() < 1e-4) {
      ++out.skipped;
      continue;
    }
    if (loss == LossKind::kSpoPlus) {
      const Vec s_vec = price_vector(omega, zeta);
      const Mat A = s.layout.cost_map(s_vec);
      const Vec offset = s.layout.cost_offset(s_vec);
      const Vec c_hat = A * outv + offset;
      const Vec c = A * Y.col(0) + offset;
      if (argmax_margin(2.0 * c_hat - c, vertices) <= min_margin) {
        ++out.skipped;
        continue;
      }
    }

    const Vec g = empirical_loss(*model, data, s.layout, omega, zeta, loss, *s.region).grad;
    Vec fd(g.size());
    const double h = 1e-6;
    Vec& params = model->params();
    for (Eigen::Index i = 0; i < params.size(); ++i) {
      const double keep = params(i);
      params(i) = keep + h;
      const double up = empirical_loss(*model, data, s.layout, omega, zeta, loss, *s.region).loss;
      params(i) = keep - h;
      const double down = empirical_loss(*model, data, s.layout, omega, zeta, loss, *s.region).loss;
      params(i) = keep;
      fd(i) = (up - down) / (2.0 * h);
    }
    const double scale = std::max(fd.norm(), g.norm());
    const double err = scale > 1e-12 ? (fd - g).norm() / scale : 0.0;
    out.max_rel_error = std::max(out.max_rel_error, err);
    ++out.checked;
  }
  return out;
}

FenchelCheck check_utility_conjugate(const UtilityModel& utility, int samples, Philox& rng) {
  const int m = utility.dim();
  const bool leftover = utility.kind() == UtilityModel::Kind::kLeftoverValue;
  FenchelCheck out;
  for (int i = 0; i < samples; ++i) {
    const Vec lambda = utility.project(uniform_vec(m, rng, -3.0, 3.0));
    Vec v;
    if (leftover) {
      // conj_subgrad is b for this utility.
      v = utility.conj_subgrad(lambda) - gaussian(m, rng, 2.0).cwiseAbs();
    } else {
      v = gaussian(m, rng, 2.0);
    }
    const double conj = utility.conj(lambda);
    const double rhs = lambda.dot(v) + utility.value(v);
    if (conj < rhs - 1e-9 * (1.0 + std::abs(conj) + std::abs(rhs))) ++out.inequality_violations;
    const Vec v_star = utility.conj_subgrad(lambda);
    out.max_equality_gap =
        std::max(out.max_equality_gap, std::abs(conj - lambda.dot(v_star) - utility.value(v_star)));
    ++out.samples;
  }
  return out;
}

FenchelCheck check_set_conjugate(const ConsumptionSet& set, int samples, Philox& rng) {
  const int m = set.dim();
  FenchelCheck out;
  for (int i = 0; i < samples; ++i) {
    const Vec theta = sample_theta(m, rng);
    const Vec v = set.upper() + gaussian(m, rng, 2.0);
    const double conj = set.conj(theta);
    const double rhs = theta.dot(v) - set.dist(v);
    if (conj < rhs - 1e-9 * (1.0 + std::abs(conj) + std::abs(rhs))) ++out.inequality_violations;
    const Vec v_star = set.conj_subgrad(theta);
    out.max_equality_gap =
        std::max(out.max_equality_gap, std::abs(conj - theta.dot(v_star) + set.dist(v_star)));
    ++out.samples;
  }
  return out;
}

double numeric_distance_conjugate(const ConsumptionSet& set, const Eigen::Ref<const Vec>& theta) {
  if (set.dim() != 2 || theta.size() != 2) throw ConfigError("numeric conjugate needs m = 2");
  const Vec b = set.upper();
  Vec center = Vec::Zero(2);
  double half = 2.0 * b.cwiseAbs().maxCoeff() + 2.0;
  constexpr int kSteps = 100;  // 2 * kSteps + 1 points per axis
  double best = -std::numeric_limits<double>::infinity();
  for (int level = 0; level < 12; ++level) {
    Vec best_v = center;
    const double step = half / kSteps;
    for (int i = -kSteps; i <= kSteps; ++i) {
      for (int j = -kSteps; j <= kSteps; ++j) {
        Vec v(2);
        v << center(0) + i * step, center(1) + j * step;
        const double f = theta.dot(v) - set.dist(v);
        if (f > best) {
          best = f;
          best_v = v;
        }
      }
    }
    center = best_v;
    half = 4.0 * step;
  }
  return best;
}

Vec grid_nearest_theta(const Eigen::Ref<const Vec>& z, double step) {
  if (z.size() != 2) throw ConfigError("grid_nearest_theta needs m = 2");
  // Polar grid so the arc and both axes carry grid points.
  const int n_r = static_cast<int>(std::ceil(1.0 / step - 1e-9));
  const double half_pi = std::acos(0.0);
  const int n_phi = static_cast<int>(std::ceil(half_pi / step));
  Vec best = Vec::Zero(2);
  double best_d = z.squaredNorm();
  for (int j = 0; j <= n_phi; ++j) {
    const double phi = half_pi * j / n_phi;
    const double cx = std::cos(phi), cy = std::sin(phi);
    for (int i = 1; i <= n_r; ++i) {
      const double r = std::min(1.0, i * step);
      const double dx = r * cx - z(0), dy = r * cy - z(1);
      const double dist = dx * dx + dy * dy;
      if (dist < best_d) {
        best_d = dist;
        best << r * cx, r * cy;
      }
    }
  }
  return best;
}

ProjectionCheck check_theta_projection(int samples, Philox& rng, double grid_step) {
  ProjectionCheck out;
  for (int i = 0; i < samples; ++i) {
    const Vec z = gaussian(2, rng, 1.5);
    const Vec p = project_theta_box_ball(z);
    const Vec ref = grid_nearest_theta(z, grid_step);
    out.max_grid_distance = std::max(out.max_grid_distance, (p - ref).norm());
    out.max_idempotence_error =
        std::max(out.max_idempotence_error, (project_theta_box_ball(p) - p).norm());
    if ((p.array() < 0.0).any() || p.norm() > 1.0 + 1e-12) ++out.infeasible;
    ++out.samples;
  }
  return out;
}

std::vector<CheckResult> run_verify_suite(std::uint64_t seed) {
  std::vector<CheckResult> results;
  auto timed = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    r.name = name;
    try {
      auto [ok, detail] = fn();
      r.passed = ok;
      r.detail = std::move(detail);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back(std::move(r));
  };
  auto fmt = [](const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return std::string(buf);
  };

  std::uint64_t label = 0;
  auto rng_for = [&] { return Philox(derive_seed(seed, ++label), 0x5646); };

  for (int k : {1, 3, 10}) {
    timed(fmt("oracle knapsack d=10 k=%d", k), [&] {
      Philox rng = rng_for();
      const OracleCheck c = check_oracle(KnapsackRegion(10, k), 1000, rng);
      return std::pair{c.mismatches == 0 && c.non_vertex == 0,
                       fmt("%d samples, %d mismatches", c.samples, c.mismatches + c.non_vertex)};
    });
  }
  timed("oracle grid n=4", [&] {
    Philox rng = rng_for();
    const OracleCheck c = check_oracle(GridPathRegion(4), 1000, rng);
    return std::pair{c.mismatches == 0 && c.non_vertex == 0,
                     fmt("%d samples, %d mismatches", c.samples, c.mismatches + c.non_vertex)};
  });

  const KnapsackRegion knap(10, 3);
  const GridPathRegion grid(4);
  for (const FeasibleRegion* region : {static_cast<const FeasibleRegion*>(&knap),
                                       static_cast<const FeasibleRegion*>(&grid)}) {
    timed("spo+ consistency " + region->name(), [&] {
      Philox rng = rng_for();
      const SpoPlusCheck c = check_spo_plus(*region, 1000, rng);
      return std::pair{c.nonzero_at_truth == 0 && c.order_violations == 0,
                       fmt("%d samples, %d nonzero at c, %d order violations", c.samples,
                           c.nonzero_at_truth, c.order_violations)};
    });
  }

  for (Family family : {Family::kKnapsack, Family::kGridPath}) {
    for (ModelKind mk : {ModelKind::kLinear, ModelKind::kMlp}) {
      for (LossKind lk : {LossKind::kSpoPlus, LossKind::kLsCost, LossKind::kLsPred}) {
        const int points = family == Family::kKnapsack ? 20 : 5;
        const std::string name = "gradient " + std::string(to_string(family)) + " " +
                                 std::string(to_string(mk)) + " " + std::string(to_string(lk));
        timed(name, [&] {
          Philox rng = rng_for();
          const GradientCheck c = check_gradient(family, mk, lk, points, rng);
          return std::pair{c.checked >= points && c.max_rel_error <= 1e-4,
                           fmt("%d points (%d filtered), max rel err %.2e", c.checked, c.skipped,
                               c.max_rel_error)};
        });
      }
    }
  }

  Vec y2(2), b2(2);
  y2 << 0.3, 0.7;
  b2 << 0.8, 1.4;
  const std::vector<std::pair<std::string, UtilityModel>> utilities = {
      {"zero", UtilityModel::zero(2)},
      {"leftover_value", UtilityModel::leftover_value(y2, b2)},
      {"separable_quadratic", UtilityModel::separable_quadratic(2)}};
  for (const auto& [name, u] : utilities) {
    timed("fenchel-young utility " + name, [&] {
      Philox rng = rng_for();
      const FenchelCheck c = check_utility_conjugate(u, 10000, rng);
      return std::pair{c.inequality_violations == 0 && c.max_equality_gap <= 1e-8,
                       fmt("%d samples, %d violations, equality gap %.1e", c.samples,
                           c.inequality_violations, c.max_equality_gap)};
    });
  }
  const ConsumptionSet box(b2);
  timed("fenchel-young distance upper_box", [&] {
    Philox rng = rng_for();
    const FenchelCheck c = check_set_conjugate(box, 10000, rng);
    return std::pair{c.inequality_violations == 0 && c.max_equality_gap <= 1e-8,
                     fmt("%d samples, %d violations, equality gap %.1e", c.samples,
                         c.inequality_violations, c.max_equality_gap)};
  });
  timed("distance conjugate vs numeric sup", [&] {
    Philox rng = rng_for();
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const Vec theta = sample_theta(2, rng);
      worst = std::max(worst, std::abs(box.conj(theta) - numeric_distance_conjugate(box, theta)));
    }
    return std::pair{worst <= 1e-4, fmt("10 thetas, max gap %.1e", worst)};
  });

  timed("theta projection", [&] {
    Philox rng = rng_for();
    const ProjectionCheck c = check_theta_projection(20, rng, 1e-3);
    return std::pair{c.max_grid_distance <= 1e-3 && c.max_idempotence_error == 0.0 &&
                         c.infeasible == 0,
                     fmt("%d samples, grid dist %.1e, idempotence %.1e", c.samples,
                         c.max_grid_distance, c.max_idempotence_error)};
  });
  return results;
}

bool print_verify_table(std::ostream& os, const std::vector<CheckResult>& results) {
  std::size_t width = 5;
  for (const auto& r : results) width = std::max(width, r.name.size());
  bool all = true;
  char buf[512];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%-*s  %s  %7.2fs  %s\n", static_cast<int>(width),
                  r.name.c_str(), r.passed ? "PASS" : "FAIL", r.seconds, r.detail.c_str());
    os << buf;
    all = all && r.passed;
  }
  os << (all ? "all checks passed\n" : "some checks FAILED\n");
  return all;
}

}  // namespace ocdm
