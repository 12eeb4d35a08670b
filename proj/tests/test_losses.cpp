#include <doctest.h>

#include "helpers.hpp"
#include "ocdm/losses.hpp"
#include "ocdm/verify.hpp"

using namespace ocdm;
using testing_util::vec;

namespace {

// Central differences of a scalar function of a vector.
template <class F>
Vec central_diff(F f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("spo loss single item") {
  KnapsackRegion s(1, 1);
  CHECK(spo_loss(vec({-1}), vec({1}), s) == 1.0);
  CHECK(spo_loss(vec({1}), vec({1}), s) == 0.0);
}

TEST_CASE("spo plus single item") {
  KnapsackRegion s(1, 1);
  CHECK(spo_plus_loss(vec({-1}), vec({1}), s) == 3.0);
  CHECK(spo_plus_subgrad_cost(vec({1.2}), vec({1}), s) == vec({0}));
  // w*(2*(-1) - 1) = 0, w*(1) = 1.
  CHECK(spo_plus_subgrad_cost(vec({-1}), vec({1}), s) == vec({-2}));
}

TEST_CASE("least squares examples") {
  CHECK(ls_cost_loss(vec({1, 0}), vec({0, 0})) == 1.0);
  CHECK(ls_cost_grad(vec({1, 0}), vec({0, 0})) == vec({2, 0}));
  const Prediction hat{vec({1, 2}), Mat::Zero(2, 1)};
  const Prediction truth{vec({0, 0}), Mat::Zero(2, 1)};
  CHECK(ls_pred_loss(hat, truth) == 5.0);
  const auto [gr, gV] = ls_pred_grad(hat, truth);
  CHECK(gr == vec({2, 4}));
  CHECK(gV == Mat::Zero(2, 1));
}

TEST_CASE("chain rule through the cost") {
  const auto [gr, gV] = cost_grad_to_prediction_grad(vec({1}), DualPair{vec({2}), vec({0})}, 1.0);
  CHECK(gr == vec({1}));
  REQUIRE(gV.rows() == 1);
  REQUIRE(gV.cols() == 1);
  CHECK(gV(0, 0) == -2.0);
}

TEST_CASE("chain rule agrees with differences of the composed loss") {
  Philox rng(21, 0);
  const int d = 4, m = 2;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec r = testing_util::gaussian(d, rng);
    const Mat V = testing_util::gaussian(d, m, rng);
    const Vec c = testing_util::gaussian(d, rng);
    const DualPair w{testing_util::gaussian(m, rng), testing_util::gaussian(m, rng).cwiseAbs()};
    const double zeta = 0.5 + rng.uniform();
    const Vec flat = flatten(r, V);
    auto f = [&](const Vec& z) {
      const Prediction p = unflatten(z, d, m);
      return ls_cost_loss(decision_cost(p, w, zeta), c);
    };
    const auto [gr, gV] = cost_grad_to_prediction_grad(ls_cost_grad(decision_cost(r, V, w, zeta), c), w, zeta);
    const Vec analytic = flatten(gr, gV);
    const Vec fd = central_diff(f, flat);
    CHECK((fd - analytic).norm() <= 1e-6 * std::max(1.0, analytic.norm()));
  }
}

TEST_CASE("least squares gradients match differences") {
  Philox rng(22, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec ch = testing_util::gaussian(6, rng), c = testing_util::gaussian(6, rng);
    const Vec fd = central_diff([&](const Vec& z) { return ls_cost_loss(z, c); }, ch);
    CHECK((fd - ls_cost_grad(ch, c)).norm() <= 1e-6 * ls_cost_grad(ch, c).norm());

    const Prediction truth{testing_util::gaussian(3, rng), testing_util::gaussian(3, 2, rng)};
    const Prediction hat{testing_util::gaussian(3, rng), testing_util::gaussian(3, 2, rng)};
    const auto [gr, gV] = ls_pred_grad(hat, truth);
    const Vec fd2 = central_diff(
        [&](const Vec& z) { return ls_pred_loss(unflatten(z, 3, 2), truth); }, flatten(hat.r, hat.V));
    CHECK((fd2 - flatten(gr, gV)).norm() <= 1e-6 * flatten(gr, gV).norm());
  }
}

TEST_CASE("spo plus subgradient matches differences away from ties") {
  Philox rng(23, 0);
  KnapsackRegion k(6, 2);
  GridPathRegion g(3);
  for (const FeasibleRegion* region : {static_cast<const FeasibleRegion*>(&k),
                                       static_cast<const FeasibleRegion*>(&g)}) {
    const auto verts = region->vertices();
    int checked = 0;
    while (checked < 30) {
      const Vec c = testing_util::gaussian(region->dim(), rng);
      const Vec ch = testing_util::gaussian(region->dim(), rng);
      if (argmax_margin(Vec(2 * ch - c), verts) < 1e-3) continue;
      ++checked;
      const Vec fd = central_diff([&](const Vec& z) { return spo_plus_loss(z, c, *region); }, ch);
      const Vec sg = spo_plus_subgrad_cost(ch, c, *region);
      CHECK((fd - sg).norm() <= 1e-5 * std::max(1.0, sg.norm()));
      CHECK(spo_plus_subgrad_cost(ch, c, region->solve(c), *region) == sg);
    }
  }
}

TEST_CASE("spo plus is zero at the truth and bounds spo") {
  Philox rng(24, 0);
  for (int k : {1, 3}) {
    KnapsackRegion region(8, k);
    const SpoPlusCheck res = check_spo_plus(region, 2000, rng);
    CHECK(res.nonzero_at_truth == 0);
    CHECK(res.order_violations == 0);
  }
  GridPathRegion g(4);
  const SpoPlusCheck res = check_spo_plus(g, 2000, rng);
  CHECK(res.nonzero_at_truth == 0);
  CHECK(res.order_violations == 0);
}

TEST_CASE("spo plus is convex in the prediction") {
  Philox rng(25, 0);
  GridPathRegion g(3);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec c = testing_util::gaussian(g.dim(), rng);
    const Vec a = testing_util::gaussian(g.dim(), rng), b = testing_util::gaussian(g.dim(), rng);
    const double t = rng.uniform();
    const double mid = spo_plus_loss(Vec(t * a + (1 - t) * b), c, g);
    const double chord = t * spo_plus_loss(a, c, g) + (1 - t) * spo_plus_loss(b, c, g);
    CHECK(mid <= chord + 1e-12 * (1 + std::abs(chord)));
  }
}

TEST_CASE("spo is scale invariant in the prediction and matches enumeration") {
  Philox rng(26, 0);
  GridPathRegion g(4);
  const auto paths = g.vertices();
  for (int trial = 0; trial < 200; ++trial) {
    const Vec c = testing_util::gaussian(g.dim(), rng);
    const Vec ch = testing_util::gaussian(g.dim(), rng);
    const double a = 0.1 + 5 * rng.uniform();
    CHECK(spo_loss(ch, c, g) == spo_loss(Vec(a * ch), c, g));
    const double ref = c.dot(brute_force_solve(c, paths)) - c.dot(brute_force_solve(ch, paths));
    CHECK(spo_loss(ch, c, g) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(spo_loss(ch, c, g) >= 0.0);
  }
}

TEST_CASE("prediction-level spo uses the dual-adjusted costs") {
  KnapsackRegion s(1, 1);
  Mat V(1, 1);
  V << 1;
  const Arrival truth{Vec(), vec({1}), V};
  const Prediction hat{vec({1}), V};
  // Cost 1 - 2 = -1 for both: neither is chosen, no loss.
  CHECK(spo_loss(hat, truth, DualPair{vec({2}), vec({0})}, 1.0, s) == 0.0);
  const Prediction low{vec({-1}), V};
  CHECK(spo_loss(low, truth, DualPair::zeros(1), 1.0, s) == 1.0);
}

TEST_CASE("sign fault flips the spo plus subgradient") {
  KnapsackRegion s(1, 1);
  CHECK(spo_plus_subgrad_sign() == 2.0);
  set_spo_plus_sign_fault(true);
  CHECK(spo_plus_subgrad_sign() == -2.0);
  CHECK(spo_plus_subgrad_cost(vec({-1}), vec({1}), s) == vec({2}));
  set_spo_plus_sign_fault(false);
  CHECK(spo_plus_subgrad_cost(vec({-1}), vec({1}), s) == vec({-2}));
}

TEST_CASE("loss names round trip") {
  for (LossKind k : {LossKind::kSpoPlus, LossKind::kLsCost, LossKind::kLsPred})
    CHECK(parse_loss_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_loss_kind("hinge"), ConfigError);
}

}  // TEST_SUITE
