#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "ocdm/oracles.hpp"
#include "ocdm/verify.hpp"

using namespace ocdm;
using testing_util::vec;

TEST_SUITE("oracles") {

TEST_CASE("knapsack picks the top-k positive entries") {
  KnapsackRegion region(4, 2);
  CHECK(region.solve(vec({3, -1, 5, 2})) == vec({1, 0, 1, 0}));
  CHECK(region.solve(vec({-1, -2, -3, -4})) == vec({0, 0, 0, 0}));
  CHECK(region.solve(vec({1, 1, 1, 0})) == vec({1, 1, 0, 0}));
}

TEST_CASE("knapsack ignores zero entries and handles k == d") {
  KnapsackRegion region(3, 3);
  CHECK(region.solve(vec({0, 2, -1})) == vec({0, 1, 0}));
  CHECK(region.solve(vec({1, 2, 3})) == vec({1, 1, 1}));
  CHECK_THROWS_AS(KnapsackRegion(0, 1), ConfigError);
  CHECK_THROWS_AS(KnapsackRegion(3, 0), ConfigError);
  CHECK_THROWS_AS(KnapsackRegion(3, 4), ConfigError);
  CHECK_THROWS_AS(region.solve(vec({1, 2})), ConfigError);
}

TEST_CASE("knapsack vertices and membership") {
  KnapsackRegion region(4, 2);
  // 1 + 4 + 6 subsets of size <= 2.
  CHECK(region.vertices().size() == 11u);
  CHECK(region.is_vertex(vec({0, 1, 0, 1})));
  CHECK_FALSE(region.is_vertex(vec({1, 1, 1, 0})));
  CHECK_FALSE(region.is_vertex(vec({0.5, 0, 0, 0})));
}

TEST_CASE("knapsack matches brute force") {
  Philox rng(5, 0);
  for (int k : {1, 2, 3, 6}) {
    KnapsackRegion region(6, k);
    const OracleCheck res = check_oracle(region, 2000, rng);
    CHECK(res.mismatches == 0);
    CHECK(res.non_vertex == 0);
  }
}

TEST_CASE("grid edge indexing") {
  GridPathRegion g(2);
  REQUIRE(g.dim() == 4);
  const auto& e = g.edges();
  CHECK((e[0].tail == 0 && e[0].head == 1 && e[0].east));
  CHECK((e[1].tail == 0 && e[1].head == 2 && !e[1].east));
  CHECK((e[2].tail == 1 && e[2].head == 3 && !e[2].east));
  CHECK((e[3].tail == 2 && e[3].head == 3 && e[3].east));
  CHECK(g.edge_index(0, true) == 0);
  CHECK(g.edge_index(2, true) == 3);
  CHECK(GridPathRegion(5).dim() == 40);
}

TEST_CASE("grid ties go east first") {
  GridPathRegion g(2);
  CHECK(g.solve(Vec::Zero(4)) == vec({1, 0, 1, 0}));
}

TEST_CASE("grid picks the rewarded path") {
  GridPathRegion g(2);
  const Vec c = vec({1, 0, 1, 0});
  const Vec w = g.solve(c);
  CHECK(w == vec({1, 0, 1, 0}));
  CHECK(objective(c, w) == 2.0);
  CHECK(g.solve(vec({0, 1, 0, 1})) == vec({0, 1, 0, 1}));
  CHECK(g.solve(vec({-5, -1, -1, -1})) == vec({0, 1, 0, 1}));
}

TEST_CASE("grid 4x4 has 20 paths and agrees with enumeration") {
  GridPathRegion g(4);
  const auto paths = g.vertices();
  CHECK(paths.size() == 20u);
  std::set<std::vector<double>> unique;
  for (const Vec& p : paths) unique.insert(std::vector<double>(p.data(), p.data() + p.size()));
  CHECK(unique.size() == 20u);
  Philox rng(6, 0);
  const OracleCheck res = check_oracle(g, 5000, rng);
  CHECK(res.mismatches == 0);
  CHECK(res.non_vertex == 0);
}

TEST_CASE("grid solutions are unit flows of length 2(n-1)") {
  Philox rng(7, 0);
  for (int n : {2, 3, 5, 8}) {
    GridPathRegion g(n);
    for (int trial = 0; trial < 50; ++trial) {
      const Vec w = g.solve(testing_util::gaussian(g.dim(), rng));
      CHECK(w.sum() == 2.0 * (n - 1));
      std::vector<double> net(n * n, 0.0);
      for (int j = 0; j < g.dim(); ++j) {
        CHECK((w(j) == 0.0 || w(j) == 1.0));
        net[g.edges()[j].tail] += w(j);
        net[g.edges()[j].head] -= w(j);
      }
      for (int v = 0; v < n * n; ++v) {
        const double expect = v == 0 ? 1.0 : (v == n * n - 1 ? -1.0 : 0.0);
        CHECK(net[v] == expect);
      }
      CHECK(g.is_vertex(w));
    }
  }
}

TEST_CASE("oracle output is invariant to positive scaling") {
  Philox rng(8, 0);
  GridPathRegion g(4);
  KnapsackRegion k(8, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec cg = testing_util::gaussian(g.dim(), rng);
    const Vec ck = testing_util::gaussian(k.dim(), rng);
    const double a = 0.01 + 10.0 * rng.uniform();
    CHECK(g.solve(cg) == g.solve(Vec(a * cg)));
    CHECK(k.solve(ck) == k.solve(Vec(a * ck)));
  }
}

TEST_CASE("brute force solve") {
  const std::vector<Vec> verts = {vec({1, 0}), vec({0, 1}), vec({1, 1})};
  CHECK(brute_force_solve(vec({1, -2}), verts) == vec({1, 0}));
  CHECK(brute_force_solve(vec({1, 1}), verts) == vec({1, 1}));
  // Tie between the first two: the first one wins.
  CHECK(brute_force_solve(vec({-1, -1}), verts) == vec({1, 0}));
  CHECK_THROWS_AS(brute_force_solve(vec({1, 1}), {}), ContractError);
}

}  // TEST_SUITE
