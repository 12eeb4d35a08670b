// Linear maximization oracles w*(c) in argmax_{w in S} c^T w.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ocdm/core.hpp"

namespace ocdm {

// Decision region S together with a deterministic vertex-returning argmax.
class FeasibleRegion {
 public:
  virtual ~FeasibleRegion() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;

  // Returns a maximizing vertex of c^T w over S. Ties go to the lower index.
  virtual Vec solve(const Eigen::Ref<const Vec>& c) const = 0;

  // All vertices of S, or an empty list when enumeration is not offered.
  virtual std::vector<Vec> vertices() const { return {}; }

  // True when w is one of the vertices of S.
  virtual bool is_vertex(const Eigen::Ref<const Vec>& w) const = 0;
};

// S = { w : sum_j w_j <= k, 0 <= w <= e }.
class KnapsackRegion final : public FeasibleRegion {
 public:
  KnapsackRegion(int d, int k);

  int dim() const override { return d_; }
  int cap() const { return k_; }
  std::string name() const override { return "knapsack"; }
  Vec solve(const Eigen::Ref<const Vec>& c) const override;
  std::vector<Vec> vertices() const override;
  bool is_vertex(const Eigen::Ref<const Vec>& w) const override;

 private:
  int d_;
  int k_;
};

// Monotone (east/north) paths on an n x n grid from the southwest corner to
// the northeast corner.
//
// Nodes are indexed row-major from the south-west: node(row, col) = row * n + col,
// row counting north and col counting east. Edges are sorted by tail node index
// and, for a common tail, east before north. There are 2n(n-1) edges.
class GridPathRegion final : public FeasibleRegion {
 public:
  struct Edge {
    int tail;
    int head;
    bool east;
  };

  explicit GridPathRegion(int n);

  int dim() const override { return static_cast<int>(edges_.size()); }
  int side() const { return n_; }
  std::string name() const override { return "grid_path"; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Dynamic program over the anti-diagonal order. At each node the out-edge with
  // the larger (edge cost + value-to-go) wins; ties prefer the lower edge index
  // (east before north).
  Vec solve(const Eigen::Ref<const Vec>& c) const override;
  std::vector<Vec> vertices() const override;
  bool is_vertex(const Eigen::Ref<const Vec>& w) const override;

  int edge_index(int tail, bool east) const;

 private:
  int n_;
  std::vector<Edge> edges_;
  std::vector<int> east_of_;   // node -> edge index or -1
  std::vector<int> north_of_;  // node -> edge index or -1
};

// argmax of c^T v over an explicit vertex list; first index wins ties.
Vec brute_force_solve(const Eigen::Ref<const Vec>& c, const std::vector<Vec>& vertices);

inline double objective(const Eigen::Ref<const Vec>& c, const Eigen::Ref<const Vec>& w) {
  return c.dot(w);
}

}  // namespace ocdm
