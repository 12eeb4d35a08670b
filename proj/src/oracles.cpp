#include "ocdm/oracles.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace ocdm {

namespace {

void require_length(const Eigen::Ref<const Vec>& c, int d, const char* who) {
  if (c.size() != d) throw ConfigError(std::string(who) + ": cost length does not match region");
}

bool is_binary(const Eigen::Ref<const Vec>& w) {
  return std::all_of(w.data(), w.data() + w.size(), [](double v) { return v == 0.0 || v == 1.0; });
}

}  // namespace

KnapsackRegion::KnapsackRegion(int d, int k) : d_(d), k_(k) {
  if (d < 1) throw ConfigError("knapsack: d must be >= 1");
  if (k < 1 || k > d) throw ConfigError("knapsack: k must satisfy 1 <= k <= d");
}

Vec KnapsackRegion::solve(const Eigen::Ref<const Vec>& c) const {
  require_length(c, d_, "knapsack_solve");
  std::vector<int> positive;
  positive.reserve(d_);
  for (int j = 0; j < d_; ++j) {
    if (c[j] > 0.0) positive.push_back(j);
  }
  const auto take = std::min<std::size_t>(positive.size(), static_cast<std::size_t>(k_));
  std::partial_sort(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(take),
                    positive.end(), [&](int a, int b) {
                      if (c[a] != c[b]) return c[a] > c[b];
                      return a < b;
                    });
  Vec w = Vec::Zero(d_);
  for (std::size_t i = 0; i < take; ++i) w[positive[i]] = 1.0;
  return w;
}

std::vector<Vec> KnapsackRegion::vertices() const {
  if (d_ > 20) throw ConfigError("knapsack: vertex enumeration limited to d <= 20");
  std::vector<Vec> out;
  for (unsigned mask = 0; mask < (1u << d_); ++mask) {
    if (std::popcount(mask) > k_) continue;
    Vec w = Vec::Zero(d_);
    for (int j = 0; j < d_; ++j) {
      if (mask & (1u << j)) w[j] = 1.0;
    }
    out.push_back(std::move(w));
  }
  return out;
}

bool KnapsackRegion::is_vertex(const Eigen::Ref<const Vec>& w) const {
  return w.size() == d_ && is_binary(w) && w.sum() <= k_;
}

GridPathRegion::GridPathRegion(int n) : n_(n) {
  if (n < 2) throw ConfigError("grid path: n must be >= 2");
  east_of_.assign(n * n, -1);
  north_of_.assign(n * n, -1);
  for (int node = 0; node < n * n; ++node) {
    const int row = node / n;
    const int col = node % n;
    if (col + 1 < n) {
      east_of_[node] = static_cast<int>(edges_.size());
      edges_.push_back({node, node + 1, true});
    }
    if (row + 1 < n) {
      north_of_[node] = static_cast<int>(edges_.size());
      edges_.push_back({node, node + n, false});
    }
  }
}

int GridPathRegion::edge_index(int tail, bool east) const {
  return east ? east_of_.at(tail) : north_of_.at(tail);
}

Vec GridPathRegion::solve(const Eigen::Ref<const Vec>& c) const {
  require_length(c, dim(), "grid_path_solve");
  const int nodes = n_ * n_;
  std::vector<double> to_go(nodes, 0.0);
  std::vector<int> choice(nodes, -1);
  // Row-major order is a topological order; sweep it backwards.
  for (int node = nodes - 2; node >= 0; --node) {
    const int e = east_of_[node];
    const int nn = north_of_[node];
    double best = 0.0;
    int pick = -1;
    for (int edge : {e, nn}) {  // east first: lower index wins ties
      if (edge < 0) continue;
      const double value = c[edge] + to_go[edges_[edge].head];
      if (pick < 0 || value > best) {
        best = value;
        pick = edge;
      }
    }
    to_go[node] = best;
    choice[node] = pick;
  }
  Vec w = Vec::Zero(dim());
  for (int node = 0; node != nodes - 1; node = edges_[choice[node]].head) w[choice[node]] = 1.0;
  return w;
}

std::vector<Vec> GridPathRegion::vertices() const {
  std::vector<Vec> out;
  Vec current = Vec::Zero(dim());
  const int sink = n_ * n_ - 1;
  auto walk = [&](auto&& self, int node) -> void {
    if (node == sink) {
      out.push_back(current);
      return;
    }
    for (int edge : {east_of_[node], north_of_[node]}) {
      if (edge < 0) continue;
      current[edge] = 1.0;
      self(self, edges_[edge].head);
      current[edge] = 0.0;
    }
  };
  walk(walk, 0);
  return out;
}

bool GridPathRegion::is_vertex(const Eigen::Ref<const Vec>& w) const {
  if (w.size() != dim() || !is_binary(w)) return false;
  if (w.sum() != 2.0 * (n_ - 1)) return false;
  // Follow the unique used out-edge from the source; every used edge must be visited.
  int node = 0;
  int visited = 0;
  const int sink = n_ * n_ - 1;
  while (node != sink) {
    const int e = east_of_[node];
    const int nn = north_of_[node];
    const bool use_e = e >= 0 && w[e] == 1.0;
    const bool use_n = nn >= 0 && w[nn] == 1.0;
    if (use_e == use_n) return false;
    node = edges_[use_e ? e : nn].head;
    ++visited;
  }
  return visited == 2 * (n_ - 1);
}

Vec brute_force_solve(const Eigen::Ref<const Vec>& c, const std::vector<Vec>& vertices) {
  if (vertices.empty()) throw ContractError("brute_force_solve: empty vertex list");
  std::size_t best = 0;
  double best_value = objective(c, vertices[0]);
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    const double value = objective(c, vertices[i]);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  return vertices[best];
}

}  // namespace ocdm
