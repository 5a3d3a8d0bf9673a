#pragma once

#include <limits>
#include <vector>

#include "qnet/errors.hpp"

namespace qnet {

struct MatchingResult {
  // pair_left[i] = matched column of row i, or -1. Only pairs with positive
  // weight are reported; a zero- or negative-weight assignment counts as
  // unmatched.
  std::vector<int> pair_left;
  double value = 0.0;
};

// Maximum-weight bipartite matching (not necessarily perfect) on a dense
// weight matrix, missing edges encoded as -infinity or any value <= 0.
// Kuhn-Munkres on the square padding with zeros; O(n^3), deterministic.
inline MatchingResult max_weight_matching(const std::vector<std::vector<double>>& w) {
  const int rows = static_cast<int>(w.size());
  const int cols = rows ? static_cast<int>(w[0].size()) : 0;
  MatchingResult res;
  res.pair_left.assign(static_cast<std::size_t>(rows), -1);
  if (rows == 0 || cols == 0) return res;

  const int n = std::max(rows, cols);
  const double NEG = -std::numeric_limits<double>::infinity();

  // cost[i][j] = -profit, padded square; profits clamped at 0 so the
  // algorithm never prefers a negative-weight edge over leaving both ends
  // unmatched.
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      double p = w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (p == NEG) p = 0.0;
      cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = -std::max(p, 0.0);
    }

  // Standard JV-style shortest augmenting path assignment on the cost matrix.
  const double INF = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), INF);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      int i0 = p[static_cast<std::size_t>(j0)], j1 = 0;
      double delta = INF;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                     u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }

  for (int j = 1; j <= n; ++j) {
    int i = p[static_cast<std::size_t>(j)];
    if (i >= 1 && i <= rows && j <= cols) {
      double profit = w[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
      if (profit > 0.0) {
        res.pair_left[static_cast<std::size_t>(i - 1)] = j - 1;
        res.value += profit;
      }
    }
  }
  return res;
}

// Maximum-cardinality bipartite matching on an explicit adjacency list via
// Kuhn's augmenting paths. Rows are scanned in ascending order and neighbor
// lists are assumed sorted, so the augmenting path chosen is always the
// lexicographically smallest one; this makes downstream decompositions
// deterministic.
class KuhnMatcher {
 public:
  KuhnMatcher(int rows, int cols) : adj_(static_cast<std::size_t>(rows)), cols_(cols) {}

  void add_edge(int r, int c) { adj_[static_cast<std::size_t>(r)].push_back(c); }

  // Returns pair_row (size rows, -1 if unmatched).
  std::vector<int> solve() {
    const int rows = static_cast<int>(adj_.size());
    pair_col_.assign(static_cast<std::size_t>(cols_), -1);
    std::vector<int> pair_row(static_cast<std::size_t>(rows), -1);
    for (int r = 0; r < rows; ++r) {
      visited_.assign(static_cast<std::size_t>(cols_), 0);
      try_augment(r);
    }
    for (int c = 0; c < cols_; ++c)
      if (pair_col_[static_cast<std::size_t>(c)] >= 0)
        pair_row[static_cast<std::size_t>(pair_col_[static_cast<std::size_t>(c)])] = c;
    return pair_row;
  }

 private:
  bool try_augment(int r) {
    for (int c : adj_[static_cast<std::size_t>(r)]) {
      if (visited_[static_cast<std::size_t>(c)]) continue;
      visited_[static_cast<std::size_t>(c)] = 1;
      if (pair_col_[static_cast<std::size_t>(c)] < 0 ||
          try_augment(pair_col_[static_cast<std::size_t>(c)])) {
        pair_col_[static_cast<std::size_t>(c)] = r;
        return true;
      }
    }
    return false;
  }

  std::vector<std::vector<int>> adj_;
  int cols_;
  std::vector<int> pair_col_;
  std::vector<char> visited_;
};

}  // namespace qnet
