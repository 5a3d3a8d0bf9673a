#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "qnet/errors.hpp"
#include "qnet/matching.hpp"

namespace qnet {

// One partial matching of the input matrix together with its probability.
struct MatrixComponent {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  double weight = 0.0;
};

namespace detail {

// Northwest-corner transportation plan: nonnegative matrix with the given
// row sums and column sums (which must have equal totals). At most
// rows+cols-1 nonzeros.
inline std::vector<std::vector<double>> northwest_plan(const std::vector<double>& row_sums,
                                                       const std::vector<double>& col_sums) {
  const int r = static_cast<int>(row_sums.size());
  const int c = static_cast<int>(col_sums.size());
  std::vector<std::vector<double>> plan(static_cast<std::size_t>(r),
                                        std::vector<double>(static_cast<std::size_t>(c), 0.0));
  std::vector<double> supply = row_sums, demand = col_sums;
  int i = 0, j = 0;
  while (i < r && j < c) {
    double v = std::min(supply[static_cast<std::size_t>(i)], demand[static_cast<std::size_t>(j)]);
    if (v > 0.0) plan[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
    supply[static_cast<std::size_t>(i)] -= v;
    demand[static_cast<std::size_t>(j)] -= v;
    if (supply[static_cast<std::size_t>(i)] <= demand[static_cast<std::size_t>(j)])
      ++i;
    else
      ++j;
  }
  return plan;
}

}  // namespace detail

// Decomposes a substochastic matrix (row and column sums <= 1) into a convex
// combination of partial matchings. Classical construction: pad to a doubly
// stochastic square matrix with slack diagonals and a balancing block, then
// repeatedly extract a perfect matching of the support (lowest-index
// augmenting paths) and subtract the minimum entry along it. Components that
// restrict to the same partial matching of the input block are merged.
inline std::vector<MatrixComponent> decompose_substochastic(
    const std::vector<std::vector<double>>& P, double tol = 1e-9) {
  const int n = static_cast<int>(P.size());
  const int m = n ? static_cast<int>(P[0].size()) : 0;

  std::vector<double> row_sum(static_cast<std::size_t>(n), 0.0);
  std::vector<double> col_sum(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double v = P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (v < -tol)
        throw Error(ErrorCode::NotSubstochastic,
                    "negative entry at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      row_sum[static_cast<std::size_t>(i)] += v;
      col_sum[static_cast<std::size_t>(j)] += v;
    }
  for (int i = 0; i < n; ++i)
    if (row_sum[static_cast<std::size_t>(i)] > 1.0 + tol)
      throw Error(ErrorCode::NotSubstochastic, "row " + std::to_string(i) + " sums to " +
                                                   std::to_string(row_sum[static_cast<std::size_t>(i)]));
  for (int j = 0; j < m; ++j)
    if (col_sum[static_cast<std::size_t>(j)] > 1.0 + tol)
      throw Error(ErrorCode::NotSubstochastic, "column " + std::to_string(j) + " sums to " +
                                                   std::to_string(col_sum[static_cast<std::size_t>(j)]));

  // Padded doubly stochastic matrix:
  //   [ P              diag(1-row_sum) ]
  //   [ diag(1-col_sum)       C        ]
  // where C carries row sums col_sum and column sums row_sum.
  const int N = n + m;
  std::vector<std::vector<double>> D(static_cast<std::size_t>(N),
                                     std::vector<double>(static_cast<std::size_t>(N), 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j)
      D[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          std::max(P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], 0.0);
    D[static_cast<std::size_t>(i)][static_cast<std::size_t>(m + i)] =
        std::max(1.0 - row_sum[static_cast<std::size_t>(i)], 0.0);
  }
  for (int j = 0; j < m; ++j)
    D[static_cast<std::size_t>(n + j)][static_cast<std::size_t>(j)] =
        std::max(1.0 - col_sum[static_cast<std::size_t>(j)], 0.0);
  auto balance = detail::northwest_plan(col_sum, row_sum);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      D[static_cast<std::size_t>(n + j)][static_cast<std::size_t>(m + i)] =
          balance[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];

  constexpr double kZero = 1e-13;
  std::map<std::vector<std::pair<int, int>>, double> merged;
  double remaining = 1.0;
  int guard = 4 * N * N + 2 * N + 8;

  while (remaining > 1e-12 && guard-- > 0) {
    KuhnMatcher kuhn(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        if (D[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > kZero)
          kuhn.add_edge(i, j);
    auto match = kuhn.solve();

    bool perfect = true;
    double delta = remaining;
    for (int i = 0; i < N; ++i) {
      int j = match[static_cast<std::size_t>(i)];
      if (j < 0) {
        perfect = false;
        break;
      }
      delta = std::min(delta, D[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
    // Hall's condition guarantees a perfect matching while meaningful mass
    // remains; a failure can only be roundoff dust, which we drop.
    if (!perfect || delta <= 0.0) break;

    std::vector<std::pair<int, int>> real;
    for (int i = 0; i < n; ++i) {
      int j = match[static_cast<std::size_t>(i)];
      if (j < m) real.push_back({i, j});
    }
    merged[real] += delta;

    for (int i = 0; i < N; ++i) {
      int j = match[static_cast<std::size_t>(i)];
      double& cell = D[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      cell -= delta;
      if (cell < kZero) cell = 0.0;
    }
    remaining -= delta;
  }

  std::vector<MatrixComponent> out;
  out.reserve(merged.size());
  for (auto& [pairs, weight] : merged) out.push_back({pairs, weight});
  return out;
}

// Reconstructs sum(weight * indicator) and returns the largest absolute
// deviation from the input matrix; used by tests and the CLI report.
inline double reconstruction_error(const std::vector<std::vector<double>>& P,
                                   const std::vector<MatrixComponent>& components) {
  const int n = static_cast<int>(P.size());
  const int m = n ? static_cast<int>(P[0].size()) : 0;
  std::vector<std::vector<double>> R(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(m), 0.0));
  for (const auto& c : components)
    for (auto [i, j] : c.pairs) R[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += c.weight;
  double err = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      err = std::max(err, std::fabs(R[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                                    P[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
  return err;
}

}  // namespace qnet
