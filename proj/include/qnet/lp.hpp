#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "qnet/errors.hpp"

namespace qnet::lp {

enum class Relation { LessEq, GreaterEq, Equal };
enum class Status { Optimal, Infeasible, Unbounded };

template <typename T>
struct Tolerance {
  static T value() { return T(1e-9); }
};

// Maximization problem over nonnegative structural variables. Free variables
// are modeled by the caller as a difference of two nonnegative ones.
template <typename T = double>
struct Problem {
  struct Row {
    std::vector<std::pair<int, T>> coeffs;  // (variable index, coefficient)
    Relation rel = Relation::LessEq;
    T rhs = T(0);
  };

  int num_vars = 0;
  std::vector<T> objective;  // size num_vars; maximize objective . x
  std::vector<Row> rows;

  int add_var(T obj_coeff = T(0)) {
    objective.push_back(obj_coeff);
    return num_vars++;
  }
  void add_row(std::vector<std::pair<int, T>> coeffs, Relation rel, T rhs) {
    rows.push_back(Row{std::move(coeffs), rel, rhs});
  }
};

template <typename T = double>
struct Solution {
  Status status = Status::Infeasible;
  std::vector<T> x;
  T objective = T(0);
  // One multiplier per input row, in the sign convention of the maximization
  // dual: duals of <= rows are >= 0, duals of >= rows are <= 0, duals of
  // equality rows are free. Strong duality: sum(dual_i * rhs_i) = objective.
  std::vector<T> dual;
};

// Dense two-phase primal simplex with Bland's anti-cycling rule. Built for
// desk-scale systems (tens of rows, up to a few thousand columns); no effort
// is spent on sparsity or factorization.
template <typename T = double>
class Simplex {
 public:
  explicit Simplex(const Problem<T>& p) : prob_(p) {}

  Solution<T> solve() {
    const T eps = Tolerance<T>::value();
    const int m = static_cast<int>(prob_.rows.size());
    const int n = prob_.num_vars;

    // Canonicalize rows to nonnegative rhs, remembering flips so dual signs
    // can be mapped back.
    std::vector<int> flip(static_cast<std::size_t>(m), 1);
    std::vector<Relation> rel(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      rel[i] = prob_.rows[i].rel;
      if (prob_.rows[i].rhs < T(0)) {
        flip[i] = -1;
        if (rel[i] == Relation::LessEq)
          rel[i] = Relation::GreaterEq;
        else if (rel[i] == Relation::GreaterEq)
          rel[i] = Relation::LessEq;
      }
    }

    // Column layout: structural | slack/surplus | artificial.
    slack_col_.assign(static_cast<std::size_t>(m), -1);
    art_col_.assign(static_cast<std::size_t>(m), -1);
    int ncols = n;
    for (int i = 0; i < m; ++i)
      if (rel[i] != Relation::Equal) slack_col_[i] = ncols++;
    first_art_ = ncols;
    for (int i = 0; i < m; ++i)
      if (rel[i] == Relation::Equal || rel[i] == Relation::GreaterEq) art_col_[i] = ncols++;

    tableau_.assign(static_cast<std::size_t>(m),
                    std::vector<T>(static_cast<std::size_t>(ncols + 1), T(0)));
    basis_.assign(static_cast<std::size_t>(m), -1);
    for (int i = 0; i < m; ++i) {
      auto& row = tableau_[static_cast<std::size_t>(i)];
      for (const auto& [j, c] : prob_.rows[i].coeffs)
        row[static_cast<std::size_t>(j)] += T(flip[i]) * c;
      row[static_cast<std::size_t>(ncols)] = T(flip[i]) * prob_.rows[i].rhs;
      if (slack_col_[i] >= 0)
        row[static_cast<std::size_t>(slack_col_[i])] =
            (rel[i] == Relation::LessEq) ? T(1) : T(-1);
      if (art_col_[i] >= 0) {
        row[static_cast<std::size_t>(art_col_[i])] = T(1);
        basis_[i] = art_col_[i];
      } else {
        basis_[i] = slack_col_[i];
      }
    }
    ncols_ = ncols;

    // Phase 1: maximize -(sum of artificials).
    if (first_art_ < ncols) {
      std::vector<T> c1(static_cast<std::size_t>(ncols), T(0));
      for (int j = first_art_; j < ncols; ++j) c1[static_cast<std::size_t>(j)] = T(-1);
      set_costs(c1);
      if (!iterate(/*allow_artificial=*/true)) return {Status::Unbounded, {}, T(0), {}};
      if (objective_value() < -eps) return {Status::Infeasible, {}, T(0), {}};
      // Pivot any artificial still in the basis out to a structural/slack
      // column; an all-zero row is redundant and harmless to keep.
      for (int i = 0; i < m; ++i) {
        if (basis_[i] < first_art_) continue;
        for (int j = 0; j < first_art_; ++j) {
          T a = tableau_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          if (a > eps || a < -eps) {
            pivot(i, j);
            break;
          }
        }
      }
    }

    // Phase 2: original objective. Artificial columns stay in the tableau so
    // duals of equality rows can be read from them, but may not enter.
    std::vector<T> c2(static_cast<std::size_t>(ncols), T(0));
    for (int j = 0; j < n; ++j) c2[static_cast<std::size_t>(j)] = prob_.objective[j];
    set_costs(c2);
    if (!iterate(/*allow_artificial=*/false)) return {Status::Unbounded, {}, T(0), {}};

    Solution<T> sol;
    sol.status = Status::Optimal;
    sol.x.assign(static_cast<std::size_t>(n), T(0));
    for (int i = 0; i < m; ++i)
      if (basis_[i] < n)
        sol.x[static_cast<std::size_t>(basis_[i])] =
            tableau_[static_cast<std::size_t>(i)][static_cast<std::size_t>(ncols)];
    sol.objective = objective_value();

    // Duals from reduced costs of each row's own unit column. For row i with
    // internal coefficient sign s on that column, y_internal = -reduced/s;
    // undo the rhs flip afterwards.
    sol.dual.assign(static_cast<std::size_t>(m), T(0));
    for (int i = 0; i < m; ++i) {
      T y;
      if (slack_col_[i] >= 0) {
        T r = reduced_[static_cast<std::size_t>(slack_col_[i])];
        y = (rel[i] == Relation::LessEq) ? -r : r;
      } else {
        y = -reduced_[static_cast<std::size_t>(art_col_[i])];
      }
      sol.dual[static_cast<std::size_t>(i)] = T(flip[i]) * y;
    }
    return sol;
  }

 private:
  void set_costs(const std::vector<T>& c) {
    costs_ = c;
    reduced_ = c;
    obj_shift_ = T(0);
    for (int i = 0; i < static_cast<int>(basis_.size()); ++i) price_out(i);
  }

  // Subtract cost of the basic variable of row i times row i from the
  // reduced-cost row.
  void price_out(int i) {
    T cb = costs_[static_cast<std::size_t>(basis_[i])];
    if (cb == T(0)) return;
    const auto& row = tableau_[static_cast<std::size_t>(i)];
    for (int j = 0; j <= ncols_; ++j) {
      T v = cb * row[static_cast<std::size_t>(j)];
      if (j == ncols_)
        obj_shift_ += v;
      else
        reduced_[static_cast<std::size_t>(j)] -= v;
    }
  }

  T objective_value() const { return obj_shift_; }

  bool iterate(bool allow_artificial) {
    const T eps = Tolerance<T>::value();
    const int m = static_cast<int>(tableau_.size());
    const int limit = allow_artificial ? ncols_ : first_art_;
    // Bland's rule terminates in exact arithmetic; the cap guards against
    // float-roundoff cycling.
    long iterations_left = 200000L + 200L * static_cast<long>(ncols_);
    for (;;) {
      if (--iterations_left < 0)
        throw Error(ErrorCode::TooLarge, "simplex exceeded iteration cap");
      // Bland: entering column = smallest index with positive reduced cost.
      int enter = -1;
      for (int j = 0; j < limit; ++j) {
        if (reduced_[static_cast<std::size_t>(j)] > eps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;  // optimal

      // Ratio test; ties broken by smallest basic variable index (Bland).
      int leave = -1;
      T best_ratio = T(0);
      for (int i = 0; i < m; ++i) {
        T a = tableau_[static_cast<std::size_t>(i)][static_cast<std::size_t>(enter)];
        if (a <= eps) continue;
        T ratio = tableau_[static_cast<std::size_t>(i)][static_cast<std::size_t>(ncols_)] / a;
        if (leave < 0 || ratio < best_ratio ||
            (ratio == best_ratio && basis_[i] < basis_[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter);
    }
  }

  void pivot(int pr, int pc) {
    auto& prow = tableau_[static_cast<std::size_t>(pr)];
    T piv = prow[static_cast<std::size_t>(pc)];
    for (auto& v : prow) v = v / piv;
    const int m = static_cast<int>(tableau_.size());
    for (int i = 0; i < m; ++i) {
      if (i == pr) continue;
      T f = tableau_[static_cast<std::size_t>(i)][static_cast<std::size_t>(pc)];
      if (f == T(0)) continue;
      auto& row = tableau_[static_cast<std::size_t>(i)];
      for (int j = 0; j <= ncols_; ++j)
        row[static_cast<std::size_t>(j)] -= f * prow[static_cast<std::size_t>(j)];
    }
    T f = reduced_[static_cast<std::size_t>(pc)];
    if (f != T(0)) {
      for (int j = 0; j < ncols_; ++j)
        reduced_[static_cast<std::size_t>(j)] -= f * prow[static_cast<std::size_t>(j)];
      obj_shift_ += f * prow[static_cast<std::size_t>(ncols_)];
    }
    basis_[pr] = pc;
  }

  const Problem<T>& prob_;
  std::vector<std::vector<T>> tableau_;
  std::vector<T> reduced_, costs_;
  std::vector<int> basis_, slack_col_, art_col_;
  int ncols_ = 0, first_art_ = 0;
  T obj_shift_ = T(0);
};

template <typename T = double>
Solution<T> solve(const Problem<T>& p) {
  return Simplex<T>(p).solve();
}

}  // namespace qnet::lp
