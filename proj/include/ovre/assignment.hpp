// assignment.hpp - maximum-weight one-to-one matching of predictions to
// ground truth.
//
// solve_max_assignment runs an O(n^3) shortest-augmenting-path Hungarian
// solver on the negated, zero-padded square matrix, then refines the result
// over the tight (zero-reduced-cost) subgraph so that among all optimal
// assignments the one minimizing the lexicographic sequence of
// (pred_index, gt_index) pairs is returned. Rectangular inputs are handled
// natively: exactly min(rows, cols) pairs are produced.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "ovre/embedding.hpp"
#include "ovre/errors.hpp"

namespace ovre {

struct Assignment {
  /// (pred_index, gt_index), sorted by pred_index ascending.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total_weight = 0.0;
};

namespace detail {

// Classic Jonker-Volgenant style min-cost perfect matching on an n x n cost
// callable. Fills col_to_row (1-based internally) and the dual potentials.
template <typename CostFn>
void hungarian_square(std::size_t n, CostFn cost, std::vector<int>& row_of_col,
                      std::vector<double>& u, std::vector<double>& v) {
  const double inf = std::numeric_limits<double>::infinity();
  u.assign(n + 1, 0.0);
  v.assign(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = static_cast<int>(i);
    std::size_t j0 = 0;
    minv.assign(n + 1, inf);
    used.assign(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      std::size_t j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = static_cast<int>(j0);
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = static_cast<std::size_t>(way[j0]);
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  row_of_col.assign(n, -1);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j]) row_of_col[j - 1] = p[j] - 1;
}

}  // namespace detail

/// Maximum-weight assignment of size min(rows, cols) with the deterministic
/// lexicographic tie-break. Throws NonFiniteEntry on NaN/inf input; empty
/// matrices yield an empty assignment.
inline Assignment solve_max_assignment(const SimilarityMatrix& S) {
  const std::size_t rows = S.rows(), cols = S.cols();
  Assignment result;
  if (rows == 0 || cols == 0) return result;

  double max_abs = 1.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double x = S.at(i, j);
      if (!std::isfinite(x))
        throw NonFiniteEntry("similarity matrix has a non-finite entry at (" +
                             std::to_string(i) + "," + std::to_string(j) + ")");
      max_abs = std::max(max_abs, std::abs(x));
    }

  const std::size_t n = std::max(rows, cols);
  // Min-cost formulation on the padded square: real cells carry -S, dummy
  // rows/cols carry 0, which shifts every perfect matching equally.
  auto cost = [&](std::size_t i, std::size_t j) {
    return (i < rows && j < cols) ? -S.at(i, j) : 0.0;
  };
  std::vector<int> row_of_col;
  std::vector<double> u, v;
  detail::hungarian_square(n, cost, row_of_col, u, v);

  std::vector<int> col_of_row(n, -1);
  for (std::size_t j = 0; j < n; ++j)
    if (row_of_col[j] >= 0) col_of_row[row_of_col[j]] = static_cast<int>(j);

  // Tight edges (reduced cost ~ 0) carry every optimal perfect matching.
  // Matched edges come out exactly tight from the solver; the tolerance only
  // guards against platform rounding, so it can sit far below the 1e-9
  // contract without missing real ties.
  const double tol = 1e-12 * max_abs;
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (cost(i, j) - u[i + 1] - v[j + 1] <= tol) adj[i].push_back(j);

  // Lexicographic refinement: walk real rows in order and lock each to the
  // smallest column that still extends to a perfect matching of the rest.
  // Columns >= cols are padding, so real partners are naturally preferred.
  std::vector<char> removed_row(n, 0), removed_col(n, 0), visited(n, 0);
  auto augment = [&](auto&& self, std::size_t r) -> bool {
    for (std::size_t j : adj[r]) {
      if (removed_col[j] || visited[j]) continue;
      visited[j] = 1;
      if (row_of_col[j] < 0 ||
          self(self, static_cast<std::size_t>(row_of_col[j]))) {
        row_of_col[j] = static_cast<int>(r);
        col_of_row[r] = static_cast<int>(j);
        return true;
      }
    }
    return false;
  };

  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t current = static_cast<std::size_t>(col_of_row[i]);
    std::size_t chosen = current;
    for (std::size_t j : adj[i]) {
      if (removed_col[j]) continue;
      if (j >= chosen) break;  // adj is ascending; current is the fallback
      const int displaced = row_of_col[j];
      // Tentatively steal column j for row i and re-seat the displaced row.
      row_of_col[current] = -1;
      row_of_col[j] = static_cast<int>(i);
      col_of_row[i] = static_cast<int>(j);
      removed_col[j] = 1;
      bool ok = true;
      if (displaced >= 0 && static_cast<std::size_t>(displaced) != i) {
        std::fill(visited.begin(), visited.end(), 0);
        col_of_row[displaced] = -1;
        ok = augment(augment, static_cast<std::size_t>(displaced));
        if (!ok) {
          col_of_row[displaced] = static_cast<int>(j);
        }
      }
      if (ok) {
        chosen = j;
        break;
      }
      // Revert the tentative steal.
      removed_col[j] = 0;
      row_of_col[j] = displaced;
      row_of_col[current] = static_cast<int>(i);
      col_of_row[i] = static_cast<int>(current);
    }
    removed_row[i] = 1;
    removed_col[chosen] = 1;
  }

  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t j = static_cast<std::size_t>(col_of_row[i]);
    if (j < cols) {
      result.pairs.emplace_back(i, j);
      result.total_weight += S.at(i, j);
    }
  }
  return result;
}

/// Exhaustive oracle with the same tie-break rule. Guarded against factorial
/// blow-up: min side must be <= 8 and max side <= 12.
inline Assignment brute_force_assignment(const SimilarityMatrix& S) {
  const std::size_t rows = S.rows(), cols = S.cols();
  Assignment best;
  if (rows == 0 || cols == 0) return best;
  const std::size_t need = std::min(rows, cols);
  if (need > 8 || std::max(rows, cols) > 12)
    throw InstanceTooLarge("brute_force_assignment: " + std::to_string(rows) + "x" +
                           std::to_string(cols) + " exceeds the enumeration guard");
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (!std::isfinite(S.at(i, j)))
        throw NonFiniteEntry("similarity matrix has a non-finite entry");

  std::vector<std::pair<std::size_t, std::size_t>> current;
  std::vector<char> used(cols, 0);
  bool found = false;
  // DFS emits pair sequences in lexicographic order (columns ascending, then
  // the skip branch), so keeping the first strict maximum realizes the
  // tie-break for free.
  auto dfs = [&](auto&& self, std::size_t i, double total) -> void {
    if (current.size() == need) {
      if (!found || total > best.total_weight) {
        best.pairs = current;
        best.total_weight = total;
        found = true;
      }
      return;
    }
    if (rows - i < need - current.size()) return;
    for (std::size_t j = 0; j < cols; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      current.emplace_back(i, j);
      self(self, i + 1, total + S.at(i, j));
      current.pop_back();
      used[j] = 0;
    }
    if (rows - i - 1 >= need - current.size()) self(self, i + 1, total);
  };
  dfs(dfs, 0, 0.0);
  return best;
}

}  // namespace ovre
