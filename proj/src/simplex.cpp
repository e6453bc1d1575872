#include "grandcouple/simplex.hpp"

#include <cmath>
#include <limits>

#include "grandcouple/errors.hpp"

namespace grandcouple {

namespace {

// Tableau rows 0..m-1 are constraints, last column is the right-hand side.
struct Tableau {
  std::size_t m;
  std::size_t n;  // columns excluding rhs
  std::vector<std::vector<double>> t;
  std::vector<std::size_t> basis;

  double& rhs(std::size_t r) { return t[r][n]; }

  void pivot(std::size_t row, std::size_t col) {
    const double p = t[row][col];
    for (auto& v : t[row]) v /= p;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == row) continue;
      const double f = t[r][col];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k <= n; ++k) t[r][k] -= f * t[row][k];
      t[r][col] = 0.0;
    }
    basis[row] = col;
  }

  // Minimizes cost over columns [0, active_cols). Returns false if unbounded.
  bool optimize(const std::vector<double>& cost, std::size_t active_cols, double tol,
                std::size_t& iterations, std::size_t max_iterations) {
    while (true) {
      // reduced costs, Bland: lowest index with negative reduced cost
      std::size_t enter = active_cols;
      for (std::size_t j = 0; j < active_cols; ++j) {
        double rc = cost[j];
        for (std::size_t r = 0; r < m; ++r) rc -= cost[basis[r]] * t[r][j];
        if (rc < -tol) {
          enter = j;
          break;
        }
      }
      if (enter == active_cols) return true;
      // ratio test, ties broken by lowest basis index
      std::size_t leave = m;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < m; ++r) {
        if (t[r][enter] > tol) {
          const double ratio = t[r][n] / t[r][enter];
          if (ratio < best - tol || (std::abs(ratio - best) <= tol && leave < m &&
                                     basis[r] < basis[leave])) {
            best = ratio;
            leave = r;
          }
        }
      }
      if (leave == m) return false;
      pivot(leave, enter);
      if (++iterations > max_iterations) throw IterationCap("simplex: iteration cap exceeded");
    }
  }
};

}  // namespace

LpResult solve_standard_form(const std::vector<std::vector<double>>& a, std::vector<double> b,
                             const std::vector<double>& c, double tol,
                             std::size_t max_iterations) {
  const std::size_t m = a.size();
  const std::size_t n = c.size();
  if (b.size() != m) throw InvalidInput("simplex: rhs size mismatch");
  for (const auto& row : a) {
    if (row.size() != n) throw InvalidInput("simplex: row size mismatch");
  }

  // columns: n originals, m artificials, rhs
  Tableau tab{m, n + m, std::vector<std::vector<double>>(m, std::vector<double>(n + m + 1, 0.0)),
              std::vector<std::size_t>(m)};
  for (std::size_t r = 0; r < m; ++r) {
    const double sign = b[r] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.t[r][j] = sign * a[r][j];
    tab.t[r][n + r] = 1.0;
    tab.rhs(r) = sign * b[r];
    tab.basis[r] = n + r;
  }

  LpResult out;
  std::vector<double> phase1(n + m, 0.0);
  for (std::size_t r = 0; r < m; ++r) phase1[n + r] = 1.0;
  tab.optimize(phase1, n + m, tol, out.iterations, max_iterations);
  double infeas = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (tab.basis[r] >= n) infeas += tab.rhs(r);
  }
  if (infeas > 1e3 * tol) {
    out.status = LpResult::Status::infeasible;
    return out;
  }

  // drive remaining artificials out of the basis; rows that cannot be
  // pivoted are redundant and are removed
  for (std::size_t r = 0; r < tab.m;) {
    if (tab.basis[r] < n) {
      ++r;
      continue;
    }
    std::size_t col = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(tab.t[r][j]) > tol) {
        col = j;
        break;
      }
    }
    if (col < n) {
      tab.pivot(r, col);
      ++r;
    } else {
      tab.t.erase(tab.t.begin() + static_cast<std::ptrdiff_t>(r));
      tab.basis.erase(tab.basis.begin() + static_cast<std::ptrdiff_t>(r));
      --tab.m;
    }
  }

  std::vector<double> cost(n + m, 0.0);
  for (std::size_t j = 0; j < n; ++j) cost[j] = c[j];
  if (!tab.optimize(cost, n, tol, out.iterations, max_iterations)) {
    out.status = LpResult::Status::unbounded;
    return out;
  }
  out.status = LpResult::Status::optimal;
  out.x.assign(n, 0.0);
  for (std::size_t r = 0; r < tab.m; ++r) {
    if (tab.basis[r] < n) out.x[tab.basis[r]] = tab.rhs(r);
  }
  out.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) out.objective += c[j] * out.x[j];
  return out;
}

}  // namespace grandcouple
