#pragma once

#include <cstddef>
#include <vector>

namespace grandcouple {

struct LpResult {
  enum class Status { optimal, infeasible, unbounded };
  Status status = Status::infeasible;
  double objective = 0.0;
  std::vector<double> x;
  std::size_t iterations = 0;
};

// Dense two-phase simplex for  min c^T x  s.t.  A x = b, x >= 0.
// Bland's rule throughout; throws IterationCap past `max_iterations` pivots.
LpResult solve_standard_form(const std::vector<std::vector<double>>& a, std::vector<double> b,
                             const std::vector<double>& c, double tol = 1e-9,
                             std::size_t max_iterations = 1'000'000);

}  // namespace grandcouple
