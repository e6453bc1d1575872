#pragma once

#include <functional>
#include <span>

namespace grandcouple {

// Adaptive composite Simpson over [lo, hi] (either end may be infinite).
// The range is split at `breakpoints`; half-lines are mapped onto [0, 1).
// `abs_tol` is the total absolute tolerance across all pieces.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::span<const double> breakpoints = {}, double abs_tol = 1e-8);

}  // namespace grandcouple
