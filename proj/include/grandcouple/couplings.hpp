#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "grandcouple/measures.hpp"
#include "grandcouple/point.hpp"
#include "grandcouple/rng.hpp"

namespace grandcouple {

// Hard cap on every rejection loop in this module.
inline constexpr std::size_t kRejectionCap = 10'000'000;

// One realized tuple of coupled values with its cluster structure.
struct CouplingDraw {
  std::vector<Point> values;
  std::vector<int> labels;  // equal iff values are bitwise-equal
  int g = 0;                // number of distinct values

  static CouplingDraw from_values(std::vector<Point> values);
};

// Maximal coupling: x ~ p, y ~ q, Pr(x == y) = 1 - TV(p, q).
std::pair<Point, Point> maximal_pair(const Measure& p, const Measure& q, RngStream& stream);

// Second half of maximal_pair: given x ~ p already drawn, return y ~ q
// maximally coupled to it.
Point maximal_pair_given(const Measure& p, const Measure& q, const Point& x, RngStream& stream);

struct ListCouplingResult {
  Point x;
  std::vector<Point> ys;
  std::optional<std::size_t> matched_index;  // 0-based into ys
};

// Maximal list coupling of x ~ mu against ys[j] ~ nus[j]; the inclusion
// probability is 1 - E_m(mu || mean(nus)). Residual draws are independent.
ListCouplingResult list_coupling(const Measure& mu, std::span<const Measure> nus,
                                 RngStream& stream);

// Residual laws of the list coupling on a finite (or piecewise) grid:
// r_j ∝ nu_j (1 - min{1, mu / (m nubar)}), normalized. A residual with zero
// mass is returned as all zeros.
std::vector<std::vector<double>> list_residuals(std::span<const double> mu,
                                                std::span<const std::vector<double>> nus);

enum class Ordering { fixed, random };

// Greedy recursive list coupling. Supports finite measures and the
// shifted-exponential family (exact piecewise-exponential residuals).
CouplingDraw greedy_recursive_list(std::span<const Measure> marginals, Ordering ordering,
                                   RngStream& stream);

// Star coupling around `anchor` (nullopt: uniformly random anchor per draw).
CouplingDraw star_coupling(std::span<const Measure> marginals, std::optional<std::size_t> anchor,
                           RngStream& stream);

// Maximal pairs chained along a random permutation.
CouplingDraw sequence_coupling(std::span<const Measure> marginals, RngStream& stream);

using Coupler = std::function<CouplingDraw(std::span<const Measure>, RngStream&)>;

struct Estimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t n = 0;
};

Estimate estimate_expected_G(const Coupler& coupler, std::span<const Measure> marginals,
                             std::size_t n_runs, RngStream& stream);

}  // namespace grandcouple
