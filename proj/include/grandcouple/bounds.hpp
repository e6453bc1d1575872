#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "grandcouple/couplings.hpp"
#include "grandcouple/measures.hpp"

namespace grandcouple {

// How the ordering in the lower bound is chosen.
struct OrderingMode {
  enum class Type { exhaustive, fixed, greedy };
  Type type = Type::greedy;
  std::vector<std::size_t> sigma;  // fixed only

  static OrderingMode exhaustive() { return {Type::exhaustive, {}}; }
  static OrderingMode greedy() { return {Type::greedy, {}}; }
  static OrderingMode fixed(std::vector<std::size_t> s) { return {Type::fixed, std::move(s)}; }
};

inline constexpr std::size_t kMaxExhaustiveC = 8;

struct LowerBound {
  double value = 1.0;
  std::vector<std::size_t> ordering;  // empty when the sup was taken exhaustively
};

// 1 + sum_k E_{C-k}(P^{sigma(k)} || mean of the suffix P^{sigma(k+1..C)}),
// maximized over sigma according to `mode`. Hockey-stick terms are exact for
// finite measures and by quadrature for one-dimensional continuous ones.
LowerBound lower_bound_G(std::span<const Measure> marginals, const OrderingMode& mode);

// (1 + sqrt(1 + 8 sum_{i<j} 2 tv_ij / (1 + tv_ij))) / 2
double upper_bound_G(const std::vector<std::vector<double>>& pairwise_tv);

// (1 - tv) / (1 + tv)
double pml_pairwise_bound(double tv);

// Pairwise total variation: exact for finite measures, closed form for
// Gaussians with a shared isotropic covariance, quadrature in one dimension.
std::vector<std::vector<double>> pairwise_tv_matrix(std::span<const Measure> marginals);

inline constexpr std::size_t kMaxLpTuples = 1'000'000;

// Exact G* for finite marginals via the linear program over joint mass.
double lp_optimal_G(std::span<const Measure> marginals);

struct BoundReport {
  double lower = 1.0;
  double upper = 1.0;
  std::optional<double> lp_exact;
  std::optional<Estimate> estimated;
  std::size_t c = 0;
  std::vector<std::size_t> ordering_used;  // empty means exhaustive sup
};

BoundReport bound_report(std::span<const Measure> marginals, const OrderingMode& mode,
                         bool with_lp = false);

}  // namespace grandcouple
