#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "grandcouple/couplings.hpp"
#include "grandcouple/measures.hpp"
#include "grandcouple/point.hpp"
#include "grandcouple/rng.hpp"

namespace grandcouple {

struct Omega {
  double value = 0.0;
  bool vacuous = false;  // infimum of pi0 / pi is zero
};

// sup{a : pi0 >= a pi}. Closed form for two diagonal Gaussians; a Gaussian
// pi0 against a Student-t target is always vacuous.
Omega omega_gaussian(const Measure& pi0, const Measure& pi);

// 1 - (1 - omega)^C
double johnson_denominator(double omega, std::size_t c);

// tail / (1 - (1 - omega)^C); nullopt when omega is zero (vacuous bound).
std::optional<std::vector<double>> johnson_bound(std::span<const double> tail, double omega,
                                                 std::size_t c);

// Monte Carlo mean of C pi / (C pi0 + pi) under X ~ pi0.
Estimate estimate_alpha_C(const Measure& pi0, const Measure& pi, std::size_t c, std::size_t n,
                          RngStream& stream);

// 1 - alpha + tail
std::vector<double> list_level_bound(std::span<const double> tail, double alpha);

// Pr(tau > t) for t = 0..horizon. Censored replicates count as never met.
std::vector<double> tail_curve(std::span<const std::optional<std::size_t>> taus,
                               std::size_t horizon);

struct BoundCurve {
  std::vector<std::size_t> t;
  std::vector<double> tail;
  std::optional<std::vector<double>> johnson;
  std::optional<std::vector<double>> listlevel;
  std::vector<double> combined;  // pointwise min of 1 and the series present
};

BoundCurve bound_curve(std::span<const std::optional<std::size_t>> taus, std::size_t horizon,
                       const Omega& omega, std::size_t c, std::optional<double> alpha);

// Squared Hellinger distance between diagonal Gaussians.
double hellinger_sq_gaussian(const Measure& p, const Measure& q);

// Squared Hellinger distance of normalized weights to uniform.
double weight_hellinger_to_uniform(std::span<const double> weights);

// x' = rho x + sqrt(1 - rho^2) z
Point ar_kernel_step(const Point& x, double rho, RngStream& stream);
// N(rho x, (1 - rho^2) I) as a measure, for coupling.
Measure ar_kernel_measure(const Point& x, double rho);
// N(rho^t 10, (1 + 4 rho^(2t)) I)
Measure ar_marginal(std::size_t t, double rho, std::size_t d);
// N(10, 5 I)
Measure ar_initial(std::size_t d);

// Meeting time of C AR(1) chains started from ar_initial and coupled each
// step by `coupler` on their kernel measures. nullopt when censored.
std::optional<std::size_t> ar_meeting_time(std::size_t c, double rho, std::size_t d,
                                           const Coupler& coupler, std::size_t max_iter,
                                           RngStream& stream);

class WeightedEnsemble {
 public:
  // Consecutive groups of size m; N must be divisible by m.
  WeightedEnsemble(std::vector<Point> states, std::vector<double> weights, std::size_t m);

  std::vector<Point> states;
  std::vector<double> weights;
  std::vector<std::vector<std::size_t>> groups;

  std::size_t size() const { return states.size(); }
  double total_weight() const;
};

struct HarmonizeInfo {
  std::size_t coalesced_groups = 0;
  bool reshuffled = false;
  std::size_t max_cluster = 1;
};

// One step of groupwise grand coupling with weight averaging inside
// coalesced clusters; groups with a coalescence are reshuffled among
// themselves when there are at least two of them.
HarmonizeInfo harmonize_step(WeightedEnsemble& we,
                             const std::function<Measure(const Point&)>& kernel,
                             const Coupler& coupler, RngStream& stream);

}  // namespace grandcouple
