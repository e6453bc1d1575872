#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "grandcouple/measures.hpp"
#include "grandcouple/point.hpp"
#include "grandcouple/rng.hpp"

namespace grandcouple {

enum class ProposalKind { rw_gaussian, rw_student_t, rmala };

std::string to_string(ProposalKind k);
ProposalKind proposal_kind_from_string(const std::string& s);

struct ProposalKernel {
  ProposalKind kind = ProposalKind::rw_gaussian;
  double scale = 1.0;
  double df = 2.0;  // rw-student-t only; the step is multivariate t, not a product

  static double default_rw_scale(std::size_t d) { return 2.4 / std::sqrt(static_cast<double>(d)); }
  static ProposalKernel rw_gaussian(double scale);
  static ProposalKernel rw_student_t(double scale, double df = 2.0);
  static ProposalKernel rmala(double scale = 0.4);

  bool symmetric() const { return kind != ProposalKind::rmala; }
};

inline constexpr double kMetricFloor = 1e-3;

struct RmalaGeometry {
  Eigen::VectorXd mean;  // x + (s^2/2) G^-1 grad log pi
  Eigen::MatrixXd sqrt_cov;   // A with A A^T = s^2 G^-1
  Eigen::MatrixXd sqrt_prec;  // B with B^T B = G / s^2
  double log_norm = 0.0;      // -d/2 log(2 pi) - 1/2 log det(s^2 G^-1)
};

// Regularized metric: eigenvalues of -Hessian replaced by max(|l|, floor).
Eigen::MatrixXd regularized_metric(const Measure& target, std::span<const double> x);

// Mean and factors of the RMALA proposal at x.
RmalaGeometry rmala_metric(const Measure& target, std::span<const double> x, double scale);

// A chain state with everything the proposal needs precomputed.
struct Anchor {
  Point x;
  double log_pi = 0.0;
  std::optional<RmalaGeometry> geom;
};

Anchor make_anchor(const Measure& target, const ProposalKernel& kernel, Point x);

// log k(y | from)
double proposal_log_density(const ProposalKernel& kernel, const Anchor& from,
                            std::span<const double> y);
Point propose(const ProposalKernel& kernel, const Anchor& from, RngStream& stream);

// log alpha(x, y); -inf when pi(y) = 0. Throws InvalidInput when pi(x) = 0.
// `log_k_xy` is log k(y|x) when already known.
double log_accept_prob(const ProposalKernel& kernel, const Anchor& x, const Anchor& y,
                       std::optional<double> log_k_xy = std::nullopt);

double accept_prob(std::span<const double> x, std::span<const double> y, const Measure& target,
                   const ProposalKernel& kernel);

// log(1 - exp(a)) for a <= 0.
double log1m_exp(double a);

struct LiftedState {
  Anchor anchor;
  const Measure* target;
  ProposalKernel proposal;
};

LiftedState make_lifted(const Measure& target, const ProposalKernel& kernel, Point x);

// log k(y|x) + log alpha(x,y) for u = 1, log k(y|x) + log(1 - alpha) for u = 0.
double lifted_log_density(const LiftedState& s, std::span<const double> y, bool u);

// Exact select: y when u, x otherwise.
inline const Point& apply_update(const Point& x, const Point& y, bool u) { return u ? y : x; }

// One MH transition: propose, then accept when a uniform falls below alpha.
Point mh_step(const LiftedState& s, RngStream& stream);

}  // namespace grandcouple
