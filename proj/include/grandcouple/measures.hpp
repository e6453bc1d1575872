#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "grandcouple/point.hpp"
#include "grandcouple/rng.hpp"

namespace grandcouple {

enum class MeasureKind {
  finite,
  gaussian_diag,
  shifted_exponential,
  student_t_walk,
  banana,
  mixture,
};

std::string to_string(MeasureKind kind);

struct SampleSpace {
  enum class Type { discrete, continuous };
  Type type;
  // State count for discrete spaces, dimension for continuous ones.
  std::size_t size;

  bool operator==(const SampleSpace&) const = default;
};

class Measure;

struct FiniteParams {
  std::vector<double> probs;
  std::vector<double> log_probs;
};

struct GaussianDiagParams {
  std::vector<double> mean;
  std::vector<double> var;
  double log_norm;  // -0.5 * sum(log(2 pi var))
};

// Density e^{-(x - shift)} on [shift, inf).
struct ShiftedExponentialParams {
  double shift;
};

// Product of independent location-scale Student-t coordinates.
struct StudentTParams {
  std::vector<double> center;
  double scale;
  double df;
  double log_norm_1d;  // per-coordinate normalizer, scale included
};

// pi(x1, x2) ∝ exp(-x1^2 / (2 s1^2) - (x2 + b (x1^2 - s1^2))^2 / (2 s2^2))
struct BananaParams {
  double sigma1;
  double sigma2;
  double b;

  std::array<double, 2> grad_log_density(std::span<const double> x) const;
  // -Hessian of log pi, row-major 2x2.
  std::array<double, 4> neg_hessian(std::span<const double> x) const;
};

struct MixtureParams {
  std::vector<Measure> components;
  std::vector<double> weights;
  std::vector<double> log_weights;
};

// Immutable probability measure. Copies share the underlying parameters.
class Measure {
 public:
  static Measure finite(std::vector<double> probs);
  static Measure gaussian_diag(std::vector<double> mean, std::vector<double> var);
  static Measure shifted_exponential(double shift);
  static Measure student_t_walk(std::vector<double> center, double scale, double df);
  static Measure banana(double sigma1, double sigma2, double b);
  static Measure mixture(std::vector<Measure> components, std::vector<double> weights = {});

  MeasureKind kind() const;
  SampleSpace space() const;

  // Log density against counting (finite) or Lebesgue (continuous) measure;
  // -inf off support. Throws InvalidInput on a dimension mismatch.
  double log_density(std::span<const double> x) const;
  Point sample(RngStream& stream) const;

  const FiniteParams& as_finite() const;
  const GaussianDiagParams& as_gaussian() const;
  const ShiftedExponentialParams& as_shifted_exponential() const;
  const StudentTParams& as_student_t() const;
  const BananaParams& as_banana() const;
  const MixtureParams& as_mixture() const;

  struct Repr;

 private:
  explicit Measure(std::shared_ptr<const Repr> repr) : repr_(std::move(repr)) {}
  std::shared_ptr<const Repr> repr_;
};

Measure measure_from_json(const nlohmann::json& j);
nlohmann::json measure_to_json(const Measure& m);

// Finite state helper: the point representing state `i`.
inline Point state(std::size_t i) { return Point{static_cast<double>(i)}; }

double standard_normal_cdf(double z);

double tv_finite(const Measure& p, const Measure& q);
double tv_gaussian_shared_cov(std::span<const double> mean1, std::span<const double> mean2,
                              double sigma);

struct HockeyStickScheme {
  enum class Type { exact_finite, quadrature_1d, monte_carlo };
  Type type = Type::exact_finite;
  std::size_t n = 0;  // monte_carlo only

  static HockeyStickScheme exact() { return {Type::exact_finite, 0}; }
  static HockeyStickScheme quadrature() { return {Type::quadrature_1d, 0}; }
  static HockeyStickScheme monte_carlo(std::size_t n) { return {Type::monte_carlo, n}; }
};

struct HockeyStickValue {
  double value;
  double standard_error;  // zero for deterministic schemes
};

// E_m(p || q) = ∫ (p - m q)_+.  `stream` is required for monte_carlo.
HockeyStickValue hockey_stick(const Measure& p, const Measure& q, double m,
                              HockeyStickScheme scheme, RngStream* stream = nullptr);

// Uniform (or weighted) mixture of `ms`.
Measure barycenter(std::span<const Measure> ms, std::span<const double> weights = {});

// log(dp/dq)(x) with the extended convention: -inf when p vanishes,
// +inf when only q vanishes.
double log_density_ratio(const Measure& p, const Measure& q, std::span<const double> x);

// Support and quadrature hints of a one-dimensional continuous measure.
struct Support1d {
  double lo;
  double hi;
  std::vector<double> hints;  // kinks and mass locations
};
Support1d support_1d(const Measure& m);

}  // namespace grandcouple
