#include "grandcouple/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <variant>

#include "grandcouple/errors.hpp"
#include "grandcouple/quadrature.hpp"

namespace grandcouple {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kSumTol = 1e-12;

double log_sum_exp(std::span<const double> v) {
  double hi = kNegInf;
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

void check_probability_vector(std::span<const double> w, const char* what) {
  if (w.empty()) throw InvalidInput(std::string(what) + ": empty");
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InvalidInput(std::string(what) + ": entries must be finite and nonnegative");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > kSumTol) {
    throw InvalidInput(std::string(what) + ": must sum to 1");
  }
}

std::vector<double> logs_of(std::span<const double> w) {
  std::vector<double> out(w.size());
  std::transform(w.begin(), w.end(), out.begin(),
                 [](double x) { return x > 0.0 ? std::log(x) : kNegInf; });
  return out;
}

double student_t_log_norm(double scale, double df) {
  return std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
         0.5 * std::log(df * std::numbers::pi) - std::log(scale);
}

}  // namespace

struct Measure::Repr {
  std::variant<FiniteParams, GaussianDiagParams, ShiftedExponentialParams, StudentTParams,
               BananaParams, MixtureParams>
      params;
  SampleSpace space;
};

std::string to_string(MeasureKind kind) {
  switch (kind) {
    case MeasureKind::finite: return "finite";
    case MeasureKind::gaussian_diag: return "gaussian-diag";
    case MeasureKind::shifted_exponential: return "shifted-exponential";
    case MeasureKind::student_t_walk: return "student-t-walk";
    case MeasureKind::banana: return "banana";
    case MeasureKind::mixture: return "mixture";
  }
  return "unknown";
}

Measure Measure::finite(std::vector<double> probs) {
  check_probability_vector(probs, "finite measure");
  auto logs = logs_of(probs);
  const std::size_t n = probs.size();
  return Measure(std::make_shared<const Repr>(
      Repr{FiniteParams{std::move(probs), std::move(logs)},
           SampleSpace{SampleSpace::Type::discrete, n}}));
}

Measure Measure::gaussian_diag(std::vector<double> mean, std::vector<double> var) {
  if (mean.empty() || mean.size() != var.size()) {
    throw InvalidInput("gaussian-diag: mean and variance must be nonempty and equal length");
  }
  double log_norm = 0.0;
  for (double v : var) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("gaussian-diag: variances must be > 0");
    log_norm -= 0.5 * std::log(2.0 * std::numbers::pi * v);
  }
  const std::size_t d = mean.size();
  return Measure(std::make_shared<const Repr>(
      Repr{GaussianDiagParams{std::move(mean), std::move(var), log_norm},
           SampleSpace{SampleSpace::Type::continuous, d}}));
}

Measure Measure::shifted_exponential(double shift) {
  if (!std::isfinite(shift)) throw InvalidInput("shifted-exponential: shift must be finite");
  return Measure(std::make_shared<const Repr>(
      Repr{ShiftedExponentialParams{shift}, SampleSpace{SampleSpace::Type::continuous, 1}}));
}

Measure Measure::student_t_walk(std::vector<double> center, double scale, double df) {
  if (center.empty()) throw InvalidInput("student-t-walk: empty center");
  if (!(scale > 0.0) || !(df > 0.0)) throw InvalidInput("student-t-walk: scale and df must be > 0");
  const std::size_t d = center.size();
  return Measure(std::make_shared<const Repr>(
      Repr{StudentTParams{std::move(center), scale, df, student_t_log_norm(scale, df)},
           SampleSpace{SampleSpace::Type::continuous, d}}));
}

Measure Measure::banana(double sigma1, double sigma2, double b) {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0) || !std::isfinite(b)) {
    throw InvalidInput("banana: sigma1, sigma2 must be > 0 and b finite");
  }
  return Measure(std::make_shared<const Repr>(
      Repr{BananaParams{sigma1, sigma2, b}, SampleSpace{SampleSpace::Type::continuous, 2}}));
}

Measure Measure::mixture(std::vector<Measure> components, std::vector<double> weights) {
  if (components.empty()) throw InvalidInput("mixture: no components");
  if (weights.empty()) weights.assign(components.size(), 1.0 / components.size());
  if (weights.size() != components.size()) throw InvalidInput("mixture: weight count mismatch");
  check_probability_vector(weights, "mixture weights");
  const SampleSpace space = components.front().space();
  for (const auto& c : components) {
    if (!(c.space() == space)) throw InvalidInput("mixture: components on different spaces");
  }
  auto logs = logs_of(weights);
  return Measure(std::make_shared<const Repr>(
      Repr{MixtureParams{std::move(components), std::move(weights), std::move(logs)}, space}));
}

MeasureKind Measure::kind() const { return static_cast<MeasureKind>(repr_->params.index()); }

SampleSpace Measure::space() const { return repr_->space; }

double Measure::log_density(std::span<const double> x) const {
  const auto& sp = repr_->space;
  if (sp.type == SampleSpace::Type::discrete) {
    if (x.size() != 1) throw InvalidInput("finite measure: point must have one coordinate");
  } else if (x.size() != sp.size) {
    throw InvalidInput("log_density: dimension mismatch");
  }
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FiniteParams>) {
          const double s = x[0];
          if (!(s >= 0.0) || s != std::floor(s) || s >= static_cast<double>(p.probs.size())) {
            throw InvalidInput("finite measure: point is not a state index");
          }
          return p.log_probs[static_cast<std::size_t>(s)];
        } else if constexpr (std::is_same_v<T, GaussianDiagParams>) {
          double q = 0.0;
          for (std::size_t i = 0; i < x.size(); ++i) {
            const double z = x[i] - p.mean[i];
            q += z * z / p.var[i];
          }
          return p.log_norm - 0.5 * q;
        } else if constexpr (std::is_same_v<T, ShiftedExponentialParams>) {
          return x[0] >= p.shift ? -(x[0] - p.shift) : kNegInf;
        } else if constexpr (std::is_same_v<T, StudentTParams>) {
          double out = 0.0;
          for (std::size_t i = 0; i < x.size(); ++i) {
            const double z = (x[i] - p.center[i]) / p.scale;
            out += p.log_norm_1d - 0.5 * (p.df + 1.0) * std::log1p(z * z / p.df);
          }
          return out;
        } else if constexpr (std::is_same_v<T, BananaParams>) {
          const double s1 = p.sigma1;
          const double s2 = p.sigma2;
          const double r = x[1] + p.b * (x[0] * x[0] - s1 * s1);
          return -0.5 * x[0] * x[0] / (s1 * s1) - 0.5 * r * r / (s2 * s2) -
                 std::log(2.0 * std::numbers::pi * s1 * s2);
        } else {
          std::vector<double> terms(p.components.size());
          for (std::size_t k = 0; k < terms.size(); ++k) {
            terms[k] = p.weights[k] > 0.0 ? p.log_weights[k] + p.components[k].log_density(x)
                                          : kNegInf;
          }
          return log_sum_exp(terms);
        }
      },
      repr_->params);
}

Point Measure::sample(RngStream& stream) const {
  return std::visit(
      [&](const auto& p) -> Point {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FiniteParams>) {
          double u = stream.uniform();
          std::size_t last = 0;
          for (std::size_t i = 0; i < p.probs.size(); ++i) {
            if (p.probs[i] <= 0.0) continue;
            last = i;
            if (u < p.probs[i]) return state(i);
            u -= p.probs[i];
          }
          return state(last);
        } else if constexpr (std::is_same_v<T, GaussianDiagParams>) {
          Point out(p.mean.size());
          for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = p.mean[i] + std::sqrt(p.var[i]) * stream.normal();
          }
          return out;
        } else if constexpr (std::is_same_v<T, ShiftedExponentialParams>) {
          return Point{p.shift + stream.exponential()};
        } else if constexpr (std::is_same_v<T, StudentTParams>) {
          Point out(p.center.size());
          for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = p.center[i] + p.scale * stream.student_t(p.df);
          }
          return out;
        } else if constexpr (std::is_same_v<T, BananaParams>) {
          const double x1 = p.sigma1 * stream.normal();
          const double x2 = -p.b * (x1 * x1 - p.sigma1 * p.sigma1) + p.sigma2 * stream.normal();
          return Point{x1, x2};
        } else {
          double u = stream.uniform();
          std::size_t pick = 0;
          for (std::size_t k = 0; k < p.weights.size(); ++k) {
            if (p.weights[k] <= 0.0) continue;
            pick = k;
            if (u < p.weights[k]) break;
            u -= p.weights[k];
          }
          return p.components[pick].sample(stream);
        }
      },
      repr_->params);
}

namespace {
template <class T>
const T& get_params(const Measure::Repr& r, const char* name) {
  if (const auto* p = std::get_if<T>(&r.params)) return *p;
  throw UnsupportedKind(std::string("measure is not ") + name);
}
}  // namespace

const FiniteParams& Measure::as_finite() const { return get_params<FiniteParams>(*repr_, "finite"); }
const GaussianDiagParams& Measure::as_gaussian() const {
  return get_params<GaussianDiagParams>(*repr_, "gaussian-diag");
}
const ShiftedExponentialParams& Measure::as_shifted_exponential() const {
  return get_params<ShiftedExponentialParams>(*repr_, "shifted-exponential");
}
const StudentTParams& Measure::as_student_t() const {
  return get_params<StudentTParams>(*repr_, "student-t-walk");
}
const BananaParams& Measure::as_banana() const { return get_params<BananaParams>(*repr_, "banana"); }
const MixtureParams& Measure::as_mixture() const {
  return get_params<MixtureParams>(*repr_, "mixture");
}

std::array<double, 2> BananaParams::grad_log_density(std::span<const double> x) const {
  const double r = x[1] + b * (x[0] * x[0] - sigma1 * sigma1);
  const double s2 = sigma2 * sigma2;
  return {-x[0] / (sigma1 * sigma1) - 2.0 * b * x[0] * r / s2, -r / s2};
}

std::array<double, 4> BananaParams::neg_hessian(std::span<const double> x) const {
  const double r = x[1] + b * (x[0] * x[0] - sigma1 * sigma1);
  const double s2 = sigma2 * sigma2;
  const double h11 = 1.0 / (sigma1 * sigma1) + (4.0 * b * b * x[0] * x[0] + 2.0 * b * r) / s2;
  const double h12 = 2.0 * b * x[0] / s2;
  return {h11, h12, h12, 1.0 / s2};
}

// JSON

Measure measure_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "finite") return Measure::finite(j.at("probs").get<std::vector<double>>());
    if (kind == "gaussian-diag") {
      return Measure::gaussian_diag(j.at("mean").get<std::vector<double>>(),
                                    j.at("var").get<std::vector<double>>());
    }
    if (kind == "shifted-exponential") return Measure::shifted_exponential(j.at("shift").get<double>());
    if (kind == "student-t-walk") {
      return Measure::student_t_walk(j.at("center").get<std::vector<double>>(),
                                     j.value("scale", 1.0), j.value("df", 2.0));
    }
    if (kind == "banana") {
      return Measure::banana(j.value("sigma1", 2.0), j.value("sigma2", 1.0), j.value("b", 0.05));
    }
    if (kind == "mixture") {
      std::vector<Measure> comps;
      for (const auto& c : j.at("components")) comps.push_back(measure_from_json(c));
      std::vector<double> w;
      if (j.contains("weights")) w = j.at("weights").get<std::vector<double>>();
      return Measure::mixture(std::move(comps), std::move(w));
    }
    throw InvalidInput("unknown measure kind: " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("measure json: ") + e.what());
  }
}

nlohmann::json measure_to_json(const Measure& m) {
  nlohmann::json j;
  j["kind"] = to_string(m.kind());
  switch (m.kind()) {
    case MeasureKind::finite: j["probs"] = m.as_finite().probs; break;
    case MeasureKind::gaussian_diag:
      j["mean"] = m.as_gaussian().mean;
      j["var"] = m.as_gaussian().var;
      break;
    case MeasureKind::shifted_exponential: j["shift"] = m.as_shifted_exponential().shift; break;
    case MeasureKind::student_t_walk:
      j["center"] = m.as_student_t().center;
      j["scale"] = m.as_student_t().scale;
      j["df"] = m.as_student_t().df;
      break;
    case MeasureKind::banana:
      j["sigma1"] = m.as_banana().sigma1;
      j["sigma2"] = m.as_banana().sigma2;
      j["b"] = m.as_banana().b;
      break;
    case MeasureKind::mixture: {
      auto comps = nlohmann::json::array();
      for (const auto& c : m.as_mixture().components) comps.push_back(measure_to_json(c));
      j["components"] = comps;
      j["weights"] = m.as_mixture().weights;
      break;
    }
  }
  return j;
}

// Divergences

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double tv_finite(const Measure& p, const Measure& q) {
  const auto& a = p.as_finite().probs;
  const auto& b = q.as_finite().probs;
  if (a.size() != b.size()) throw InvalidInput("tv_finite: state count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

double tv_gaussian_shared_cov(std::span<const double> mean1, std::span<const double> mean2,
                              double sigma) {
  if (!(sigma > 0.0)) throw InvalidInput("tv_gaussian_shared_cov: sigma must be > 0");
  if (mean1.size() != mean2.size()) throw InvalidInput("tv_gaussian_shared_cov: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < mean1.size(); ++i) d2 += (mean1[i] - mean2[i]) * (mean1[i] - mean2[i]);
  return 2.0 * standard_normal_cdf(std::sqrt(d2) / (2.0 * sigma)) - 1.0;
}

double log_density_ratio(const Measure& p, const Measure& q, std::span<const double> x) {
  const double lp = p.log_density(x);
  if (lp == kNegInf) return kNegInf;
  const double lq = q.log_density(x);
  if (lq == kNegInf) return std::numeric_limits<double>::infinity();
  return lp - lq;
}

Support1d support_1d(const Measure& m) {
  if (m.space().type != SampleSpace::Type::continuous || m.space().size != 1) {
    throw UnsupportedKind("support_1d: measure is not one-dimensional continuous");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (m.kind()) {
    case MeasureKind::gaussian_diag: {
      const double mu = m.as_gaussian().mean[0];
      const double sd = std::sqrt(m.as_gaussian().var[0]);
      Support1d s{-inf, inf, {}};
      for (double k : {-16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0}) {
        s.hints.push_back(mu + k * sd);
      }
      return s;
    }
    case MeasureKind::shifted_exponential: {
      const double a = m.as_shifted_exponential().shift;
      return Support1d{a, inf, {a + 1.0, a + 4.0, a + 16.0}};
    }
    case MeasureKind::student_t_walk: {
      const double c = m.as_student_t().center[0];
      const double s = m.as_student_t().scale;
      Support1d out{-inf, inf, {}};
      for (double k : {-64.0, -16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0, 64.0}) {
        out.hints.push_back(c + k * s);
      }
      return out;
    }
    case MeasureKind::mixture: {
      Support1d out{inf, -inf, {}};
      for (const auto& c : m.as_mixture().components) {
        auto s = support_1d(c);
        out.lo = std::min(out.lo, s.lo);
        out.hi = std::max(out.hi, s.hi);
        out.hints.insert(out.hints.end(), s.hints.begin(), s.hints.end());
        if (std::isfinite(s.lo)) out.hints.push_back(s.lo);
        if (std::isfinite(s.hi)) out.hints.push_back(s.hi);
      }
      return out;
    }
    default: throw UnsupportedKind("support_1d: unsupported kind " + to_string(m.kind()));
  }
}

HockeyStickValue hockey_stick(const Measure& p, const Measure& q, double m,
                              HockeyStickScheme scheme, RngStream* stream) {
  if (!(m >= 1.0)) throw InvalidInput("hockey_stick: m must be >= 1");
  if (!(p.space() == q.space())) throw InvalidInput("hockey_stick: measures on different spaces");
  switch (scheme.type) {
    case HockeyStickScheme::Type::exact_finite: {
      if (p.kind() != MeasureKind::finite || q.kind() != MeasureKind::finite) {
        throw UnsupportedKind("hockey_stick exact: finite measures required");
      }
      const auto& a = p.as_finite().probs;
      const auto& b = q.as_finite().probs;
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += std::max(a[i] - m * b[i], 0.0);
      return {s, 0.0};
    }
    case HockeyStickScheme::Type::quadrature_1d: {
      const auto sp = support_1d(p);
      auto sq = support_1d(q);
      std::vector<double> cuts = sp.hints;
      cuts.insert(cuts.end(), sq.hints.begin(), sq.hints.end());
      for (double b : {sp.lo, sp.hi, sq.lo, sq.hi}) {
        if (std::isfinite(b)) cuts.push_back(b);
      }
      // (p - m q)_+ vanishes off supp(p)
      auto f = [&](double x) {
        const double xs[1] = {x};
        const double lp = p.log_density(xs);
        if (lp == kNegInf) return 0.0;
        const double lq = q.log_density(xs);
        return std::max(std::exp(lp) - m * std::exp(lq), 0.0);
      };
      return {integrate(f, sp.lo, sp.hi, cuts, 1e-8), 0.0};
    }
    case HockeyStickScheme::Type::monte_carlo: {
      if (stream == nullptr) throw InvalidInput("hockey_stick monte_carlo: stream required");
      if (scheme.n < 2) throw InvalidInput("hockey_stick monte_carlo: n must be >= 2");
      double sum = 0.0;
      double sum_sq = 0.0;
      for (std::size_t i = 0; i < scheme.n; ++i) {
        const Point x = p.sample(*stream);
        const double lr = log_density_ratio(q, p, x);
        const double v = std::max(1.0 - m * std::exp(lr), 0.0);
        sum += v;
        sum_sq += v * v;
      }
      const double n = static_cast<double>(scheme.n);
      const double mean = sum / n;
      const double var = std::max(sum_sq / n - mean * mean, 0.0) * n / (n - 1.0);
      return {mean, std::sqrt(var / n)};
    }
  }
  return {0.0, 0.0};
}

Measure barycenter(std::span<const Measure> ms, std::span<const double> weights) {
  if (ms.empty()) throw InvalidInput("barycenter: empty list");
  std::vector<Measure> comps(ms.begin(), ms.end());
  std::vector<double> w(weights.begin(), weights.end());
  return Measure::mixture(std::move(comps), std::move(w));
}

}  // namespace grandcouple
