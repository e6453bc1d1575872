#include "grandcouple/stats.hpp"

#include <algorithm>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "grandcouple/errors.hpp"

namespace grandcouple {

void MeanAccumulator::merge(const MeanAccumulator& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double n = static_cast<double>(n_ + o.n_);
  const double delta = o.mean_ - mean_;
  mean_ += delta * static_cast<double>(o.n_) / n;
  m2_ += o.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
  n_ += o.n_;
}

namespace {

// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2 lambda^2}.
double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

TestResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw InvalidInput("ks_test: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d)};
}

TestResult chi_square_test(std::span<const std::size_t> counts, std::span<const double> probs,
                           double min_expected) {
  if (counts.size() != probs.size()) throw InvalidInput("chi_square_test: size mismatch");
  std::size_t n = 0;
  for (auto c : counts) n += c;
  double stat = 0.0;
  int cells = 0;
  double pooled_obs = 0.0;
  double pooled_exp = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = probs[i] * static_cast<double>(n);
    if (e < min_expected) {
      pooled_obs += static_cast<double>(counts[i]);
      pooled_exp += e;
      continue;
    }
    const double diff = static_cast<double>(counts[i]) - e;
    stat += diff * diff / e;
    ++cells;
  }
  if (pooled_exp > 0.0) {
    const double diff = pooled_obs - pooled_exp;
    stat += diff * diff / pooled_exp;
    ++cells;
  } else if (pooled_obs > 0.0) {
    return {std::numeric_limits<double>::infinity(), 0.0};
  }
  if (cells < 2) return {stat, 1.0};
  boost::math::chi_squared dist(cells - 1);
  return {stat, boost::math::cdf(boost::math::complement(dist, stat))};
}

double cdf_1d(const Measure& m, double x) {
  switch (m.kind()) {
    case MeasureKind::gaussian_diag: {
      const auto& g = m.as_gaussian();
      return standard_normal_cdf((x - g.mean[0]) / std::sqrt(g.var[0]));
    }
    case MeasureKind::shifted_exponential: {
      const double a = m.as_shifted_exponential().shift;
      return x < a ? 0.0 : -std::expm1(-(x - a));
    }
    case MeasureKind::student_t_walk: {
      const auto& t = m.as_student_t();
      boost::math::students_t dist(t.df);
      return boost::math::cdf(dist, (x - t.center[0]) / t.scale);
    }
    case MeasureKind::mixture: {
      const auto& mix = m.as_mixture();
      double s = 0.0;
      for (std::size_t k = 0; k < mix.components.size(); ++k) {
        s += mix.weights[k] * cdf_1d(mix.components[k], x);
      }
      return s;
    }
    default: throw UnsupportedKind("cdf_1d: unsupported kind " + to_string(m.kind()));
  }
}

double binomial_z(double observed_rate, double p, std::size_t n) {
  const double sd = std::sqrt(std::max(p * (1.0 - p), 1e-300) / static_cast<double>(n));
  return std::abs(observed_rate - p) / sd;
}

}  // namespace grandcouple
