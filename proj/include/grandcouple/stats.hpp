#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "grandcouple/measures.hpp"

namespace grandcouple {

// Running mean / standard error (Welford).
class MeanAccumulator {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  void merge(const MeanAccumulator& o);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double standard_error() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct TestResult {
  double statistic;
  double p_value;
};

// One-sample Kolmogorov–Smirnov test against a continuous CDF.
TestResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

// Pearson chi-square goodness of fit. Cells with expected count below
// `min_expected` are pooled into one cell.
TestResult chi_square_test(std::span<const std::size_t> counts, std::span<const double> probs,
                           double min_expected = 5.0);

// CDF of a one-dimensional continuous measure (gaussian, shifted exponential,
// Student-t, and mixtures of those).
double cdf_1d(const Measure& m, double x);

// |observed - p| measured in binomial standard deviations at sample size n.
double binomial_z(double observed_rate, double p, std::size_t n);

}  // namespace grandcouple
