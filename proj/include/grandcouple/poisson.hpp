#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grandcouple/couplings.hpp"
#include "grandcouple/errors.hpp"
#include "grandcouple/measures.hpp"
#include "grandcouple/rng.hpp"

namespace grandcouple {

// Unit-rate arrivals S_1 < S_2 < ... with i.i.d. marks, materialized lazily.
// Atoms are append-only; the process owns its stream, so replay is exact.
template <class Mark>
class MarkedPoissonProcess {
 public:
  using Sampler = std::function<Mark(RngStream&)>;

  MarkedPoissonProcess(Sampler sampler, RngStream stream)
      : sampler_(std::move(sampler)), stream_(std::move(stream)) {}

  void extend_to(std::size_t j) {
    while (arrivals_.size() < j) {
      const double last = arrivals_.empty() ? 0.0 : arrivals_.back();
      arrivals_.push_back(last + stream_.exponential());
      marks_.push_back(sampler_(stream_));
    }
  }

  std::size_t size() const { return arrivals_.size(); }
  // 0-based access; call extend_to first.
  double arrival(std::size_t i) const { return arrivals_[i]; }
  const Mark& mark(std::size_t i) const { return marks_[i]; }

 private:
  Sampler sampler_;
  RngStream stream_;
  std::vector<double> arrivals_;
  std::vector<Mark> marks_;
};

// Running state of the PFR selection: tracks s* = min S_j / (dP/dmu)(X_j)
// and stops once s* <= S_j * w_min.
class PfrScanner {
 public:
  explicit PfrScanner(double w_min) : w_min_(w_min), log_cap_(-std::log(w_min) + 1e-9) {
    if (!(w_min > 0.0 && w_min <= 1.0)) throw InvalidInput("pfr: w_min must lie in (0, 1]");
  }

  // Offer atom `index` with arrival `s` and log density ratio `log_ratio`.
  // Returns true when the scan may stop.
  bool offer(std::size_t index, double s, double log_ratio) {
    ++examined_;
    if (log_ratio > log_cap_) {
      throw InvalidBound("pfr: density ratio " + std::to_string(std::exp(log_ratio)) +
                         " exceeds 1/w_min = " + std::to_string(1.0 / w_min_));
    }
    if (log_ratio != -std::numeric_limits<double>::infinity()) {
      const double score = s * std::exp(-log_ratio);
      if (score < s_star_) {
        s_star_ = score;
        j_star_ = index;
      }
    }
    return s_star_ <= s * w_min_;
  }

  std::size_t best_index() const { return j_star_; }
  double best_score() const { return s_star_; }
  std::size_t examined() const { return examined_; }

 private:
  double w_min_;
  double log_cap_;
  double s_star_ = std::numeric_limits<double>::infinity();
  std::size_t j_star_ = 0;
  std::size_t examined_ = 0;
};

struct PfrScan {
  std::size_t atom_index = 0;  // 0-based
  double score = 0.0;
  std::size_t atoms_examined = 0;
};

// Scan `proc` in order until the PFR stopping rule fires.
// `log_ratio(i)` returns log (dP/dmu)(mark i).
template <class Mark, class LogRatio>
PfrScan pfr_scan(MarkedPoissonProcess<Mark>& proc, LogRatio&& log_ratio, double w_min) {
  PfrScanner scanner(w_min);
  for (std::size_t j = 0;; ++j) {
    proc.extend_to(j + 1);
    if (scanner.offer(j, proc.arrival(j), log_ratio(j))) break;
  }
  return {scanner.best_index(), scanner.best_score(), scanner.examined()};
}

using PointProcess = MarkedPoissonProcess<Point>;

// Process whose marks are drawn from `base`.
PointProcess make_point_process(const Measure& base, RngStream stream);

struct PfrSelection {
  std::size_t atom_index = 0;  // 0-based
  Point point;
  double score = 0.0;
  std::size_t atoms_examined = 0;
};

// Exact sample from `target` using the atoms of `proc` (base measure `base`).
PfrSelection pfr_sample(PointProcess& proc, const Measure& base, const Measure& target,
                        double w_min);

struct SharedMatch {
  CouplingDraw draw;
  std::vector<std::size_t> atom_index;      // selected atom per target
  std::vector<std::size_t> atoms_examined;  // per target
  std::size_t atoms_generated = 0;
};

// Couples `targets` through one process with the barycenter as base.
SharedMatch shared_match(std::span<const Measure> targets, RngStream& stream);

// Scores all atoms of a batch against all targets: out[a * C + i] =
// log p_i(x_a) - log mu(x_a), mu the uniform barycenter.
void score_atoms_serial(std::span<const Measure> targets, std::span<const Point> atoms,
                        std::span<double> out);
void score_atoms_parallel(std::span<const Measure> targets, std::span<const Point> atoms,
                          std::span<double> out);

enum class ProposalVariant { barycenter, single_gaussian };
std::string to_string(ProposalVariant v);

struct RuntimeProbe {
  double mean_ms = 0.0;
  double mean_atoms_examined = 0.0;  // per target
  std::size_t n = 0;                 // completed replicates
  std::size_t censored = 0;
};

// Closed-form w_min = min_i inf_x N(x; mean, scale I) / p_i(x) for
// unit-covariance Gaussian targets (requires scale > 1).
double single_gaussian_w_min(std::span<const Measure> targets, std::span<const double> mean,
                             double scale);

// Average cost of coupling `targets` (unit-variance Gaussians for the
// single-gaussian baseline, whose proposal is N(mean of means, C I)).
RuntimeProbe runtime_probe(std::span<const Measure> targets, ProposalVariant proposal,
                           std::size_t n_reps, RngStream& stream,
                           std::chrono::milliseconds timeout = std::chrono::seconds(60));

}  // namespace grandcouple
