#include "grandcouple/poisson.hpp"

#include <algorithm>
#include <numeric>

#include "grandcouple/stats.hpp"

namespace grandcouple {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
using Clock = std::chrono::steady_clock;

void score_one(std::span<const Measure> targets, const Point& x, double* row) {
  const std::size_t c = targets.size();
  double hi = kNegInf;
  for (std::size_t i = 0; i < c; ++i) {
    row[i] = targets[i].log_density(x);
    hi = std::max(hi, row[i]);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < c; ++i) s += std::exp(row[i] - hi);
  const double log_mu = hi + std::log(s / static_cast<double>(c));
  for (std::size_t i = 0; i < c; ++i) row[i] -= log_mu;
}
}  // namespace

PointProcess make_point_process(const Measure& base, RngStream stream) {
  return PointProcess([base](RngStream& s) { return base.sample(s); }, std::move(stream));
}

PfrSelection pfr_sample(PointProcess& proc, const Measure& base, const Measure& target,
                        double w_min) {
  auto scan = pfr_scan(
      proc, [&](std::size_t j) { return log_density_ratio(target, base, proc.mark(j)); }, w_min);
  return {scan.atom_index, proc.mark(scan.atom_index), scan.score, scan.atoms_examined};
}

void score_atoms_serial(std::span<const Measure> targets, std::span<const Point> atoms,
                        std::span<double> out) {
  const std::size_t c = targets.size();
  for (std::size_t a = 0; a < atoms.size(); ++a) score_one(targets, atoms[a], &out[a * c]);
}

void score_atoms_parallel(std::span<const Measure> targets, std::span<const Point> atoms,
                          std::span<double> out) {
  const std::size_t c = targets.size();
  const auto n = static_cast<std::ptrdiff_t>(atoms.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t a = 0; a < n; ++a) {
    score_one(targets, atoms[static_cast<std::size_t>(a)], &out[static_cast<std::size_t>(a) * c]);
  }
}

SharedMatch shared_match(std::span<const Measure> targets, RngStream& stream) {
  const std::size_t c = targets.size();
  if (c == 0) throw InvalidInput("shared_match: no targets");
  for (const auto& t : targets) {
    if (!(t.space() == targets.front().space())) throw InvalidInput("shared_match: space mismatch");
  }
  const Measure mu = barycenter(targets);
  PointProcess proc = make_point_process(mu, stream.split(0x5eed));

  // Scores are cached per atom: every target reads the same row.
  std::vector<double> cache;
  std::size_t scored = 0;
  auto ensure_scored = [&](std::size_t j) {
    if (j < scored) return;
    proc.extend_to(j + 1);
    cache.resize((j + 1) * c);
    for (; scored <= j; ++scored) score_one(targets, proc.mark(scored), &cache[scored * c]);
  };

  SharedMatch out;
  out.atom_index.resize(c);
  out.atoms_examined.resize(c);
  std::vector<Point> values(c);
  const double w_min = 1.0 / static_cast<double>(c);
  for (std::size_t i = 0; i < c; ++i) {
    auto scan = pfr_scan(
        proc,
        [&](std::size_t j) {
          ensure_scored(j);
          return cache[j * c + i];
        },
        w_min);
    out.atom_index[i] = scan.atom_index;
    out.atoms_examined[i] = scan.atoms_examined;
    values[i] = proc.mark(scan.atom_index);
  }
  out.atoms_generated = proc.size();
  out.draw = CouplingDraw::from_values(std::move(values));
  return out;
}

std::string to_string(ProposalVariant v) {
  return v == ProposalVariant::barycenter ? "barycenter" : "single-gaussian";
}

double single_gaussian_w_min(std::span<const Measure> targets, std::span<const double> mean,
                             double scale) {
  double w = 1.0;
  for (const auto& t : targets) {
    const auto& g = t.as_gaussian();
    if (g.mean.size() != mean.size()) throw InvalidInput("single_gaussian_w_min: dimension mismatch");
    for (double v : g.var) {
      if (v != 1.0) throw InvalidInput("single_gaussian_w_min: targets must have unit variances");
    }
    double d2 = 0.0;
    for (std::size_t k = 0; k < mean.size(); ++k) d2 += (g.mean[k] - mean[k]) * (g.mean[k] - mean[k]);
    const double dim = static_cast<double>(mean.size());
    double inf_ratio;
    if (scale > 1.0) {
      // minimizer of the quadratic exponent gives s^{-d/2} exp(-|Δ|^2 / (2 (s - 1)))
      inf_ratio = std::exp(-0.5 * dim * std::log(scale) - d2 / (2.0 * (scale - 1.0)));
    } else if (scale == 1.0 && d2 == 0.0) {
      inf_ratio = 1.0;
    } else {
      inf_ratio = 0.0;
    }
    w = std::min(w, inf_ratio);
  }
  if (!(w > 0.0)) throw InvalidInput("single_gaussian_w_min: proposal does not dominate targets");
  return w;
}

RuntimeProbe runtime_probe(std::span<const Measure> targets, ProposalVariant proposal,
                           std::size_t n_reps, RngStream& stream,
                           std::chrono::milliseconds timeout) {
  if (n_reps == 0) throw InvalidInput("runtime_probe: n_reps must be >= 1");
  const std::size_t c = targets.size();
  MeanAccumulator ms;
  MeanAccumulator atoms;
  RuntimeProbe out;

  std::vector<double> center;
  double w_min = 1.0;
  std::optional<Measure> wide;
  if (proposal == ProposalVariant::single_gaussian) {
    const std::size_t d = targets.front().space().size;
    center.assign(d, 0.0);
    for (const auto& t : targets) {
      for (std::size_t k = 0; k < d; ++k) center[k] += t.as_gaussian().mean[k] / static_cast<double>(c);
    }
    const double scale = static_cast<double>(c);
    w_min = single_gaussian_w_min(targets, center, scale);
    wide = Measure::gaussian_diag(center, std::vector<double>(d, scale));
  }

  for (std::size_t r = 0; r < n_reps; ++r) {
    RngStream rep = stream.split(r);
    const auto start = Clock::now();
    const auto deadline = start + timeout;
    bool censored = false;
    double examined = 0.0;
    if (proposal == ProposalVariant::barycenter) {
      auto res = shared_match(targets, rep);
      for (auto a : res.atoms_examined) examined += static_cast<double>(a);
    } else {
      // one streaming scan per target; atoms are not retained
      for (std::size_t i = 0; i < c && !censored; ++i) {
        PfrScanner scanner(w_min);
        double s = 0.0;
        Point x(center.size());
        for (std::size_t j = 0;; ++j) {
          s += rep.exponential();
          x = wide->sample(rep);
          if (scanner.offer(j, s, log_density_ratio(targets[i], *wide, x))) break;
          if ((j & 0xfff) == 0xfff && Clock::now() > deadline) {
            censored = true;
            break;
          }
        }
        examined += static_cast<double>(scanner.examined());
      }
    }
    const double elapsed =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    if (censored) {
      ++out.censored;
      continue;
    }
    ms.add(elapsed);
    atoms.add(examined / static_cast<double>(c));
  }
  out.mean_ms = ms.mean();
  out.mean_atoms_examined = atoms.mean();
  out.n = ms.count();
  return out;
}

}  // namespace grandcouple
