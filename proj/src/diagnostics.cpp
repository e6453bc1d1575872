#include "grandcouple/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "grandcouple/errors.hpp"
#include "grandcouple/stats.hpp"

namespace grandcouple {

Omega omega_gaussian(const Measure& pi0, const Measure& pi) {
  if (pi0.kind() == MeasureKind::gaussian_diag && pi.kind() == MeasureKind::student_t_walk) {
    return {0.0, true};
  }
  const auto& a = pi0.as_gaussian();
  const auto& b = pi.as_gaussian();
  if (a.mean.size() != b.mean.size()) throw InvalidInput("omega_gaussian: dimension mismatch");
  double log_w = 0.0;
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    const double v0 = a.var[i];
    const double v = b.var[i];
    const double delta = a.mean[i] - b.mean[i];
    if (v0 < v || (v0 == v && delta != 0.0)) return {0.0, true};
    // inf_x N(x; m0, v0) / N(x; m, v) = sqrt(v / v0) exp(-delta^2 / (2 (v0 - v)))
    log_w += 0.5 * std::log(v / v0);
    if (v0 > v) log_w -= delta * delta / (2.0 * (v0 - v));
  }
  return {std::exp(log_w), false};
}

double johnson_denominator(double omega, std::size_t c) {
  return -std::expm1(static_cast<double>(c) * std::log1p(-omega));
}

std::optional<std::vector<double>> johnson_bound(std::span<const double> tail, double omega,
                                                 std::size_t c) {
  if (!(omega > 0.0)) return std::nullopt;
  if (omega > 1.0) throw InvalidInput("johnson_bound: omega must lie in (0, 1]");
  const double den = johnson_denominator(omega, c);
  std::vector<double> out(tail.begin(), tail.end());
  for (double& v : out) v /= den;
  return out;
}

Estimate estimate_alpha_C(const Measure& pi0, const Measure& pi, std::size_t c, std::size_t n,
                          RngStream& stream) {
  if (n == 0) throw InvalidInput("estimate_alpha_C: n must be >= 1");
  const double cc = static_cast<double>(c);
  MeanAccumulator acc;
  for (std::size_t i = 0; i < n; ++i) {
    const Point x = pi0.sample(stream);
    const double l0 = pi0.log_density(x);
    const double l = pi.log_density(x);
    // C pi / (C pi0 + pi) = C / (C exp(l0 - l) + 1)
    acc.add(l == -std::numeric_limits<double>::infinity() ? 0.0 : cc / (cc * std::exp(l0 - l) + 1.0));
  }
  return {acc.mean(), acc.standard_error(), acc.count()};
}

std::vector<double> list_level_bound(std::span<const double> tail, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("list_level_bound: alpha must lie in [0, 1]");
  std::vector<double> out(tail.begin(), tail.end());
  for (double& v : out) v += 1.0 - alpha;
  return out;
}

std::vector<double> tail_curve(std::span<const std::optional<std::size_t>> taus,
                               std::size_t horizon) {
  if (taus.empty()) throw InvalidInput("tail_curve: no replicates");
  std::vector<std::size_t> exceed(horizon + 1, 0);
  for (const auto& t : taus) {
    const std::size_t last = t ? std::min(*t, horizon + 1) : horizon + 1;
    // tau > s for s < tau
    for (std::size_t s = 0; s < last; ++s) ++exceed[s];
  }
  std::vector<double> out(horizon + 1);
  for (std::size_t s = 0; s <= horizon; ++s) {
    out[s] = static_cast<double>(exceed[s]) / static_cast<double>(taus.size());
  }
  return out;
}

BoundCurve bound_curve(std::span<const std::optional<std::size_t>> taus, std::size_t horizon,
                       const Omega& omega, std::size_t c, std::optional<double> alpha) {
  BoundCurve b;
  b.tail = tail_curve(taus, horizon);
  b.t.resize(horizon + 1);
  std::iota(b.t.begin(), b.t.end(), std::size_t{0});
  if (!omega.vacuous) b.johnson = johnson_bound(b.tail, omega.value, c);
  if (alpha) b.listlevel = list_level_bound(b.tail, *alpha);
  // TV never exceeds 1
  b.combined.assign(horizon + 1, 1.0);
  for (std::size_t s = 0; s <= horizon; ++s) {
    if (b.johnson) b.combined[s] = std::min(b.combined[s], (*b.johnson)[s]);
    if (b.listlevel) b.combined[s] = std::min(b.combined[s], (*b.listlevel)[s]);
  }
  return b;
}

double hellinger_sq_gaussian(const Measure& p, const Measure& q) {
  const auto& a = p.as_gaussian();
  const auto& b = q.as_gaussian();
  if (a.mean.size() != b.mean.size()) throw InvalidInput("hellinger_sq_gaussian: dimension mismatch");
  double log_bc = 0.0;
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    const double s = a.var[i] + b.var[i];
    const double dm = a.mean[i] - b.mean[i];
    log_bc += 0.5 * std::log(2.0 * std::sqrt(a.var[i] * b.var[i]) / s) - dm * dm / (4.0 * s);
  }
  return -std::expm1(log_bc);
}

double weight_hellinger_to_uniform(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw InvalidInput("weight_hellinger_to_uniform: weights must be positive");
  double s = 0.0;
  for (double w : weights) s += std::sqrt(w / total);
  return std::max(0.0, 1.0 - s / std::sqrt(static_cast<double>(weights.size())));
}

Point ar_kernel_step(const Point& x, double rho, RngStream& stream) {
  if (!(std::abs(rho) < 1.0)) throw InvalidInput("ar kernel: |rho| must be < 1");
  const double sd = std::sqrt(1.0 - rho * rho);
  Point y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = rho * x[i] + sd * stream.normal();
  return y;
}

Measure ar_kernel_measure(const Point& x, double rho) {
  if (!(std::abs(rho) < 1.0)) throw InvalidInput("ar kernel: |rho| must be < 1");
  std::vector<double> mean(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mean[i] = rho * x[i];
  return Measure::gaussian_diag(std::move(mean), std::vector<double>(x.size(), 1.0 - rho * rho));
}

Measure ar_marginal(std::size_t t, double rho, std::size_t d) {
  if (!(std::abs(rho) < 1.0)) throw InvalidInput("ar kernel: |rho| must be < 1");
  const double rt = std::pow(rho, static_cast<double>(t));
  return Measure::gaussian_diag(std::vector<double>(d, 10.0 * rt),
                                std::vector<double>(d, 1.0 + 4.0 * rt * rt));
}

Measure ar_initial(std::size_t d) {
  return Measure::gaussian_diag(std::vector<double>(d, 10.0), std::vector<double>(d, 5.0));
}

std::optional<std::size_t> ar_meeting_time(std::size_t c, double rho, std::size_t d,
                                           const Coupler& coupler, std::size_t max_iter,
                                           RngStream& stream) {
  const Measure pi0 = ar_initial(d);
  std::vector<Point> xs;
  for (std::size_t i = 0; i < c; ++i) xs.push_back(pi0.sample(stream));
  std::vector<Measure> ks;
  for (std::size_t t = 0; t <= max_iter; ++t) {
    int g = 0;
    bitwise_partition(xs, &g);
    if (g == 1) return t;
    if (t == max_iter) break;
    ks.clear();
    for (const auto& x : xs) ks.push_back(ar_kernel_measure(x, rho));
    xs = coupler(ks, stream).values;
  }
  return std::nullopt;
}

WeightedEnsemble::WeightedEnsemble(std::vector<Point> s, std::vector<double> w, std::size_t m)
    : states(std::move(s)), weights(std::move(w)) {
  if (states.size() != weights.size()) throw InvalidInput("WeightedEnsemble: size mismatch");
  if (m < 1 || states.empty() || states.size() % m != 0) {
    throw InvalidInput("WeightedEnsemble: N must be a positive multiple of m");
  }
  for (double v : weights) {
    if (!(v > 0.0)) throw InvalidInput("WeightedEnsemble: weights must be positive");
  }
  for (std::size_t g = 0; g < states.size() / m; ++g) {
    std::vector<std::size_t> members(m);
    std::iota(members.begin(), members.end(), g * m);
    groups.push_back(std::move(members));
  }
}

double WeightedEnsemble::total_weight() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

HarmonizeInfo harmonize_step(WeightedEnsemble& we,
                             const std::function<Measure(const Point&)>& kernel,
                             const Coupler& coupler, RngStream& stream) {
  if (we.groups.empty() || we.groups.front().size() < 2) {
    throw InvalidInput("harmonize_step: group size must be >= 2");
  }
  HarmonizeInfo info;
  std::vector<std::size_t> active;
  std::vector<Measure> ks;
  for (std::size_t g = 0; g < we.groups.size(); ++g) {
    const auto& members = we.groups[g];
    ks.clear();
    for (std::size_t i : members) ks.push_back(kernel(we.states[i]));
    CouplingDraw draw = coupler(ks, stream);
    std::vector<double> sum(static_cast<std::size_t>(draw.g), 0.0);
    std::vector<std::size_t> count(static_cast<std::size_t>(draw.g), 0);
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto lab = static_cast<std::size_t>(draw.labels[k]);
      sum[lab] += we.weights[members[k]];
      ++count[lab];
      we.states[members[k]] = std::move(draw.values[k]);
    }
    bool coalesced = false;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const auto lab = static_cast<std::size_t>(draw.labels[k]);
      if (count[lab] >= 2) {
        we.weights[members[k]] = sum[lab] / static_cast<double>(count[lab]);
        coalesced = true;
        info.max_cluster = std::max(info.max_cluster, count[lab]);
      }
    }
    if (coalesced) active.push_back(g);
  }
  info.coalesced_groups = active.size();
  if (active.size() >= 2) {
    std::vector<std::size_t> pool;
    for (std::size_t g : active) pool.insert(pool.end(), we.groups[g].begin(), we.groups[g].end());
    std::shuffle(pool.begin(), pool.end(), stream.engine());
    std::size_t pos = 0;
    for (std::size_t g : active) {
      for (auto& i : we.groups[g]) i = pool[pos++];
    }
    info.reshuffled = true;
  }
  return info;
}

}  // namespace grandcouple
