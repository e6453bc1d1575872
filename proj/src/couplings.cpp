#include "grandcouple/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "grandcouple/errors.hpp"
#include "grandcouple/stats.hpp"

namespace grandcouple {

CouplingDraw CouplingDraw::from_values(std::vector<Point> values) {
  CouplingDraw d;
  d.labels = bitwise_partition(values, &d.g);
  d.values = std::move(values);
  return d;
}

Point maximal_pair_given(const Measure& p, const Measure& q, const Point& x, RngStream& stream) {
  const double lp = p.log_density(x);
  const double lq = q.log_density(x);
  if (std::log(stream.uniform_pos()) + lp <= lq) return x;
  for (std::size_t it = 0; it < kRejectionCap; ++it) {
    Point y = q.sample(stream);
    const double ly_q = q.log_density(y);
    const double ly_p = p.log_density(y);
    // keep y when W* > min{1, p(y)/q(y)}
    if (std::log(stream.uniform_pos()) + ly_q > ly_p) return y;
  }
  throw IterationCap("maximal_pair: residual rejection loop exceeded cap");
}

std::pair<Point, Point> maximal_pair(const Measure& p, const Measure& q, RngStream& stream) {
  Point x = p.sample(stream);
  Point y = maximal_pair_given(p, q, x, stream);
  return {std::move(x), std::move(y)};
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_mean_density(std::span<const Measure> ms, const Point& x) {
  double hi = kNegInf;
  std::vector<double> l(ms.size());
  for (std::size_t j = 0; j < ms.size(); ++j) {
    l[j] = ms[j].log_density(x);
    hi = std::max(hi, l[j]);
  }
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : l) s += std::exp(v - hi);
  return hi + std::log(s / static_cast<double>(ms.size()));
}

Point residual_draw(const Measure& mu, std::span<const Measure> nus, std::size_t j,
                    RngStream& stream) {
  const double log_m = std::log(static_cast<double>(nus.size()));
  for (std::size_t it = 0; it < kRejectionCap; ++it) {
    Point z = nus[j].sample(stream);
    const double l_mu = mu.log_density(z);
    const double l_bar = log_mean_density(nus, z);
    // a(z) = (1 - mu / (m nubar))_+
    const double a = (l_mu == kNegInf) ? 1.0 : std::max(0.0, -std::expm1(l_mu - log_m - l_bar));
    if (stream.uniform() < a) return z;
  }
  throw IterationCap("list_coupling: residual rejection loop exceeded cap");
}

}  // namespace

ListCouplingResult list_coupling(const Measure& mu, std::span<const Measure> nus,
                                 RngStream& stream) {
  if (nus.empty()) throw InvalidInput("list_coupling: empty list");
  for (const auto& nu : nus) {
    if (!(nu.space() == mu.space())) throw InvalidInput("list_coupling: space mismatch");
  }
  const std::size_t m = nus.size();
  ListCouplingResult out;
  out.x = mu.sample(stream);
  out.ys.resize(m);

  const double l_mu = mu.log_density(out.x);
  std::vector<double> l_nu(m);
  double hi = kNegInf;
  for (std::size_t j = 0; j < m; ++j) {
    l_nu[j] = nus[j].log_density(out.x);
    hi = std::max(hi, l_nu[j]);
  }
  if (hi != kNegInf) {
    double sum = 0.0;
    for (double v : l_nu) sum += std::exp(v - hi);
    const double l_msum = hi + std::log(sum);  // log(m * nubar(x))
    if (std::log(stream.uniform_pos()) <= l_msum - l_mu) {
      double u = stream.uniform() * sum;
      std::size_t pick = m - 1;
      for (std::size_t j = 0; j < m; ++j) {
        const double w = std::exp(l_nu[j] - hi);
        if (w > 0.0) pick = j;
        if (u < w) break;
        u -= w;
      }
      out.matched_index = pick;
      out.ys[pick] = out.x;
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (out.matched_index && *out.matched_index == j) continue;
    out.ys[j] = residual_draw(mu, nus, j, stream);
  }
  return out;
}

std::vector<std::vector<double>> list_residuals(std::span<const double> mu,
                                                std::span<const std::vector<double>> nus) {
  const std::size_t m = nus.size();
  const std::size_t n = mu.size();
  std::vector<double> msum(n, 0.0);
  for (const auto& nu : nus) {
    if (nu.size() != n) throw InvalidInput("list_residuals: size mismatch");
    for (std::size_t k = 0; k < n; ++k) msum[k] += nu[k];
  }
  std::vector<std::vector<double>> out(m, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < m; ++j) {
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (msum[k] <= 0.0) continue;
      const double keep = 1.0 - std::min(1.0, mu[k] / msum[k]);
      out[j][k] = nus[j][k] * keep;
      total += out[j][k];
    }
    if (total > 0.0) {
      for (double& v : out[j]) v /= total;
    }
  }
  return out;
}

namespace {

// Common partition on which every law in the recursion is a vector of piece
// masses and all laws share one within-piece shape: states for finite
// measures, e^{-x} on [s_k, s_{k+1}) for shifted exponentials.
class PieceGrid {
 public:
  static PieceGrid finite(std::size_t n) {
    PieceGrid g;
    g.finite_ = true;
    g.count_ = n;
    return g;
  }
  static PieceGrid exponential(std::vector<double> cuts) {
    PieceGrid g;
    g.finite_ = false;
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    g.count_ = cuts.size();
    g.cuts_ = std::move(cuts);
    return g;
  }

  std::size_t size() const { return count_; }

  std::vector<double> masses(const Measure& m) const {
    if (finite_) return m.as_finite().probs;
    const double s = m.as_shifted_exponential().shift;
    std::vector<double> out(count_, 0.0);
    for (std::size_t k = 0; k < count_; ++k) {
      const double a = cuts_[k];
      if (a < s) continue;
      // ∫_a^b e^{-(x - s)} dx
      const double head = std::exp(-(a - s));
      out[k] = (k + 1 < count_) ? head * -std::expm1(-(cuts_[k + 1] - a)) : head;
    }
    return out;
  }

  Point sample_in(std::size_t k, RngStream& stream) const {
    if (finite_) return state(k);
    const double a = cuts_[k];
    if (k + 1 == count_) return Point{a + stream.exponential()};
    const double width = cuts_[k + 1] - a;
    // truncated Exp(1) on [0, width)
    const double u = stream.uniform();
    const double z = -std::log1p(u * std::expm1(-width));
    return Point{a + std::min(z, std::nextafter(width, 0.0))};
  }

 private:
  bool finite_ = true;
  std::size_t count_ = 0;
  std::vector<double> cuts_;
};

std::size_t sample_piece(std::span<const double> w, RngStream& stream) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  double u = stream.uniform() * total;
  std::size_t last = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] <= 0.0) continue;
    last = k;
    if (u < w[k]) return k;
    u -= w[k];
  }
  return last;
}

}  // namespace

CouplingDraw greedy_recursive_list(std::span<const Measure> marginals, Ordering ordering,
                                   RngStream& stream) {
  if (marginals.empty()) throw InvalidInput("greedy_recursive_list: no marginals");
  const std::size_t c = marginals.size();
  PieceGrid grid;
  const auto kind = marginals.front().kind();
  if (kind == MeasureKind::finite) {
    for (const auto& m : marginals) {
      if (m.kind() != MeasureKind::finite) throw UnsupportedKind("greedy_recursive_list: mixed kinds");
      if (!(m.space() == marginals.front().space())) throw InvalidInput("greedy_recursive_list: space mismatch");
    }
    grid = PieceGrid::finite(marginals.front().space().size);
  } else if (kind == MeasureKind::shifted_exponential) {
    std::vector<double> cuts;
    for (const auto& m : marginals) {
      if (m.kind() != MeasureKind::shifted_exponential) {
        throw UnsupportedKind("greedy_recursive_list: mixed kinds");
      }
      cuts.push_back(m.as_shifted_exponential().shift);
    }
    grid = PieceGrid::exponential(std::move(cuts));
  } else {
    throw UnsupportedKind("greedy_recursive_list: requires finite or shifted-exponential measures");
  }

  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), 0);
  if (ordering == Ordering::random) std::shuffle(order.begin(), order.end(), stream.engine());

  struct Active {
    std::size_t coord;
    std::vector<double> law;
  };
  std::vector<Active> active;
  active.reserve(c);
  for (auto i : order) active.push_back({i, grid.masses(marginals[i])});

  std::vector<Point> values(c);
  while (!active.empty()) {
    if (active.size() == 1) {
      values[active[0].coord] = grid.sample_in(sample_piece(active[0].law, stream), stream);
      break;
    }
    const auto& mu = active[0].law;
    const std::size_t m = active.size() - 1;
    std::vector<std::vector<double>> nus;
    nus.reserve(m);
    for (std::size_t j = 1; j < active.size(); ++j) nus.push_back(active[j].law);

    const std::size_t k = sample_piece(mu, stream);
    const Point x = grid.sample_in(k, stream);
    values[active[0].coord] = x;

    double msum = 0.0;
    for (const auto& nu : nus) msum += nu[k];
    std::optional<std::size_t> matched;
    if (msum > 0.0 && stream.uniform() < std::min(1.0, msum / mu[k])) {
      double u = stream.uniform() * msum;
      std::size_t pick = m - 1;
      for (std::size_t j = 0; j < m; ++j) {
        if (nus[j][k] <= 0.0) continue;
        pick = j;
        if (u < nus[j][k]) break;
        u -= nus[j][k];
      }
      matched = pick;
      values[active[pick + 1].coord] = x;
    }

    auto residuals = list_residuals(mu, nus);
    std::vector<Active> next;
    next.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
      if (matched && *matched == j) continue;
      const bool empty = std::all_of(residuals[j].begin(), residuals[j].end(),
                                     [](double v) { return v <= 0.0; });
      // zero residual mass means j is matched with probability one; rounding
      // can still route here, in which case the untouched law is used
      next.push_back({active[j + 1].coord, empty ? nus[j] : std::move(residuals[j])});
    }
    active = std::move(next);
  }
  return CouplingDraw::from_values(std::move(values));
}

CouplingDraw star_coupling(std::span<const Measure> marginals, std::optional<std::size_t> anchor,
                           RngStream& stream) {
  const std::size_t c = marginals.size();
  if (c == 0) throw InvalidInput("star_coupling: no marginals");
  const std::size_t a = anchor ? *anchor : stream.index(c);
  if (a >= c) throw InvalidInput("star_coupling: anchor out of range");
  std::vector<Point> values(c);
  values[a] = marginals[a].sample(stream);
  for (std::size_t i = 0; i < c; ++i) {
    if (i == a) continue;
    values[i] = maximal_pair_given(marginals[a], marginals[i], values[a], stream);
  }
  return CouplingDraw::from_values(std::move(values));
}

CouplingDraw sequence_coupling(std::span<const Measure> marginals, RngStream& stream) {
  const std::size_t c = marginals.size();
  if (c == 0) throw InvalidInput("sequence_coupling: no marginals");
  std::vector<std::size_t> perm(c);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), stream.engine());
  std::vector<Point> values(c);
  values[perm[0]] = marginals[perm[0]].sample(stream);
  for (std::size_t k = 1; k < c; ++k) {
    values[perm[k]] = maximal_pair_given(marginals[perm[k - 1]], marginals[perm[k]],
                                         values[perm[k - 1]], stream);
  }
  return CouplingDraw::from_values(std::move(values));
}

Estimate estimate_expected_G(const Coupler& coupler, std::span<const Measure> marginals,
                             std::size_t n_runs, RngStream& stream) {
  if (n_runs == 0) throw InvalidInput("estimate_expected_G: n_runs must be >= 1");
  MeanAccumulator acc;
  for (std::size_t r = 0; r < n_runs; ++r) acc.add(coupler(marginals, stream).g);
  return {acc.mean(), acc.standard_error(), acc.count()};
}

}  // namespace grandcouple
