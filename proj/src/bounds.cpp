#include "grandcouple/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "grandcouple/errors.hpp"
#include "grandcouple/simplex.hpp"

namespace grandcouple {

namespace {

HockeyStickScheme scheme_for(const Measure& m) {
  if (m.kind() == MeasureKind::finite) return HockeyStickScheme::exact();
  const auto sp = m.space();
  if (sp.type == SampleSpace::Type::continuous && sp.size == 1) return HockeyStickScheme::quadrature();
  throw UnsupportedKind("bounds: hockey-stick terms need finite or one-dimensional measures");
}

// E_{|rest|}(P^e || mean of P^rest), memoized on (e, rest-set).
class SuffixTerms {
 public:
  explicit SuffixTerms(std::span<const Measure> ms) : ms_(ms) {}

  double operator()(std::size_t e, std::uint64_t rest) {
    const auto key = std::make_pair(e, rest);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<Measure> suffix;
    for (std::size_t j = 0; j < ms_.size(); ++j) {
      if (rest >> j & 1u) suffix.push_back(ms_[j]);
    }
    const double m = static_cast<double>(suffix.size());
    double v;
    if (ms_[e].kind() == MeasureKind::finite) {
      // mixture of finite measures folded into one probability vector
      std::vector<double> avg(ms_[e].space().size, 0.0);
      for (const auto& s : suffix) {
        const auto& p = s.as_finite().probs;
        for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += p[k] / m;
      }
      double total = std::accumulate(avg.begin(), avg.end(), 0.0);
      for (double& a : avg) a /= total;
      v = hockey_stick(ms_[e], Measure::finite(std::move(avg)), m, HockeyStickScheme::exact()).value;
    } else {
      v = hockey_stick(ms_[e], barycenter(suffix), m, scheme_for(ms_[e])).value;
    }
    memo_.emplace(key, v);
    return v;
  }

 private:
  std::span<const Measure> ms_;
  std::map<std::pair<std::size_t, std::uint64_t>, double> memo_;
};

}  // namespace

LowerBound lower_bound_G(std::span<const Measure> marginals, const OrderingMode& mode) {
  const std::size_t c = marginals.size();
  if (c == 0) throw InvalidInput("lower_bound_G: no marginals");
  for (const auto& m : marginals) {
    if (!(m.space() == marginals.front().space())) throw InvalidInput("lower_bound_G: space mismatch");
    scheme_for(m);
  }
  if (c > 63) throw TooLarge("lower_bound_G: at most 63 marginals");
  SuffixTerms term(marginals);
  const std::uint64_t all = (c == 64) ? ~0ull : ((1ull << c) - 1);

  LowerBound out;
  switch (mode.type) {
    case OrderingMode::Type::fixed: {
      std::vector<std::size_t> s = mode.sigma;
      if (s.size() != c) throw InvalidInput("lower_bound_G: ordering has wrong length");
      std::vector<std::size_t> sorted = s;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < c; ++i) {
        if (sorted[i] != i) throw InvalidInput("lower_bound_G: ordering is not a permutation");
      }
      std::uint64_t rest = all;
      double sum = 0.0;
      for (std::size_t k = 0; k + 1 < c; ++k) {
        rest &= ~(1ull << s[k]);
        sum += term(s[k], rest);
      }
      out.value = 1.0 + sum;
      out.ordering = std::move(s);
      return out;
    }
    case OrderingMode::Type::greedy: {
      std::uint64_t rest = all;
      double sum = 0.0;
      for (std::size_t k = 0; k + 1 < c; ++k) {
        std::size_t best = c;
        double best_v = -1.0;
        for (std::size_t e = 0; e < c; ++e) {
          if (!(rest >> e & 1u)) continue;
          const double v = term(e, rest & ~(1ull << e));
          if (v > best_v) {
            best_v = v;
            best = e;
          }
        }
        rest &= ~(1ull << best);
        out.ordering.push_back(best);
        sum += best_v;
      }
      for (std::size_t e = 0; e < c; ++e) {
        if (rest >> e & 1u) out.ordering.push_back(e);
      }
      out.value = 1.0 + sum;
      return out;
    }
    case OrderingMode::Type::exhaustive: {
      if (c > kMaxExhaustiveC) {
        throw TooLarge("lower_bound_G: exhaustive mode supports at most 8 marginals");
      }
      // best[S] = sup over orderings of S of the suffix-term sum; the first
      // element of an ordering of S contributes term(e, S \ {e})
      std::vector<double> best(std::size_t{1} << c, 0.0);
      for (std::uint64_t s = 1; s <= all; ++s) {
        if (std::popcount(s) < 2) continue;
        double v = -1.0;
        for (std::size_t e = 0; e < c; ++e) {
          if (!(s >> e & 1u)) continue;
          const std::uint64_t r = s & ~(1ull << e);
          v = std::max(v, term(e, r) + best[r]);
        }
        best[s] = v;
      }
      out.value = 1.0 + best[all];
      return out;
    }
  }
  return out;
}

double upper_bound_G(const std::vector<std::vector<double>>& tv) {
  const std::size_t c = tv.size();
  if (c == 0) throw InvalidInput("upper_bound_G: empty matrix");
  double sum = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    if (tv[i].size() != c) throw InvalidInput("upper_bound_G: matrix is not square");
    if (std::abs(tv[i][i]) > 1e-12) throw InvalidInput("upper_bound_G: nonzero diagonal");
    for (std::size_t j = 0; j < c; ++j) {
      const double v = tv[i][j];
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("upper_bound_G: entries must lie in [0, 1]");
      if (std::abs(v - tv[j][i]) > 1e-12) throw InvalidInput("upper_bound_G: matrix not symmetric");
      if (i < j) sum += 2.0 * v / (1.0 + v);
    }
  }
  return 0.5 * (1.0 + std::sqrt(1.0 + 8.0 * sum));
}

double pml_pairwise_bound(double tv) {
  if (!(tv >= 0.0 && tv <= 1.0)) throw InvalidInput("pml_pairwise_bound: tv must lie in [0, 1]");
  return (1.0 - tv) / (1.0 + tv);
}

std::vector<std::vector<double>> pairwise_tv_matrix(std::span<const Measure> ms) {
  const std::size_t c = ms.size();
  std::vector<std::vector<double>> tv(c, std::vector<double>(c, 0.0));
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = i + 1; j < c; ++j) {
      double v;
      if (ms[i].kind() == MeasureKind::finite && ms[j].kind() == MeasureKind::finite) {
        v = tv_finite(ms[i], ms[j]);
      } else if (ms[i].kind() == MeasureKind::gaussian_diag &&
                 ms[j].kind() == MeasureKind::gaussian_diag) {
        const auto& a = ms[i].as_gaussian();
        const auto& b = ms[j].as_gaussian();
        const double s2 = a.var.front();
        const bool shared = std::all_of(a.var.begin(), a.var.end(), [&](double x) { return x == s2; }) &&
                            a.var == b.var;
        if (!shared) throw UnsupportedKind("pairwise_tv_matrix: Gaussians need a shared isotropic covariance");
        v = tv_gaussian_shared_cov(a.mean, b.mean, std::sqrt(s2));
      } else {
        v = hockey_stick(ms[i], ms[j], 1.0, scheme_for(ms[i])).value;
      }
      v = std::clamp(v, 0.0, 1.0);
      tv[i][j] = tv[j][i] = v;
    }
  }
  return tv;
}

double lp_optimal_G(std::span<const Measure> marginals) {
  const std::size_t c = marginals.size();
  if (c == 0) throw InvalidInput("lp_optimal_G: no marginals");
  for (const auto& m : marginals) {
    if (m.kind() != MeasureKind::finite) throw UnsupportedKind("lp_optimal_G: finite measures only");
    if (!(m.space() == marginals.front().space())) throw InvalidInput("lp_optimal_G: space mismatch");
  }
  const std::size_t n = marginals.front().space().size;
  double tuples_d = std::pow(static_cast<double>(n), static_cast<double>(c));
  if (tuples_d > static_cast<double>(kMaxLpTuples)) {
    throw TooLarge("lp_optimal_G: |X|^C exceeds the 1e6 tuple guard");
  }
  const std::size_t tuples = static_cast<std::size_t>(std::llround(tuples_d));

  std::vector<double> cost(tuples);
  std::vector<std::size_t> digits(c);
  for (std::size_t t = 0; t < tuples; ++t) {
    std::size_t rem = t;
    for (std::size_t i = 0; i < c; ++i) {
      digits[i] = rem % n;
      rem /= n;
    }
    std::set<std::size_t> uniq(digits.begin(), digits.end());
    cost[t] = static_cast<double>(uniq.size());
  }

  // coordinate-marginal equalities; each marginal after the first drops its
  // last state, whose constraint is implied by total mass
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  for (std::size_t i = 0; i < c; ++i) {
    const auto& p = marginals[i].as_finite().probs;
    const std::size_t states = (i == 0) ? n : n - 1;
    std::size_t stride = 1;
    for (std::size_t k = 0; k < i; ++k) stride *= n;
    for (std::size_t x = 0; x < states; ++x) {
      std::vector<double> row(tuples, 0.0);
      for (std::size_t t = 0; t < tuples; ++t) {
        if ((t / stride) % n == x) row[t] = 1.0;
      }
      a.push_back(std::move(row));
      b.push_back(p[x]);
    }
  }
  const auto res = solve_standard_form(a, b, cost, 1e-9);
  if (res.status != LpResult::Status::optimal) {
    throw IterationCap("lp_optimal_G: linear program did not reach an optimum");
  }
  return res.objective;
}

BoundReport bound_report(std::span<const Measure> marginals, const OrderingMode& mode,
                         bool with_lp) {
  BoundReport r;
  r.c = marginals.size();
  auto lb = lower_bound_G(marginals, mode);
  r.lower = lb.value;
  r.ordering_used = std::move(lb.ordering);
  r.upper = upper_bound_G(pairwise_tv_matrix(marginals));
  if (with_lp) r.lp_exact = lp_optimal_G(marginals);
  return r;
}

}  // namespace grandcouple
