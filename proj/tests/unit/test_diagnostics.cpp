#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "grandcouple/diagnostics.hpp"
#include "grandcouple/errors.hpp"
#include "grandcouple/experiments.hpp"
#include "grandcouple/quadrature.hpp"
#include "grandcouple/stats.hpp"

using namespace grandcouple;

namespace {
Measure iso(std::size_t d, double m, double v) {
  return Measure::gaussian_diag(std::vector<double>(d, m), std::vector<double>(d, v));
}

// Independent draws: never coalesces (continuous kernels).
CouplingDraw independent(std::span<const Measure> ms, RngStream& s) {
  std::vector<Point> v;
  for (const auto& m : ms) v.push_back(m.sample(s));
  return CouplingDraw::from_values(std::move(v));
}

// Everyone takes one shared draw from the first kernel.
CouplingDraw collapse(std::span<const Measure> ms, RngStream& s) {
  return CouplingDraw::from_values(std::vector<Point>(ms.size(), ms[0].sample(s)));
}

WeightedEnsemble random_ensemble(std::size_t n, std::size_t m, RngStream& s) {
  std::vector<Point> x;
  std::vector<double> w;
  for (std::size_t i = 0; i < n; ++i) {
    x.push_back(Point{s.normal(), s.normal()});
    w.push_back(s.exponential());
  }
  return WeightedEnsemble(std::move(x), std::move(w), m);
}

double tv_1d(const Measure& p, const Measure& q) {
  const double a = p.as_gaussian().mean[0], b = q.as_gaussian().mean[0];
  const std::vector<double> kinks{a, b};
  return 0.5 * integrate(
                   [&](double x) {
                     return std::abs(std::exp(p.log_density(Point{x})) - std::exp(q.log_density(Point{x})));
                   },
                   -INFINITY, INFINITY, kinks, 1e-12);
}
}  // namespace

TEST(Omega, Examples) {
  EXPECT_NEAR(omega_gaussian(iso(3, 0.5, 2.0), iso(3, 0.5, 2.0)).value, 1.0, 1e-15);
  const double w1 = 0.25 * std::exp(-1.0 / 30.0);
  EXPECT_NEAR(omega_gaussian(iso(1, 1.0, 16.0), iso(1, 0.0, 1.0)).value, w1, 1e-15);
  EXPECT_NEAR(johnson_denominator(w1, 2), 0.4251, 1e-3);
  EXPECT_NEAR(johnson_denominator(omega_gaussian(iso(2, 1.0, 16.0), iso(2, 0.0, 1.0)).value, 2), 0.1135, 1e-3);
  EXPECT_TRUE(omega_gaussian(iso(1, 0.0, 0.5), iso(1, 0.0, 1.0)).vacuous);
  EXPECT_TRUE(omega_gaussian(iso(2, 0.0, 1.0), Measure::student_t_walk({0.0, 0.0}, 1.0, 1.0)).vacuous);
}

TEST(Omega, MatchesNumericInfimum) {
  const auto p0 = iso(1, 1.0, 16.0), p = iso(1, 0.0, 1.0);
  double lo = INFINITY;
  for (double x = -5.0; x <= 5.0; x += 1e-4) lo = std::min(lo, std::exp(p0.log_density(Point{x}) - p.log_density(Point{x})));
  EXPECT_NEAR(omega_gaussian(p0, p).value, lo, 1e-8);
}

TEST(Johnson, Examples) {
  const std::vector<double> zero(5, 0.0), tail{1.0, 0.5, 0.25};
  EXPECT_EQ(*johnson_bound(zero, 0.3, 4), zero);
  EXPECT_EQ(*johnson_bound(tail, 1.0, 1), tail);
  EXPECT_FALSE(johnson_bound(tail, 0.0, 4));
  // tiny omega: the expm1/log1p form keeps relative accuracy
  EXPECT_NEAR(johnson_denominator(1e-12, 3) / 3e-12, 1.0, 1e-9);
}

TEST(Alpha, IdenticalMeasuresAreConstant) {
  RngStream s(1);
  const auto p = iso(2, 0.0, 1.0);
  for (std::size_t c : {1u, 4u, 64u}) {
    const auto e = estimate_alpha_C(p, p, c, 1000, s);
    EXPECT_NEAR(e.mean, static_cast<double>(c) / (c + 1.0), 1e-15);
    EXPECT_NEAR(e.standard_error, 0.0, 1e-15);
  }
}

TEST(Alpha, AgreesWithQuadrature) {
  RngStream s(2);
  const auto p0 = iso(1, 1.0, 16.0), p = iso(1, 0.0, 1.0);
  for (std::size_t c : {2u, 16u}) {
    const double cc = static_cast<double>(c);
    const std::vector<double> kinks{0.0, 1.0};
    const double q = integrate(
        [&](double x) {
          const double l0 = p0.log_density(Point{x}), l = p.log_density(Point{x});
          return std::exp(l0) * cc / (cc * std::exp(l0 - l) + 1.0);
        },
        -INFINITY, INFINITY, kinks, 1e-12);
    const auto e = estimate_alpha_C(p0, p, c, 200'000, s);
    EXPECT_LT(std::abs(e.mean - q), 3.0 * e.standard_error) << c;
  }
}

TEST(ListLevel, Examples) {
  const std::vector<double> zero(4, 0.0), tail{0.9, 0.4, 0.1};
  for (double v : list_level_bound(zero, 0.7)) EXPECT_NEAR(v, 0.3, 1e-15);
  EXPECT_EQ(list_level_bound(tail, 1.0), tail);
}

TEST(TailCurve, CountsCensoredAsUnmet) {
  const std::vector<std::optional<std::size_t>> taus{0, 2, std::nullopt};
  const auto t = tail_curve(taus, 3);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_NEAR(t[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(t[1], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(t[2], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(t[3], 1.0 / 3.0, 1e-15);
}

TEST(BoundCurve, CombinedIsPointwiseMin) {
  const std::vector<std::optional<std::size_t>> taus{1, 3, 5, 8, std::nullopt};
  const auto b = bound_curve(taus, 10, Omega{0.2, false}, 4, 0.6);
  ASSERT_TRUE(b.johnson && b.listlevel);
  for (std::size_t i = 0; i < b.t.size(); ++i) {
    EXPECT_EQ(b.combined[i], std::min({1.0, (*b.johnson)[i], (*b.listlevel)[i]}));
  }
  const auto v = bound_curve(taus, 10, Omega{0.0, true}, 4, std::nullopt);
  EXPECT_FALSE(v.johnson);
  EXPECT_FALSE(v.listlevel);
  EXPECT_EQ(v.combined, std::vector<double>(11, 1.0));
}

TEST(Hellinger, Examples) {
  EXPECT_NEAR(hellinger_sq_gaussian(iso(2, 0.0, 1.0), iso(2, 0.0, 1.0)), 0.0, 1e-15);
  EXPECT_GT(hellinger_sq_gaussian(iso(1, 0.0, 1.0), iso(1, 20.0, 1.0)), 0.999);
  EXPECT_NEAR(hellinger_sq_gaussian(iso(1, 0.0, 1.0), iso(1, 1.0, 1.0)), 1.0 - std::exp(-0.125), 1e-12);
  // unequal variances against 1 - integral sqrt(pq)
  const auto p = iso(1, 0.5, 2.0), q = iso(1, -1.0, 0.5);
  const double bc = integrate(
      [&](double x) { return std::exp(0.5 * (p.log_density(Point{x}) + q.log_density(Point{x}))); }, -INFINITY,
      INFINITY);
  EXPECT_NEAR(hellinger_sq_gaussian(p, q), 1.0 - bc, 1e-8);
}

TEST(Hellinger, WeightsToUniform) {
  EXPECT_NEAR(weight_hellinger_to_uniform(std::vector<double>(7, 3.0)), 0.0, 1e-15);
  EXPECT_NEAR(weight_hellinger_to_uniform(std::vector<double>{0.0, 0.0, 5.0, 0.0}), 0.5, 1e-15);
}

TEST(Ar, MarginalEndpoints) {
  const auto m0 = ar_marginal(0, 0.9, 3);
  EXPECT_EQ(m0.as_gaussian().mean, std::vector<double>(3, 10.0));
  EXPECT_EQ(m0.as_gaussian().var, std::vector<double>(3, 5.0));
  const auto inf = ar_marginal(2000, 0.9, 2);
  EXPECT_NEAR(inf.as_gaussian().mean[0], 0.0, 1e-12);
  EXPECT_NEAR(inf.as_gaussian().var[0], 1.0, 1e-12);
}

TEST(Ar, SimulatedMarginalAtTen) {
  RngStream s(3);
  const auto init = ar_initial(1);
  const auto target = ar_marginal(10, 0.9, 1);
  MeanAccumulator acc;
  std::vector<double> xs;
  for (int r = 0; r < 100'000; ++r) {
    Point x = init.sample(s);
    for (int t = 0; t < 10; ++t) x = ar_kernel_step(x, 0.9, s);
    acc.add(x[0]);
    xs.push_back(x[0]);
  }
  EXPECT_LT(std::abs(acc.mean() - target.as_gaussian().mean[0]), 3.0 * acc.standard_error());
  EXPECT_GT(ks_test(xs, [&](double x) { return cdf_1d(target, x); }).p_value, 0.001);
}

// Both bound series stay above the exact TV at every t.
TEST(Ar, BoundsAreValid) {
  const std::size_t c = 4, horizon = 80;
  const double rho = 0.9;
  const auto pi0 = ar_initial(1), pi = iso(1, 0.0, 1.0);
  const auto coupler = coupler_by_name("poisson");
  RngStream s(4);
  std::vector<std::optional<std::size_t>> taus;
  for (int r = 0; r < 4000; ++r) taus.push_back(ar_meeting_time(c, rho, 1, coupler, 10'000, s));
  const auto alpha = estimate_alpha_C(pi0, pi, c, 100'000, s);
  const auto b = bound_curve(taus, horizon, omega_gaussian(pi0, pi), c, alpha.mean);
  ASSERT_TRUE(b.johnson);
  for (std::size_t t = 0; t <= horizon; ++t) {
    const double tv = tv_1d(ar_marginal(t, rho, 1), pi);
    // slack: binomial noise of the tail and MC noise of alpha
    const double slack = 3.0 * std::sqrt(0.25 / taus.size()) / johnson_denominator(omega_gaussian(pi0, pi).value, c) +
                         3.0 * alpha.standard_error;
    EXPECT_GE(b.combined[t] + slack, tv) << t;
  }
}

TEST(Harmonize, ConservesTotalWeight) {
  RngStream s(5);
  auto we = random_ensemble(200, 10, s);
  const double before = we.total_weight();
  const auto coupler = coupler_by_name("poisson");
  for (int t = 0; t < 30; ++t) {
    harmonize_step(we, [](const Point& x) { return ar_kernel_measure(x, 0.5); }, coupler, s);
    EXPECT_NEAR(we.total_weight(), before, 1e-9 * before);
  }
}

TEST(Harmonize, NoCoalescenceLeavesEverythingAlone) {
  RngStream s(6);
  auto we = random_ensemble(40, 4, s);
  const auto w = we.weights;
  const auto g = we.groups;
  const auto info = harmonize_step(we, [](const Point& x) { return ar_kernel_measure(x, 0.5); }, independent, s);
  EXPECT_EQ(info.coalesced_groups, 0u);
  EXPECT_EQ(we.weights, w);
  EXPECT_EQ(we.groups, g);
}

TEST(Harmonize, SingleCoalescedGroupKeepsGrouping) {
  RngStream s(7);
  auto we = random_ensemble(40, 4, s);
  const auto g = we.groups;
  std::size_t calls = 0;
  const Coupler once = [&](std::span<const Measure> ms, RngStream& st) {
    return calls++ == 3 ? collapse(ms, st) : independent(ms, st);
  };
  const auto info = harmonize_step(we, [](const Point& x) { return ar_kernel_measure(x, 0.5); }, once, s);
  EXPECT_EQ(info.coalesced_groups, 1u);
  EXPECT_FALSE(info.reshuffled);
  EXPECT_EQ(we.groups, g);
}

TEST(Harmonize, OneGroupAllEqualGivesGlobalMean) {
  RngStream s(8);
  auto we = random_ensemble(12, 12, s);
  const double mean = we.total_weight() / 12.0;
  harmonize_step(we, [](const Point& x) { return ar_kernel_measure(x, 0.5); }, collapse, s);
  for (double w : we.weights) EXPECT_NEAR(w, mean, 1e-12);
}

TEST(Harmonize, ReshufflePermutesCoalescedGroups) {
  RngStream s(9);
  auto we = random_ensemble(40, 4, s);
  const auto info = harmonize_step(we, [](const Point& x) { return ar_kernel_measure(x, 0.5); }, collapse, s);
  EXPECT_EQ(info.coalesced_groups, 10u);
  EXPECT_TRUE(info.reshuffled);
  std::vector<std::size_t> all;
  for (const auto& grp : we.groups) {
    EXPECT_EQ(grp.size(), 4u);
    all.insert(all.end(), grp.begin(), grp.end());
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(40);
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(all, expect);
}

TEST(Harmonize, PairGroupsGiveClustersOfAtMostTwo) {
  RngStream s(10);
  auto we = random_ensemble(100, 2, s);
  const auto coupler = coupler_by_name("poisson");
  for (int t = 0; t < 20; ++t) {
    const auto info =
        harmonize_step(we, [](const Point& x) { return ar_kernel_measure(x, 0.5); }, coupler, s);
    EXPECT_LE(info.max_cluster, 2u);
  }
  EXPECT_THROW(WeightedEnsemble(std::vector<Point>(5, Point{0.0}), std::vector<double>(5, 1.0), 2), InvalidInput);
}
