// Acceptance checks. One PASS/FAIL line per criterion; detail lines are
// indented. Usage: acceptance [--criterion N]...   (no flag runs all eight)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "grandcouple/bounds.hpp"
#include "grandcouple/couplings.hpp"
#include "grandcouple/diagnostics.hpp"
#include "grandcouple/experiments.hpp"
#include "grandcouple/grand.hpp"
#include "grandcouple/poisson.hpp"
#include "grandcouple/quadrature.hpp"
#include "grandcouple/stats.hpp"

using namespace grandcouple;

namespace {

// ---- pinned tolerances ----
constexpr double kLowerBoundTol = 1e-6;
constexpr double kFourDigitTol = 5e-5;  // reference values carry 4 decimals
constexpr double kSigmas = 3.0;
constexpr double kSandwichSlack = 1e-6;
constexpr double kLpTvTol = 1e-6;
constexpr double kOrderingGapSigmas = 5.0;
constexpr double kGaussianMeetTol = 0.15;
constexpr double kStudentMeetTol = 0.20;
constexpr double kJohnsonTol = 1e-3;
constexpr double kAlphaTol = 0.005;
constexpr double kAtomsPerC = 2.0;
constexpr double kWallRatioMax = 2.0;
constexpr double kBaselineGrowthMin = 50.0;
constexpr double kKsLevel = 0.001;
constexpr double kConservationRel = 1e-9;

const double kE1 = std::exp(-1.0);

struct Report {
  bool ok = true;
  void check(bool cond, const std::string& what) {
    std::printf("    %s %s\n", cond ? "ok  " : "FAIL", what.c_str());
    ok = ok && cond;
  }
  void note(const std::string& what) { std::printf("    %s\n", what.c_str()); }
};

std::string f(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string f(const char* format, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, format);
  std::vsnprintf(buf, sizeof buf, format, ap);
  va_end(ap);
  return buf;
}

int workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<double> random_probs(std::size_t n, RngStream& s) {
  std::vector<double> p(n);
  double z = 0.0;
  for (double& v : p) {
    v = s.uniform() < 0.35 ? 0.0 : s.exponential();
    z += v;
  }
  if (z == 0.0) {
    p[s.index(n)] = 1.0;
    z = 1.0;
  }
  for (double& v : p) v /= z;
  return p;
}

double binomial_sigma(double p, std::size_t n) { return std::sqrt(std::max(p * (1 - p), 1e-300) / n); }

// ---------------------------------------------------------------------------

bool criterion_1() {
  Report r;
  const std::vector<std::pair<std::size_t, double>> ref{
      {2, 1.6321}, {4, 2.8964}, {8, 5.4248}, {16, 10.4818}, {32, 20.5957}};
  for (const auto& [c, pv] : ref) {
    const auto ms = shifted_exponential_family(c);
    std::vector<std::size_t> id(c);
    std::iota(id.begin(), id.end(), std::size_t{0});
    const double exact = static_cast<double>(c) - static_cast<double>(c - 1) * kE1;
    const double lb = lower_bound_G(ms, OrderingMode::fixed(id)).value;
    r.check(std::abs(lb - exact) <= kLowerBoundTol,
            f("C=%zu lower bound %.8f vs C-(C-1)/e %.8f", c, lb, exact));
    r.check(std::abs(lb - pv) <= kFourDigitTol, f("C=%zu lower bound vs reference %.4f", c, pv));
    RngStream s = RngStream::derive(101, 1, c);
    const auto e = estimate_expected_G(coupler_by_name("poisson"), ms, 20'000, s);
    r.check(std::abs(e.mean - exact) <= kSigmas * e.standard_error,
            f("C=%zu shared_match E[G] %.4f +- %.4f vs %.4f", c, e.mean, e.standard_error, exact));
  }
  return r.ok;
}

bool criterion_2() {
  Report r;
  RngStream s(202);
  std::size_t c2 = 0, bad_sandwich = 0, bad_tv = 0;
  double worst_tv = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t c = 2 + s.index(2);
    const std::size_t n = 2 + s.index(3);
    std::vector<Measure> ms;
    for (std::size_t i = 0; i < c; ++i) ms.push_back(Measure::finite(random_probs(n, s)));
    const double lb = lower_bound_G(ms, OrderingMode::exhaustive()).value;
    const double lp = lp_optimal_G(ms);
    const double ub = upper_bound_G(pairwise_tv_matrix(ms));
    if (!(lb <= lp + kSandwichSlack && lp <= ub + kSandwichSlack)) {
      ++bad_sandwich;
      r.note(f("instance %d: lb %.9f lp %.9f ub %.9f", inst, lb, lp, ub));
    }
    if (c == 2) {
      ++c2;
      const double err = std::abs(lp - (1.0 + tv_finite(ms[0], ms[1])));
      worst_tv = std::max(worst_tv, err);
      if (err > kLpTvTol) ++bad_tv;
    }
  }
  r.check(bad_sandwich == 0, f("sandwich lb <= lp <= ub on 200 instances (%zu violations)", bad_sandwich));
  r.check(bad_tv == 0, f("C=2: lp = 1 + TV on %zu instances, worst error %.2e", c2, worst_tv));
  return r.ok;
}

bool criterion_3() {
  Report r;
  const std::size_t n = 100'000;
  RngStream s(303);

  auto pair_rate = [&](const Measure& p, const Measure& q, double tv, const std::string& name) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto [x, y] = maximal_pair(p, q, s);
      hits += bitwise_equal(x, y);
    }
    const double rate = static_cast<double>(hits) / n;
    r.check(binomial_z(rate, 1.0 - tv, n) <= kSigmas,
            f("maximal_pair %s: match %.5f vs 1-TV %.5f", name.c_str(), rate, 1.0 - tv));
  };
  const auto fp = Measure::finite({0.5, 0.3, 0.2, 0.0}), fq = Measure::finite({0.1, 0.3, 0.2, 0.4});
  pair_rate(fp, fq, tv_finite(fp, fq), "finite");
  const auto gp = Measure::gaussian_diag({0.0, 0.0}, {1.0, 1.0}), gq = Measure::gaussian_diag({1.0, -0.5}, {1.0, 1.0});
  pair_rate(gp, gq, tv_gaussian_shared_cov(gp.as_gaussian().mean, gq.as_gaussian().mean, 1.0), "gaussian");

  auto inclusion = [&](const Measure& mu, const std::vector<Measure>& nus, double expect, const std::string& name) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < n; ++k) hits += list_coupling(mu, nus, s).matched_index.has_value();
    const double rate = static_cast<double>(hits) / n;
    r.check(binomial_z(rate, expect, n) <= kSigmas,
            f("list_coupling %s: inclusion %.5f vs 1-E_m %.5f", name.c_str(), rate, expect));
  };
  {
    const auto mu = Measure::finite({0.4, 0.4, 0.2, 0.0, 0.0});
    const std::vector<Measure> nus{Measure::finite({0.0, 0.5, 0.5, 0.0, 0.0}), Measure::finite({0.2, 0.0, 0.0, 0.8, 0.0}),
                                   Measure::finite({0.0, 0.0, 0.1, 0.1, 0.8})};
    std::vector<double> avg(5, 0.0);
    for (const auto& nu : nus) {
      for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += nu.as_finite().probs[k] / 3.0;
    }
    const double e = hockey_stick(mu, Measure::finite(avg), 3.0, HockeyStickScheme::exact()).value;
    inclusion(mu, nus, 1.0 - e, "finite m=3");
  }
  {
    const auto mu = Measure::gaussian_diag({0.0}, {1.0});
    const std::vector<Measure> nus{Measure::gaussian_diag({3.0}, {1.0}), Measure::gaussian_diag({-2.5}, {1.0})};
    const double e = hockey_stick(mu, barycenter(nus), 2.0, HockeyStickScheme::quadrature()).value;
    inclusion(mu, nus, 1.0 - e, "gaussian m=2");
  }
  {
    const auto ms = shifted_exponential_family(5);
    const std::vector<Measure> nus(ms.begin() + 1, ms.end());
    inclusion(ms[0], nus, kE1, "shifted-exponential m=4");
  }

  auto pml = [&](const Measure& p, const Measure& q, double tv, const std::string& name) {
    const std::vector<Measure> ms{p, q};
    std::size_t hits = 0;
    for (std::size_t k = 0; k < n; ++k) hits += shared_match(ms, s).draw.g == 1;
    const double rate = static_cast<double>(hits) / n;
    const double floor = pml_pairwise_bound(tv);
    r.check(rate >= floor - kSigmas * binomial_sigma(floor, n),
            f("shared_match %s: match %.5f >= (1-TV)/(1+TV) %.5f", name.c_str(), rate, floor));
  };
  pml(fp, fq, tv_finite(fp, fq), "finite");
  pml(gp, gq, tv_gaussian_shared_cov(gp.as_gaussian().mean, gq.as_gaussian().mean, 1.0), "gaussian");
  return r.ok;
}

bool criterion_4() {
  Report r;
  ExperimentConfig cfg = load_config(std::string(GRANDCOUPLE_SOURCE_DIR) + "/configs/multimarginal_sparse.json");
  cfg.workers = workers();
  const auto out = cmd_multimarginal(cfg);
  struct Cell {
    double mean, se;
  };
  std::map<std::pair<std::size_t, std::string>, Cell> cells;
  std::vector<std::size_t> cs;
  for (const auto& row : out.tables.front().table.rows()) {
    const std::size_t c = std::stoul(row[1]);
    cells[{c, row[2]}] = {std::stod(row[3]), std::stod(row[4])};
    if (cs.empty() || cs.back() != c) cs.push_back(c);
  }
  const std::vector<std::string> good{"greedy-list", "poisson"}, base{"random-anchor", "random-sequence"};
  for (std::size_t c : cs) {
    std::string line = f("C=%zu", c);
    for (const auto& g : good) line += f(" %s %.3f", g.c_str(), cells[{c, g}].mean);
    for (const auto& b : base) line += f(" %s %.3f", b.c_str(), cells[{c, b}].mean);
    r.note(line);
    for (const auto& g : good) {
      for (const auto& b : base) {
        const auto x = cells[{c, g}], y = cells[{c, b}];
        const double se = std::hypot(x.se, y.se);
        if (c == 32) {
          r.check(y.mean - x.mean >= kOrderingGapSigmas * se,
                  f("C=32 %s below %s by %.2f (%.1f SE)", g.c_str(), b.c_str(), y.mean - x.mean,
                    se > 0 ? (y.mean - x.mean) / se : 0.0));
        } else {
          r.check(x.mean <= y.mean + kSigmas * se, f("C=%zu %s <= %s", c, g.c_str(), b.c_str()));
        }
      }
    }
  }
  r.note("reference at C=32: 18.99 / 19.28 vs 23.61 / 23.82 (measures are regenerated, so qualitative)");
  return r.ok;
}

bool criterion_5() {
  Report r;
  const std::vector<GrandMethod> methods{GrandMethod::star_2step, GrandMethod::star_1step, GrandMethod::pmc_2step,
                                         GrandMethod::pmc_1step};
  // reference meeting times, C = 32, d = 1..10, in the order of `methods`
  const std::vector<std::vector<double>> sweep{
      {14.1, 13.3, 12.17, 11.9}, {30, 28, 27, 26},     {50, 46, 44, 42},     {76, 70, 67, 63},
      {114, 102, 97, 91},        {174, 154, 131, 143}, {260, 237, 208, 185}, {414, 366, 311, 273},
      {664, 585, 482, 426},      {1127, 995, 791, 684}};
  MeetingGrid g;
  g.family = MeetingFamily::gaussian;
  g.methods = methods;
  g.chains = {32};
  for (std::size_t d = 1; d <= 10; ++d) g.dims.push_back(d);
  const auto cells = estimate_meeting_curve(g, 1000, 505, workers());
  for (const auto& cell : cells) {
    const std::size_t m = std::find(methods.begin(), methods.end(), cell.method) - methods.begin();
    const double pv = sweep[cell.d - 1][m];
    const double rel = cell.mean_tau / pv - 1.0;
    r.check(cell.censored == 0 && std::abs(rel) <= kGaussianMeetTol,
            f("gaussian d=%zu C=32 %-10s tau %8.2f +- %6.2f ref %7.2f (%+.1f%%)%s", cell.d,
              to_string(cell.method).c_str(), cell.mean_tau, cell.standard_error, pv, 100 * rel,
              cell.censored ? " censored" : ""));
  }
  MeetingGrid t;
  t.family = MeetingFamily::student_t;
  t.methods = methods;
  t.dims = {5};
  t.chains = {16};
  const std::vector<double> tref{596.6, 444.1, 345, 227.8};
  const auto tcells = estimate_meeting_curve(t, 1000, 506, workers());
  for (std::size_t m = 0; m < tcells.size(); ++m) {
    const auto& cell = tcells[m];
    const double rel = cell.mean_tau / tref[m] - 1.0;
    r.check(cell.censored == 0 && std::abs(rel) <= kStudentMeetTol,
            f("student-t d=5 C=16 %-10s tau %8.2f +- %6.2f ref %7.2f (%+.1f%%)", to_string(cell.method).c_str(),
              cell.mean_tau, cell.standard_error, tref[m], 100 * rel));
  }
  r.note(f("student-t pmc-1step / star-2step = %.2f (ref 0.38)", tcells[3].mean_tau / tcells[0].mean_tau));
  return r.ok;
}

bool criterion_6() {
  Report r;
  const std::vector<std::size_t> cs{2, 8, 16, 32, 64, 128};
  // reference 1 - alpha_C and Johnson denominators
  const std::vector<std::vector<double>> alpha{{0.5673, 0.2627, 0.1526, 0.0846, 0.0439, 0.0242},
                                               {0.7468, 0.4748, 0.3289, 0.2039, 0.1149, 0.0653},
                                               {0.8538, 0.6661, 0.5292, 0.3934, 0.2619, 0.1549}};
  const std::vector<std::vector<double>> johnson{{0.4251, 0.8908, 0.9881, 0.9999, 1.0000, 1.0000},
                                                 {0.1135, 0.3824, 0.6186, 0.8546, 0.9788, 0.9996},
                                                 {0.0281, 0.1077, 0.2037, 0.3660, 0.5980, 0.8384}};
  const double w1 = 0.25 * std::exp(-1.0 / 30.0);
  for (std::size_t d = 1; d <= 3; ++d) {
    const auto pi0 = Measure::gaussian_diag(std::vector<double>(d, 1.0), std::vector<double>(d, 16.0));
    const auto pi = Measure::gaussian_diag(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0));
    const auto om = omega_gaussian(pi0, pi);
    r.check(!om.vacuous && std::abs(om.value - std::pow(w1, static_cast<double>(d))) < 1e-14,
            f("d=%zu omega %.8f = omega_1^d", d, om.value));
    for (std::size_t k = 0; k < cs.size(); ++k) {
      const double jd = johnson_denominator(om.value, cs[k]);
      r.check(std::abs(jd - johnson[d - 1][k]) <= kJohnsonTol,
              f("d=%zu C=%3zu johnson %.4f ref %.4f", d, cs[k], jd, johnson[d - 1][k]));
      RngStream s = RngStream::derive(606, d, cs[k]);
      const auto a = estimate_alpha_C(pi0, pi, cs[k], 1'000'000, s);
      const double v = 1.0 - a.mean;
      r.check(std::abs(v - alpha[d - 1][k]) <= kAlphaTol,
              f("d=%zu C=%3zu 1-alpha %.4f +- %.4f ref %.4f (diff %+.4f)", d, cs[k], v, a.standard_error,
                alpha[d - 1][k], v - alpha[d - 1][k]));
    }
  }
  return r.ok;
}

bool criterion_7() {
  Report r;
  ExperimentConfig cfg;
  cfg.experiment = "runtime";
  cfg.seed = 707;
  cfg.replicates = 200;
  cfg.params = {{"chains", 32},
                {"dims", {1, 2, 4, 8, 16, 32, 64, 128, 256, 512}},
                {"baseline_dims", {1, 8}},
                {"baseline_replicates", 3},
                {"proposals", {"barycenter", "single-gaussian"}},
                {"timeout_ms", 120'000}};
  const auto out = cmd_runtime(cfg);
  double lo = INFINITY, hi = 0.0, base1 = 0.0, base8 = 0.0;
  bool atoms_ok = true;
  for (const auto& row : out.tables.front().table.rows()) {
    const std::size_t d = std::stoul(row[1]);
    const double ms = std::stod(row[3]), atoms = std::stod(row[4]);
    r.note(f("%-15s d=%3zu mean %10.4f ms, %12.2f atoms per target, censored %s", row[0].c_str(), d, ms, atoms,
             row[6].c_str()));
    if (row[0] == "barycenter") {
      atoms_ok = atoms_ok && atoms <= kAtomsPerC * 32.0 && row[6] == "0";
      lo = std::min(lo, ms);
      hi = std::max(hi, ms);
    } else if (d == 1) {
      base1 = atoms;
    } else if (d == 8) {
      base8 = atoms;
    }
  }
  r.check(atoms_ok, "barycenter atoms examined per target <= 2C at every d");
  r.check(hi / lo < kWallRatioMax, f("barycenter max/min mean wall time over d = %.2f", hi / lo));
  r.check(base1 > 0 && base8 / base1 >= kBaselineGrowthMin,
          f("single-gaussian atoms d=8 / d=1 = %.1f", base1 > 0 ? base8 / base1 : 0.0));
  return r.ok;
}

bool criterion_8() {
  Report r;
  RngStream s(808);

  // marginals of every coupler
  {
    const std::size_t n = 20'000;
    auto chi_ok = [&](const std::string& name, const std::vector<Measure>& ms) {
      const auto cp = coupler_by_name(name);
      std::vector<std::vector<std::size_t>> counts(ms.size(), std::vector<std::size_t>(ms[0].space().size, 0));
      for (std::size_t k = 0; k < n; ++k) {
        const auto d = cp(ms, s);
        for (std::size_t i = 0; i < ms.size(); ++i) ++counts[i][static_cast<std::size_t>(d.values[i][0])];
      }
      double pmin = 1.0;
      for (std::size_t i = 0; i < ms.size(); ++i) {
        pmin = std::min(pmin, chi_square_test(counts[i], ms[i].as_finite().probs).p_value);
      }
      return pmin;
    };
    auto ks_ok = [&](const std::string& name, const std::vector<Measure>& ms) {
      const auto cp = coupler_by_name(name);
      std::vector<std::vector<double>> xs(ms.size());
      for (std::size_t k = 0; k < n; ++k) {
        const auto d = cp(ms, s);
        for (std::size_t i = 0; i < ms.size(); ++i) xs[i].push_back(d.values[i][0]);
      }
      double pmin = 1.0;
      for (std::size_t i = 0; i < ms.size(); ++i) {
        pmin = std::min(pmin, ks_test(xs[i], [&](double x) { return cdf_1d(ms[i], x); }).p_value);
      }
      return pmin;
    };
    RngStream ms_stream(8081);
    const auto sparse = random_sparse_discrete(5, 12, 4, ms_stream);
    const std::vector<Measure> gauss{Measure::gaussian_diag({0.0}, {1.0}), Measure::gaussian_diag({1.0}, {1.0}),
                                     Measure::gaussian_diag({-0.5}, {2.0}), Measure::gaussian_diag({2.0}, {0.5})};
    const auto sexp = shifted_exponential_family(4);
    // per-coordinate tests, so a Bonferroni-style level per coupler and family
    for (const std::string name : {"greedy-list", "poisson", "random-anchor", "random-sequence"}) {
      const double pc = chi_ok(name, sparse);
      r.check(pc > kKsLevel / 5, f("%s chi-square marginals on sparse finite, min p %.4f", name.c_str(), pc));
      const double pe = ks_ok(name, sexp);
      r.check(pe > kKsLevel / 4, f("%s KS marginals on shifted exponentials, min p %.4f", name.c_str(), pe));
      if (name != "greedy-list") {  // no closed-form residuals for gaussians
        const double pg = ks_ok(name, gauss);
        r.check(pg > kKsLevel / 4, f("%s KS marginals on gaussians, min p %.4f", name.c_str(), pg));
      }
    }
  }

  const std::vector<GrandMethod> methods{GrandMethod::pmc_1step, GrandMethod::pmc_2step, GrandMethod::star_1step,
                                         GrandMethod::star_2step};
  // kernels: started at stationarity, every chain stays stationary
  for (GrandMethod m : methods) {
    const CoupledKernelSpec spec{m, Measure::gaussian_diag({0.0}, {1.0}), ProposalKernel::rw_gaussian(2.4)};
    const std::size_t c = 6;
    std::vector<std::vector<double>> xs(c);
    for (int rep = 0; rep < 10'000; ++rep) {
      std::vector<Point> init;
      for (std::size_t i = 0; i < c; ++i) init.push_back(Point{s.normal()});
      ChainEnsemble e(init);
      for (int t = 0; t < 3; ++t) grand_step(e, spec, s);
      for (std::size_t i = 0; i < c; ++i) xs[i].push_back(e.states()[i][0]);
    }
    double pmin = 1.0;
    for (const auto& x : xs) pmin = std::min(pmin, ks_test(x, [&](double v) { return cdf_1d(spec.target, v); }).p_value);
    r.check(pmin > kKsLevel / c, f("%s chains stay stationary, min KS p %.4f", to_string(m).c_str(), pmin));
  }

  // faithfulness
  for (GrandMethod m : methods) {
    const CoupledKernelSpec spec{m, Measure::gaussian_diag({0.0, 0.0}, {1.0, 1.0}), ProposalKernel::rw_gaussian(1.7)};
    bool ok = true;
    for (int traj = 0; traj < 1000 && ok; ++traj) {
      const Point p{s.normal(), s.normal()}, q{s.normal(), s.normal()};
      ChainEnsemble e({p, q, p, Point{s.normal(), s.normal()}, q});
      for (int t = 0; t < 20 && ok; ++t) {
        const auto before = e.states();
        grand_step(e, spec, s);
        for (std::size_t i = 0; i < before.size(); ++i) {
          for (std::size_t j = i + 1; j < before.size(); ++j) {
            if (bitwise_equal(before[i], before[j]) && !bitwise_equal(e.states()[i], e.states()[j])) ok = false;
          }
        }
      }
    }
    r.check(ok, f("%s faithful over 1000 trajectories", to_string(m).c_str()));
  }

  // weight conservation
  {
    std::vector<Point> x;
    std::vector<double> w;
    for (int i = 0; i < 500; ++i) {
      x.push_back(Point{s.normal() * 3.0, s.normal() * 3.0});
      w.push_back(s.exponential());
    }
    WeightedEnsemble we(std::move(x), std::move(w), 10);
    const double total = we.total_weight();
    double worst = 0.0;
    const auto cp = coupler_by_name("poisson");
    for (int t = 0; t < 30; ++t) {
      harmonize_step(we, [](const Point& p) { return ar_kernel_measure(p, 0.9); }, cp, s);
      worst = std::max(worst, std::abs(we.total_weight() - total) / total);
    }
    r.check(worst <= kConservationRel, f("harmonize_step total weight drift %.2e over 30 steps", worst));
  }

  // bound validity on AR(1)
  {
    const std::size_t c = 4, horizon = 100, reps = 10'000;
    const double rho = 0.9;
    const auto pi0 = ar_initial(1), pi = Measure::gaussian_diag({0.0}, {1.0});
    const auto om = omega_gaussian(pi0, pi);
    const double den = johnson_denominator(om.value, c);
    std::vector<double> tv(horizon + 1);
    for (std::size_t t = 0; t <= horizon; ++t) {
      const auto m = ar_marginal(t, rho, 1);
      const std::vector<double> kinks{m.as_gaussian().mean[0], 0.0};
      tv[t] = 0.5 * integrate(
                        [&](double v) {
                          return std::abs(std::exp(m.log_density(Point{v})) - std::exp(pi.log_density(Point{v})));
                        },
                        -INFINITY, INFINITY, kinks, 1e-12);
    }
    const auto cp = coupler_by_name("poisson");
    std::size_t violations = 0;
    double tightest = INFINITY;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      RngStream rs = RngStream::derive(8082, seed, 0);
      std::vector<std::optional<std::size_t>> taus;
      for (std::size_t k = 0; k < reps; ++k) taus.push_back(ar_meeting_time(c, rho, 1, cp, 100'000, rs));
      const auto a = estimate_alpha_C(pi0, pi, c, 100'000, rs);
      const auto b = bound_curve(taus, horizon, om, c, a.mean);
      for (std::size_t t = 0; t <= horizon; ++t) {
        const double tail_sd = std::sqrt(std::max(b.tail[t] * (1 - b.tail[t]), 1.0 / reps) / reps);
        const double slack = kSigmas * (tail_sd / den + a.standard_error);
        tightest = std::min(tightest, b.combined[t] - tv[t]);
        if (b.combined[t] + slack < tv[t]) ++violations;
      }
    }
    r.check(violations == 0, f("min(johnson, listlevel) >= TV on AR(1), 20 seeds x %zu t, %zu violations, "
                               "smallest margin %.4f",
                               horizon + 1, violations, tightest));
  }

  // determinism, including byte-identical files at one worker
  {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "grandcouple_acceptance";
    fs::create_directories(dir);
    auto run = [&](const std::string& stem, const std::string& cfg_text) {
      ExperimentConfig cfg = ExperimentConfig::from_json(nlohmann::json::parse(cfg_text));
      cfg.out = (dir / (stem + ".csv")).string();
      write_outputs(cfg, run_command(cfg), 0.0);
      std::ifstream in(cfg.out, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    const std::vector<std::string> cfgs{
        R"({"experiment":"multimarginal","seed":5,"replicates":300,"family":"random-sparse-discrete","chains":[2,5]})",
        R"({"experiment":"meet","seed":5,"replicates":30,"family":"gaussian","dims":[2],"chains":[4]})",
        R"({"experiment":"diagnose","seed":5,"replicates":30,"dims":[1],"chains":[4],"horizon":20,"alpha_samples":2000})",
        R"({"experiment":"harmonize","seed":5,"chains":200,"d":3,"horizon":5})"};
    for (const auto& c : cfgs) {
      const auto a = run("a", c), b = run("b", c);
      r.check(!a.empty() && a == b, f("byte-identical CSV for %s", nlohmann::json::parse(c)["experiment"].get<std::string>().c_str()));
    }
    RngStream x = RngStream::derive(9, 9, 9), y = RngStream::derive(9, 9, 9);
    const auto prob = meeting_problem(MeetingFamily::gaussian, GrandMethod::star_1step, 3);
    bool same = true;
    for (int k = 0; k < 20; ++k) {
      same = same && run_until_meet(prob.spec, prob.initial, 6, kDefaultMaxIter, x).tau ==
                         run_until_meet(prob.spec, prob.initial, 6, kDefaultMaxIter, y).tau;
    }
    r.check(same, "fixed seed gives identical meeting times");
    fs::remove_all(dir);
  }
  return r.ok;
}

const std::vector<std::pair<const char*, std::function<bool()>>> kCriteria{
    {"shifted-exponential optimality", criterion_1},
    {"LP oracle sandwich", criterion_2},
    {"coupling exactness laws", criterion_3},
    {"multi-marginal ordering on sparse measures", criterion_4},
    {"meeting-time table", criterion_5},
    {"diagnostics table", criterion_6},
    {"runtime scaling", criterion_7},
    {"property suites", criterion_8},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      which.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 2;
    }
  }
  if (which.empty()) {
    for (int k = 1; k <= 8; ++k) which.push_back(k);
  }
  bool all = true;
  for (int k : which) {
    if (k < 1 || k > 8) {
      std::fprintf(stderr, "no criterion %d\n", k);
      return 2;
    }
    const auto& [name, fn] = kCriteria[static_cast<std::size_t>(k - 1)];
    std::printf("criterion %d: %s\n", k, name);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      std::printf("    exception: %s\n", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s) %.1fs\n", ok ? "PASS" : "FAIL", k, name, secs);
    std::fflush(stdout);
    all = all && ok;
  }
  return all ? 0 : 1;
}
