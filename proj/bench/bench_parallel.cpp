// Serial reference vs OpenMP kernels: replicate fan-out and atom scoring.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "grandcouple/grand.hpp"
#include "grandcouple/poisson.hpp"
#include "grandcouple/replicates.hpp"

using namespace grandcouple;

namespace {

std::vector<Measure> gaussian_targets(std::size_t c, std::size_t d) {
  RngStream s(5);
  std::vector<Measure> out;
  for (std::size_t i = 0; i < c; ++i) {
    std::vector<double> m(d);
    for (double& v : m) v = s.normal();
    out.push_back(Measure::gaussian_diag(std::move(m), std::vector<double>(d, 1.0)));
  }
  return out;
}

void BM_ScoreAtoms(benchmark::State& st, bool parallel) {
  const auto c = static_cast<std::size_t>(st.range(0));
  const std::size_t d = 64, n_atoms = 4 * c;
  const auto targets = gaussian_targets(c, d);
  const Measure mu = barycenter(targets);
  RngStream s(9);
  std::vector<Point> atoms;
  for (std::size_t a = 0; a < n_atoms; ++a) atoms.push_back(mu.sample(s));
  std::vector<double> out(n_atoms * c);
  for (auto _ : st) {
    if (parallel) {
      score_atoms_parallel(targets, atoms, out);
    } else {
      score_atoms_serial(targets, atoms, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * n_atoms * c));
}

void BM_MeetingReplicates(benchmark::State& st, bool parallel) {
  const auto prob = meeting_problem(MeetingFamily::gaussian, GrandMethod::pmc_1step, 2);
  const int workers = parallel ? omp_get_max_threads() : 1;
  for (auto _ : st) {
    auto taus = run_replicates(64, workers, [&](std::size_t r) {
      RngStream s = RngStream::derive(1, 0, r);
      return run_until_meet(prob.spec, prob.initial, 8, kDefaultMaxIter, s).steps;
    });
    benchmark::DoNotOptimize(taus.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_ScoreAtoms, serial, false)->Arg(8)->Arg(32)->Arg(128);
BENCHMARK_CAPTURE(BM_ScoreAtoms, openmp, true)->Arg(8)->Arg(32)->Arg(128);
BENCHMARK_CAPTURE(BM_MeetingReplicates, serial, false)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_MeetingReplicates, openmp, true)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
