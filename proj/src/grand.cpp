#include "grandcouple/grand.hpp"

#include <cmath>
#include <limits>

#include "grandcouple/errors.hpp"
#include "grandcouple/poisson.hpp"
#include "grandcouple/replicates.hpp"
#include "grandcouple/stats.hpp"

namespace grandcouple {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kAtomCap = 10'000'000;

double log_sum_exp(const std::vector<double>& a, const std::vector<double>& b) {
  double hi = kNegInf;
  for (std::size_t k = 0; k < a.size(); ++k) hi = std::max(hi, a[k] + b[k]);
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::exp(a[k] + b[k] - hi);
  return hi + std::log(s);
}

// One anchor per class plus the class weights n_k / C.
struct ClassView {
  std::vector<Anchor> anchors;
  std::vector<double> log_w;
  std::vector<double> w;
  std::vector<std::size_t> class_of_chain;
};

ClassView view(const ChainEnsemble& ens, const CoupledKernelSpec& spec) {
  ClassView v;
  const double c = static_cast<double>(ens.size());
  for (const auto& members : ens.classes()) {
    v.anchors.push_back(make_anchor(spec.target, spec.proposal, ens.states()[members.front()]));
    if (!(v.anchors.back().log_pi > kNegInf)) {
      throw InvalidInput("grand: a chain occupies a state of zero target density");
    }
    v.w.push_back(static_cast<double>(members.size()) / c);
    v.log_w.push_back(std::log(v.w.back()));
  }
  v.class_of_chain.resize(ens.size());
  for (std::size_t i = 0; i < ens.size(); ++i) {
    v.class_of_chain[i] = static_cast<std::size_t>(ens.labels()[i]);
  }
  return v;
}

// log k(y|a) + log alpha or log(1 - alpha) by the bit u.
double lifted(const CoupledKernelSpec& spec, const Anchor& a, const Anchor& ay, bool u) {
  const double lk = proposal_log_density(spec.proposal, a, ay.x);
  if (!(lk > kNegInf)) return kNegInf;
  const double la = log_accept_prob(spec.proposal, a, ay, lk);
  return lk + (u ? la : log1m_exp(la));
}

// Maximal coupling of y ~ q to x ~ p already drawn.
template <class LogP, class LogQ, class SampleQ>
Point maximal_given(LogP&& log_p, LogQ&& log_q, SampleQ&& sample_q, const Point& x,
                    double log_p_x, RngStream& stream) {
  if (std::log(stream.uniform_pos()) + log_p_x <= log_q(x)) return x;
  for (std::size_t it = 0; it < kRejectionCap; ++it) {
    Point y = sample_q();
    if (std::log(stream.uniform_pos()) + log_q(y) > log_p(y)) return y;
  }
  throw IterationCap("maximal coupling: rejection cap reached");
}

}  // namespace

std::string to_string(GrandMethod m) {
  switch (m) {
    case GrandMethod::pmc_1step: return "pmc-1step";
    case GrandMethod::pmc_2step: return "pmc-2step";
    case GrandMethod::star_1step: return "star-1step";
    case GrandMethod::star_2step: return "star-2step";
  }
  return "?";
}

GrandMethod grand_method_from_string(const std::string& s) {
  if (s == "pmc-1step") return GrandMethod::pmc_1step;
  if (s == "pmc-2step") return GrandMethod::pmc_2step;
  if (s == "star-1step") return GrandMethod::star_1step;
  if (s == "star-2step") return GrandMethod::star_2step;
  throw InvalidInput("unknown grand-coupling method: " + s);
}

std::string to_string(MixtureVariant v) {
  return v == MixtureVariant::exact_alpha ? "exact-alpha" : "ber-half";
}

MixtureVariant mixture_variant_from_string(const std::string& s) {
  if (s == "exact-alpha") return MixtureVariant::exact_alpha;
  if (s == "ber-half") return MixtureVariant::ber_half;
  throw InvalidInput("unknown mixture variant: " + s);
}

ChainEnsemble::ChainEnsemble(std::vector<Point> states) : states_(std::move(states)) {
  if (states_.empty()) throw InvalidInput("ChainEnsemble: no chains");
  relabel();
  if (members_.size() == 1) met_at_ = 0;
}

void ChainEnsemble::relabel() {
  int g = 0;
  labels_ = bitwise_partition(states_, &g);
  members_.assign(static_cast<std::size_t>(g), {});
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    members_[static_cast<std::size_t>(labels_[i])].push_back(i);
  }
}

void ChainEnsemble::advance(const std::vector<Point>& class_states) {
  if (class_states.size() != members_.size()) throw InvalidInput("advance: one state per class");
  for (std::size_t k = 0; k < members_.size(); ++k) {
    for (std::size_t i : members_[k]) states_[i] = class_states[k];
  }
  ++t_;
  relabel();
  if (members_.size() == 1 && !met_at_) met_at_ = t_;
}

void step_pmc_1step(ChainEnsemble& ens, const CoupledKernelSpec& spec, RngStream& stream) {
  const ClassView cv = view(ens, spec);
  const std::size_t k_count = cv.anchors.size();
  const std::size_t c = ens.size();
  const bool half = spec.mixture_variant == MixtureVariant::ber_half;

  std::vector<PfrScanner> scanners;
  scanners.reserve(k_count);
  for (std::size_t k = 0; k < k_count; ++k) scanners.emplace_back(half ? 0.5 * cv.w[k] : cv.w[k]);
  std::vector<char> done(k_count, 0);
  std::size_t remaining = k_count;

  std::vector<Point> ys;
  std::vector<char> us;
  std::vector<double> lk(k_count), la(k_count), lp(k_count);
  double s = 0.0;
  for (std::size_t j = 0; remaining > 0; ++j) {
    if (j >= kAtomCap) throw IterationCap("pmc-1step: atom cap reached");
    s += stream.exponential();
    const std::size_t src = cv.class_of_chain[stream.index(c)];
    Anchor ay = make_anchor(spec.target, spec.proposal, propose(spec.proposal, cv.anchors[src], stream));
    for (std::size_t k = 0; k < k_count; ++k) {
      lk[k] = proposal_log_density(spec.proposal, cv.anchors[k], ay.x);
      la[k] = lk[k] > kNegInf ? log_accept_prob(spec.proposal, cv.anchors[k], ay, lk[k]) : kNegInf;
    }
    const bool u = half ? stream.bernoulli(0.5) : stream.uniform() < std::exp(la[src]);
    for (std::size_t k = 0; k < k_count; ++k) lp[k] = lk[k] + (u ? la[k] : log1m_exp(la[k]));
    const double log_mu = half ? std::log(0.5) + log_sum_exp(lk, cv.log_w) : log_sum_exp(lp, cv.log_w);
    for (std::size_t k = 0; k < k_count; ++k) {
      if (done[k]) continue;
      if (scanners[k].offer(j, s, lp[k] - log_mu)) {
        done[k] = 1;
        --remaining;
      }
    }
    ys.push_back(std::move(ay.x));
    us.push_back(u);
  }

  std::vector<Point> next(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const std::size_t j = scanners[k].best_index();
    next[k] = apply_update(cv.anchors[k].x, ys[j], us[j] != 0);
  }
  ens.advance(next);
}

void step_pmc_2step(ChainEnsemble& ens, const CoupledKernelSpec& spec, RngStream& stream) {
  const ClassView cv = view(ens, spec);
  const std::size_t k_count = cv.anchors.size();
  const std::size_t c = ens.size();

  std::vector<PfrScanner> scanners;
  scanners.reserve(k_count);
  for (std::size_t k = 0; k < k_count; ++k) scanners.emplace_back(cv.w[k]);
  std::vector<char> done(k_count, 0);
  std::size_t remaining = k_count;

  std::vector<Point> ys;
  std::vector<double> lk(k_count);
  double s = 0.0;
  for (std::size_t j = 0; remaining > 0; ++j) {
    if (j >= kAtomCap) throw IterationCap("pmc-2step: atom cap reached");
    s += stream.exponential();
    const std::size_t src = cv.class_of_chain[stream.index(c)];
    Point y = propose(spec.proposal, cv.anchors[src], stream);
    for (std::size_t k = 0; k < k_count; ++k) {
      lk[k] = proposal_log_density(spec.proposal, cv.anchors[k], y);
    }
    const double log_mu = log_sum_exp(lk, cv.log_w);
    for (std::size_t k = 0; k < k_count; ++k) {
      if (done[k]) continue;
      if (scanners[k].offer(j, s, lk[k] - log_mu)) {
        done[k] = 1;
        --remaining;
      }
    }
    ys.push_back(std::move(y));
  }

  // one uniform decides every accept
  const double u = stream.uniform();
  std::vector<Point> next(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const Point& y = ys[scanners[k].best_index()];
    const Anchor ay = make_anchor(spec.target, spec.proposal, y);
    const double la = log_accept_prob(spec.proposal, cv.anchors[k], ay);
    next[k] = apply_update(cv.anchors[k].x, y, u < std::exp(la));
  }
  ens.advance(next);
}

void step_star_2step(ChainEnsemble& ens, const CoupledKernelSpec& spec, RngStream& stream) {
  if (spec.reference_index >= ens.size()) throw InvalidInput("star: reference_index out of range");
  const ClassView cv = view(ens, spec);
  const std::size_t k_count = cv.anchors.size();
  const std::size_t r = cv.class_of_chain[spec.reference_index];
  const Anchor& ar = cv.anchors[r];

  std::vector<Point> ys(k_count);
  ys[r] = propose(spec.proposal, ar, stream);
  const double lp_ref = proposal_log_density(spec.proposal, ar, ys[r]);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (k == r) continue;
    const Anchor& ak = cv.anchors[k];
    ys[k] = maximal_given([&](const Point& y) { return proposal_log_density(spec.proposal, ar, y); },
                          [&](const Point& y) { return proposal_log_density(spec.proposal, ak, y); },
                          [&] { return propose(spec.proposal, ak, stream); }, ys[r], lp_ref, stream);
  }

  const double u = stream.uniform();
  std::vector<Point> next(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const Anchor ay = make_anchor(spec.target, spec.proposal, ys[k]);
    const double la = log_accept_prob(spec.proposal, cv.anchors[k], ay);
    next[k] = apply_update(cv.anchors[k].x, ys[k], u < std::exp(la));
  }
  ens.advance(next);
}

void step_star_1step(ChainEnsemble& ens, const CoupledKernelSpec& spec, RngStream& stream) {
  if (spec.reference_index >= ens.size()) throw InvalidInput("star: reference_index out of range");
  const ClassView cv = view(ens, spec);
  const std::size_t k_count = cv.anchors.size();
  const std::size_t r = cv.class_of_chain[spec.reference_index];
  const Anchor& ar = cv.anchors[r];

  // reference draws (Y, U) from its lifted law
  const Anchor ay_ref = make_anchor(spec.target, spec.proposal, propose(spec.proposal, ar, stream));
  const double lk_ref = proposal_log_density(spec.proposal, ar, ay_ref.x);
  const double la_ref = log_accept_prob(spec.proposal, ar, ay_ref, lk_ref);
  const bool u_ref = stream.uniform() < std::exp(la_ref);
  const double lp_ref = lk_ref + (u_ref ? la_ref : log1m_exp(la_ref));

  std::vector<Point> next(k_count);
  next[r] = apply_update(ar.x, ay_ref.x, u_ref);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (k == r) continue;
    const Anchor& ak = cv.anchors[k];
    if (std::log(stream.uniform_pos()) + lp_ref <= lifted(spec, ak, ay_ref, u_ref)) {
      next[k] = apply_update(ak.x, ay_ref.x, u_ref);
      continue;
    }
    bool found = false;
    for (std::size_t it = 0; it < kRejectionCap && !found; ++it) {
      const Anchor ay = make_anchor(spec.target, spec.proposal, propose(spec.proposal, ak, stream));
      const double lk = proposal_log_density(spec.proposal, ak, ay.x);
      const double la = log_accept_prob(spec.proposal, ak, ay, lk);
      const bool u = stream.uniform() < std::exp(la);
      const double lq = lk + (u ? la : log1m_exp(la));
      if (std::log(stream.uniform_pos()) + lq > lifted(spec, ar, ay, u)) {
        next[k] = apply_update(ak.x, ay.x, u);
        found = true;
      }
    }
    if (!found) throw IterationCap("star-1step: rejection cap reached");
  }
  ens.advance(next);
}

void grand_step(ChainEnsemble& ens, const CoupledKernelSpec& spec, RngStream& stream) {
  switch (spec.method) {
    case GrandMethod::pmc_1step: return step_pmc_1step(ens, spec, stream);
    case GrandMethod::pmc_2step: return step_pmc_2step(ens, spec, stream);
    case GrandMethod::star_1step: return step_star_1step(ens, spec, stream);
    case GrandMethod::star_2step: return step_star_2step(ens, spec, stream);
  }
}

MeetResult run_until_meet(const CoupledKernelSpec& spec, std::vector<Point> initial,
                          std::size_t max_iter, RngStream& stream, bool trace) {
  if (max_iter < 1) throw InvalidInput("run_until_meet: max_iter must be >= 1");
  ChainEnsemble ens(std::move(initial));
  MeetResult out;
  while (!ens.met_at() && ens.t() < max_iter) {
    grand_step(ens, spec, stream);
    if (trace) out.class_trace.push_back(ens.n_classes());
  }
  out.tau = ens.met_at();
  out.steps = ens.t();
  return out;
}

MeetResult run_until_meet(const CoupledKernelSpec& spec,
                          const std::function<Point(RngStream&)>& pi0, std::size_t c,
                          std::size_t max_iter, RngStream& stream, bool trace) {
  if (c == 0) throw InvalidInput("run_until_meet: C must be >= 1");
  std::vector<Point> init;
  init.reserve(c);
  for (std::size_t i = 0; i < c; ++i) init.push_back(pi0(stream));
  return run_until_meet(spec, std::move(init), max_iter, stream, trace);
}

MeetResult run_until_meet(const CoupledKernelSpec& spec, const Measure& pi0, std::size_t c,
                          std::size_t max_iter, RngStream& stream, bool trace) {
  return run_until_meet(
      spec, [&](RngStream& s) { return pi0.sample(s); }, c, max_iter, stream, trace);
}

std::string to_string(MeetingFamily f) {
  switch (f) {
    case MeetingFamily::gaussian: return "gaussian";
    case MeetingFamily::student_t: return "student-t";
    case MeetingFamily::banana_rmala: return "banana-rmala";
  }
  return "?";
}

MeetingFamily meeting_family_from_string(const std::string& s) {
  if (s == "gaussian") return MeetingFamily::gaussian;
  if (s == "student-t") return MeetingFamily::student_t;
  if (s == "banana-rmala") return MeetingFamily::banana_rmala;
  throw InvalidInput("unknown target family: " + s);
}

MeetingProblem meeting_problem(MeetingFamily family, GrandMethod method, std::size_t d,
                               std::optional<double> scale) {
  if (d == 0) throw InvalidInput("meeting_problem: d must be >= 1");
  const double rw = scale.value_or(ProposalKernel::default_rw_scale(d));
  switch (family) {
    case MeetingFamily::gaussian: {
      Measure pi0 = Measure::gaussian_diag(std::vector<double>(d, 1.0), std::vector<double>(d, 16.0));
      return {{method, Measure::gaussian_diag(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)),
               ProposalKernel::rw_gaussian(rw)},
              [pi0](RngStream& s) { return pi0.sample(s); }};
    }
    case MeetingFamily::student_t: {
      Measure pi0 = Measure::gaussian_diag(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0));
      return {{method, Measure::student_t_walk(std::vector<double>(d, 0.0), 1.0, 1.0),
               ProposalKernel::rw_student_t(rw, 2.0)},
              [pi0](RngStream& s) { return pi0.sample(s); }};
    }
    case MeetingFamily::banana_rmala: {
      if (d != 2) throw InvalidInput("banana-rmala: d must be 2");
      return {{method, Measure::banana(2.0, 1.0, 0.05), ProposalKernel::rmala(scale.value_or(0.4))},
              [](RngStream& s) {
                return Point{-2.0 + 4.0 * s.uniform(), -2.0 + 4.0 * s.uniform()};
              }};
    }
  }
  throw InvalidInput("meeting_problem: unknown family");
}

std::vector<MeetingCell> estimate_meeting_curve(const MeetingGrid& grid, std::size_t n_reps,
                                                std::uint64_t seed, int workers) {
  if (grid.methods.empty() || grid.dims.empty() || grid.chains.empty()) {
    throw InvalidInput("meeting grid: methods, dims and chains must be non-empty");
  }
  std::vector<MeetingCell> out;
  std::uint64_t cell_id = 0;
  for (GrandMethod method : grid.methods) {
    for (std::size_t d : grid.dims) {
      for (std::size_t c : grid.chains) {
        const MeetingProblem prob = meeting_problem(grid.family, method, d, grid.scale);
        const std::uint64_t id = cell_id++;
        MeetingCell cell;
        cell.family = grid.family;
        cell.method = method;
        cell.d = d;
        cell.c = c;
        cell.taus = run_replicates(n_reps, workers, [&](std::size_t r) {
          RngStream st = RngStream::derive(seed, id, r);
          return run_until_meet(prob.spec, prob.initial, c, grid.max_iter, st).tau;
        });
        MeanAccumulator acc;
        for (const auto& t : cell.taus) {
          if (t) {
            acc.add(static_cast<double>(*t));
          } else {
            ++cell.censored;
          }
        }
        cell.mean_tau = acc.mean();
        cell.standard_error = acc.standard_error();
        cell.n = acc.count();
        cell.censor_rate = n_reps ? static_cast<double>(cell.censored) / static_cast<double>(n_reps) : 0.0;
        out.push_back(std::move(cell));
      }
    }
  }
  return out;
}

}  // namespace grandcouple
