#include "grandcouple/experiments.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "grandcouple/bounds.hpp"
#include "grandcouple/diagnostics.hpp"
#include "grandcouple/errors.hpp"
#include "grandcouple/grand.hpp"
#include "grandcouple/poisson.hpp"
#include "grandcouple/replicates.hpp"
#include "grandcouple/stats.hpp"

#ifndef GRANDCOUPLE_GIT_REVISION
#define GRANDCOUPLE_GIT_REVISION "unknown"
#endif

namespace grandcouple {

namespace {

using nlohmann::json;

template <class T>
T param(const json& p, const char* key, T fallback) {
  if (!p.contains(key)) return fallback;
  try {
    return p.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

template <class T>
std::vector<T> param_list(const json& p, const char* key, std::vector<T> fallback) {
  auto v = param<std::vector<T>>(p, key, std::move(fallback));
  if (v.empty()) throw InvalidInput(std::string("config: '") + key + "' must not be empty");
  return v;
}

std::size_t reps_or(const ExperimentConfig& cfg, std::size_t fallback) {
  return cfg.replicates > 0 ? cfg.replicates : fallback;
}

// distinct experiment ids for streams that are not per-cell replicates
constexpr std::uint64_t kMeasureStreams = 1ull << 40;
constexpr std::uint64_t kAlphaStreams = 2ull << 40;

const std::vector<std::string> kAllCouplers = {"greedy-list", "poisson", "random-anchor",
                                               "random-sequence"};

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("config: top level must be an object");
  ExperimentConfig c;
  c.params = j;
  try {
    c.experiment = j.value("experiment", std::string{});
    c.seed = j.value("seed", std::uint64_t{0});
    c.replicates = j.value("replicates", std::size_t{0});
    c.workers = j.value("workers", 1);
    c.out = j.value("out", std::string{});
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  for (const char* k : {"experiment", "seed", "replicates", "workers", "out"}) c.params.erase(k);
  if (c.workers < 1) throw InvalidInput("config: workers must be >= 1");
  return c;
}

json ExperimentConfig::to_json() const {
  json j = params;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["replicates"] = replicates;
  j["workers"] = workers;
  j["out"] = out;
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("config: " + path + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw InvalidInput("csv: row width does not match header");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string s;
  auto line = [&s](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return s;
}

void CsvTable::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("csv: cannot write " + path);
  out << str();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(std::size_t v) { return std::to_string(v); }

Coupler coupler_by_name(const std::string& name) {
  if (name == "greedy-list") {
    return [](std::span<const Measure> ms, RngStream& s) {
      return greedy_recursive_list(ms, Ordering::fixed, s);
    };
  }
  if (name == "poisson") {
    return [](std::span<const Measure> ms, RngStream& s) { return shared_match(ms, s).draw; };
  }
  if (name == "random-anchor") {
    return [](std::span<const Measure> ms, RngStream& s) {
      return star_coupling(ms, std::nullopt, s);
    };
  }
  if (name == "random-sequence") {
    return [](std::span<const Measure> ms, RngStream& s) { return sequence_coupling(ms, s); };
  }
  throw InvalidInput("unknown coupler: " + name);
}

std::vector<Measure> random_sparse_discrete(std::size_t c, std::size_t n_states,
                                            std::size_t support, RngStream& stream) {
  if (support < 1 || support > n_states) throw InvalidInput("sparse family: need 1 <= support <= states");
  std::vector<Measure> out;
  std::vector<std::size_t> idx(n_states);
  for (std::size_t i = 0; i < c; ++i) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // partial Fisher-Yates picks the support
    for (std::size_t k = 0; k < support; ++k) {
      std::swap(idx[k], idx[k + stream.index(n_states - k)]);
    }
    std::vector<double> p(n_states, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < support; ++k) {
      const double g = stream.exponential();  // Dirichlet(1) via normalized Exp(1)
      p[idx[k]] = g;
      total += g;
    }
    for (double& v : p) v /= total;
    out.push_back(Measure::finite(std::move(p)));
  }
  return out;
}

std::vector<Measure> shifted_exponential_family(std::size_t c) {
  std::vector<Measure> out;
  for (std::size_t i = 0; i < c; ++i) out.push_back(Measure::shifted_exponential(static_cast<double>(i)));
  return out;
}

CommandOutput cmd_multimarginal(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const auto family = param<std::string>(p, "family", "shifted-exponential");
  const auto chains = param_list<std::size_t>(p, "chains", {2, 4, 8, 16, 32});
  const auto couplers = param_list<std::string>(p, "couplers", kAllCouplers);
  const auto n_states = param<std::size_t>(p, "states", 60);
  const auto support = param<std::size_t>(p, "support", 5);
  const std::size_t reps = reps_or(cfg, 20'000);
  if (family != "shifted-exponential" && family != "random-sparse-discrete" && family != "identical") {
    throw InvalidInput("multimarginal: unknown family " + family);
  }
  std::vector<Coupler> fns;
  for (const auto& name : couplers) fns.push_back(coupler_by_name(name));

  CsvTable t({"family", "c", "coupler", "mean_g", "se", "n", "lower_bound"});
  std::uint64_t cell = 0;
  for (std::size_t c : chains) {
    if (c < 1) throw InvalidInput("multimarginal: C must be >= 1");
    std::vector<Measure> ms;
    RngStream ms_stream = RngStream::derive(cfg.seed, kMeasureStreams, c);
    if (family == "shifted-exponential") {
      ms = shifted_exponential_family(c);
    } else if (family == "random-sparse-discrete") {
      ms = random_sparse_discrete(c, n_states, support, ms_stream);
    } else {
      // a point mass: the recursive list coupler only collapses identical
      // marginals to one cluster when they are degenerate
      std::vector<double> one(n_states, 0.0);
      one[ms_stream.index(n_states)] = 1.0;
      ms.assign(c, Measure::finite(std::move(one)));
    }
    std::vector<std::size_t> identity(c);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    const OrderingMode mode = family == "shifted-exponential" ? OrderingMode::fixed(identity)
                                                              : OrderingMode::greedy();
    const double lb = lower_bound_G(ms, mode).value;

    for (std::size_t k = 0; k < fns.size(); ++k, ++cell) {
      const auto gs = run_replicates(reps, cfg.workers, [&](std::size_t r) {
        RngStream s = RngStream::derive(cfg.seed, cell, r);
        return fns[k](ms, s).g;
      });
      MeanAccumulator acc;
      for (int g : gs) acc.add(g);
      t.add_row({family, fmt(c), couplers[k], fmt(acc.mean()), fmt(acc.standard_error()),
                 fmt(acc.count()), fmt(lb)});
    }
  }
  CommandOutput out;
  out.tables.push_back({"", std::move(t)});
  return out;
}

CommandOutput cmd_meet(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  MeetingGrid grid;
  grid.family = meeting_family_from_string(param<std::string>(p, "family", "gaussian"));
  for (const auto& m : param_list<std::string>(p, "methods", {"star-2step", "star-1step",
                                                               "pmc-2step", "pmc-1step"})) {
    grid.methods.push_back(grand_method_from_string(m));
  }
  grid.dims = param_list<std::size_t>(p, "dims", {8});
  grid.chains = param_list<std::size_t>(p, "chains", {2, 4, 8, 16, 32});
  if (p.contains("scale")) grid.scale = param<double>(p, "scale", 0.0);
  grid.max_iter = param<std::size_t>(p, "max_iter", kDefaultMaxIter);
  const double max_censor = param<double>(p, "max_censor_rate", 0.01);
  for (std::size_t c : grid.chains) {
    if (c < 1) throw InvalidInput("meet: C must be >= 1");
  }
  for (std::size_t d : grid.dims) {
    if (d < 1) throw InvalidInput("meet: d must be >= 1");
  }

  const auto cells = estimate_meeting_curve(grid, reps_or(cfg, 1000), cfg.seed, cfg.workers);
  CsvTable t({"family", "method", "d", "c", "mean_tau", "se", "censor_rate", "n", "censored"});
  CommandOutput out;
  for (const auto& cell : cells) {
    t.add_row({to_string(cell.family), to_string(cell.method), fmt(cell.d), fmt(cell.c),
               fmt(cell.mean_tau), fmt(cell.standard_error), fmt(cell.censor_rate), fmt(cell.n),
               fmt(cell.censored)});
    if (cell.censor_rate > max_censor) {
      out.breach = true;
      out.breach_reason = "censor rate " + fmt(cell.censor_rate) + " above " + fmt(max_censor);
    }
  }
  out.tables.push_back({"", std::move(t)});
  return out;
}

CommandOutput cmd_runtime(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const auto c = param<std::size_t>(p, "chains", 32);
  const auto dims = param_list<std::size_t>(p, "dims", {1, 2, 4, 8, 16, 32, 64, 128, 256, 512});
  // the single-gaussian cost explodes with d; it gets its own sweep
  const auto baseline_dims = param_list<std::size_t>(p, "baseline_dims", {1, 2, 4, 8});
  const auto proposals = param_list<std::string>(p, "proposals", {"barycenter", "single-gaussian"});
  const auto timeout = std::chrono::milliseconds(param<std::int64_t>(p, "timeout_ms", 60'000));
  const std::size_t reps = reps_or(cfg, 200);
  // one d = 8 baseline coupling takes seconds
  const auto baseline_reps = param<std::size_t>(p, "baseline_replicates", 5);
  if (c < 1) throw InvalidInput("runtime: C must be >= 1");
  if (baseline_reps < 1) throw InvalidInput("runtime: baseline_replicates must be >= 1");

  CsvTable t({"proposal", "d", "c", "mean_ms", "mean_atoms_examined", "n", "censored"});
  CommandOutput out;
  std::uint64_t cell = 0;
  for (const auto& name : proposals) {
    ProposalVariant v;
    if (name == "barycenter") {
      v = ProposalVariant::barycenter;
    } else if (name == "single-gaussian") {
      v = ProposalVariant::single_gaussian;
    } else {
      throw InvalidInput("runtime: unknown proposal " + name);
    }
    const auto& ds = v == ProposalVariant::barycenter ? dims : baseline_dims;
    for (std::size_t d : ds) {
      // same targets for both proposals at a given d
      RngStream ts = RngStream::derive(cfg.seed, kMeasureStreams, d);
      std::vector<Measure> targets;
      for (std::size_t i = 0; i < c; ++i) {
        std::vector<double> mean(d);
        for (double& m : mean) m = ts.normal();
        targets.push_back(Measure::gaussian_diag(std::move(mean), std::vector<double>(d, 1.0)));
      }
      RngStream s = RngStream::derive(cfg.seed, cell++, 0);
      const RuntimeProbe r =
          runtime_probe(targets, v, v == ProposalVariant::barycenter ? reps : baseline_reps, s, timeout);
      t.add_row({name, fmt(d), fmt(c), fmt(r.mean_ms), fmt(r.mean_atoms_examined), fmt(r.n),
                 fmt(r.censored)});
      if (r.censored > 0) {
        out.breach = true;
        out.breach_reason = name + " timed out at d=" + fmt(d);
      }
    }
  }
  out.tables.push_back({"", std::move(t)});
  return out;
}

CommandOutput cmd_diagnose(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const auto family = meeting_family_from_string(param<std::string>(p, "family", "gaussian"));
  if (family == MeetingFamily::banana_rmala) throw InvalidInput("diagnose: family must be gaussian or student-t");
  const auto method = grand_method_from_string(param<std::string>(p, "method", "pmc-1step"));
  const auto dims = param_list<std::size_t>(p, "dims", {1, 2, 3});
  const auto chains = param_list<std::size_t>(p, "chains", {2, 8, 16, 32, 64, 128});
  const auto horizon = param<std::size_t>(p, "horizon", 200);
  const auto alpha_n = param<std::size_t>(p, "alpha_samples", 1'000'000);
  const auto max_iter = param<std::size_t>(p, "max_iter", kDefaultMaxIter);
  const std::size_t reps = reps_or(cfg, 1000);
  if (alpha_n < 1) throw InvalidInput("diagnose: alpha_samples must be >= 1");

  CsvTable curves({"d", "c", "t", "tail", "johnson", "johnson_vacuous", "listlevel", "combined"});
  CsvTable alpha({"d", "c", "one_minus_alpha", "alpha_se", "omega", "johnson_denominator"});
  std::uint64_t cell = 0;
  for (std::size_t d : dims) {
    const Measure pi0 = family == MeetingFamily::gaussian
                            ? Measure::gaussian_diag(std::vector<double>(d, 1.0), std::vector<double>(d, 16.0))
                            : Measure::gaussian_diag(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0));
    const MeetingProblem prob = meeting_problem(family, method, d);
    const Measure& pi = prob.spec.target;
    const Omega omega = omega_gaussian(pi0, pi);
    for (std::size_t c : chains) {
      RngStream as = RngStream::derive(cfg.seed, kAlphaStreams, cell);
      const Estimate a = estimate_alpha_C(pi0, pi, c, alpha_n, as);
      alpha.add_row({fmt(d), fmt(c), fmt(1.0 - a.mean), fmt(a.standard_error),
                     omega.vacuous ? std::string("0") : fmt(omega.value),
                     omega.vacuous ? std::string() : fmt(johnson_denominator(omega.value, c))});

      const auto taus = run_replicates(reps, cfg.workers, [&](std::size_t r) {
        RngStream s = RngStream::derive(cfg.seed, cell, r);
        return run_until_meet(prob.spec, prob.initial, c, max_iter, s).tau;
      });
      const BoundCurve b = bound_curve(taus, horizon, omega, c, std::min(1.0, std::max(0.0, a.mean)));
      for (std::size_t s = 0; s <= horizon; ++s) {
        curves.add_row({fmt(d), fmt(c), fmt(s), fmt(b.tail[s]),
                        b.johnson ? fmt((*b.johnson)[s]) : std::string(),
                        b.johnson ? std::string("0") : std::string("1"),
                        fmt((*b.listlevel)[s]), fmt(b.combined[s])});
      }
      ++cell;
    }
  }
  CommandOutput out;
  out.tables.push_back({"", std::move(curves)});
  out.tables.push_back({"_alpha", std::move(alpha)});
  return out;
}

CommandOutput cmd_harmonize(const ExperimentConfig& cfg) {
  const json& p = cfg.params;
  const auto n = param<std::size_t>(p, "chains", 10'000);
  const auto m = param<std::size_t>(p, "group_size", 10);
  const auto d = param<std::size_t>(p, "d", 20);
  const auto rho = param<double>(p, "rho", 0.9);
  const auto horizon = param<std::size_t>(p, "horizon", 100);
  const Coupler coupler = coupler_by_name(param<std::string>(p, "coupler", "poisson"));
  if (m < 2 || n % m != 0) throw InvalidInput("harmonize: chains must be a multiple of group_size >= 2");
  if (!(std::abs(rho) < 1.0)) throw InvalidInput("harmonize: |rho| must be < 1");

  RngStream s = RngStream::derive(cfg.seed, 0, 0);
  const Measure pi0 = ar_initial(d);
  const Measure pi = Measure::gaussian_diag(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0));
  std::vector<Point> xs;
  std::vector<double> logw;
  for (std::size_t i = 0; i < n; ++i) {
    xs.push_back(pi0.sample(s));
    logw.push_back(pi.log_density(xs.back()) - pi0.log_density(xs.back()));
  }
  // weights only matter up to a constant; the floor keeps them positive
  const double top = *std::max_element(logw.begin(), logw.end());
  std::vector<double> w;
  for (double lw : logw) w.push_back(std::exp(std::max(lw - top, -700.0)));
  WeightedEnsemble we(std::move(xs), std::move(w), m);

  auto kernel = [rho](const Point& x) { return ar_kernel_measure(x, rho); };
  CsvTable t({"t", "weight_hellinger", "marginal_hellinger", "total_weight", "coalesced_groups"});
  std::size_t groups = 0;
  for (std::size_t step = 0; step <= horizon; ++step) {
    t.add_row({fmt(step), fmt(weight_hellinger_to_uniform(we.weights)),
               fmt(hellinger_sq_gaussian(ar_marginal(step, rho, d), pi)), fmt(we.total_weight()),
               fmt(groups)});
    if (step == horizon) break;
    groups = harmonize_step(we, kernel, coupler, s).coalesced_groups;
  }
  CommandOutput out;
  out.tables.push_back({"", std::move(t)});
  return out;
}

CommandOutput run_command(const ExperimentConfig& cfg) {
  if (cfg.experiment == "multimarginal") return cmd_multimarginal(cfg);
  if (cfg.experiment == "meet") return cmd_meet(cfg);
  if (cfg.experiment == "runtime") return cmd_runtime(cfg);
  if (cfg.experiment == "diagnose") return cmd_diagnose(cfg);
  if (cfg.experiment == "harmonize") return cmd_harmonize(cfg);
  throw InvalidInput("unknown experiment: " + cfg.experiment);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

void write_outputs(const ExperimentConfig& cfg, const CommandOutput& out, double wall_seconds) {
  namespace fs = std::filesystem;
  const std::string base = cfg.out.empty() ? cfg.experiment + ".csv" : cfg.out;
  fs::path stem(base);
  if (stem.extension() == ".csv") stem.replace_extension();
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());

  json meta;
  meta["config"] = cfg.to_json();
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, fnv1a64(cfg.to_json().dump()));
  meta["config_hash"] = hash;
  meta["git_revision"] = GRANDCOUPLE_GIT_REVISION;
  meta["seed"] = cfg.seed;
  meta["wall_seconds"] = wall_seconds;
  meta["breach"] = out.breach;
  if (out.breach) meta["breach_reason"] = out.breach_reason;
  json files = json::array();
  for (const auto& nt : out.tables) {
    const std::string path = stem.string() + nt.suffix + ".csv";
    nt.table.write(path);
    files.push_back(path);
  }
  meta["tables"] = files;
  std::ofstream m(stem.string() + ".meta.json", std::ios::binary);
  if (!m) throw InvalidInput("cannot write metadata next to " + base);
  m << meta.dump(2) << '\n';
}

}  // namespace grandcouple
