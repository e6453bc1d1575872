#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grandcouple/measures.hpp"
#include "grandcouple/mh.hpp"
#include "grandcouple/point.hpp"
#include "grandcouple/rng.hpp"

namespace grandcouple {

enum class GrandMethod { pmc_1step, pmc_2step, star_1step, star_2step };
enum class MixtureVariant { exact_alpha, ber_half };

std::string to_string(GrandMethod m);
GrandMethod grand_method_from_string(const std::string& s);
std::string to_string(MixtureVariant v);
MixtureVariant mixture_variant_from_string(const std::string& s);

struct CoupledKernelSpec {
  GrandMethod method;
  Measure target;
  ProposalKernel proposal;
  std::size_t reference_index = 0;  // star methods
  MixtureVariant mixture_variant = MixtureVariant::exact_alpha;
};

// C chain states with their bitwise-equality classes.
class ChainEnsemble {
 public:
  explicit ChainEnsemble(std::vector<Point> states);

  const std::vector<Point>& states() const { return states_; }
  const std::vector<int>& labels() const { return labels_; }
  std::size_t size() const { return states_.size(); }
  std::size_t n_classes() const { return members_.size(); }
  // members of each class; classes are numbered by first appearance
  const std::vector<std::vector<std::size_t>>& classes() const { return members_; }
  std::optional<std::size_t> met_at() const { return met_at_; }
  std::size_t t() const { return t_; }

  // New states for every class (indexed like classes()); advances t.
  void advance(const std::vector<Point>& class_states);

 private:
  void relabel();

  std::vector<Point> states_;
  std::vector<int> labels_;
  std::vector<std::vector<std::size_t>> members_;
  std::optional<std::size_t> met_at_;
  std::size_t t_ = 0;
};

void step_pmc_1step(ChainEnsemble& ens, const CoupledKernelSpec& spec, RngStream& stream);
void step_pmc_2step(ChainEnsemble& ens, const CoupledKernelSpec& spec, RngStream& stream);
void step_star_1step(ChainEnsemble& ens, const CoupledKernelSpec& spec, RngStream& stream);
void step_star_2step(ChainEnsemble& ens, const CoupledKernelSpec& spec, RngStream& stream);

// Dispatches on spec.method.
void grand_step(ChainEnsemble& ens, const CoupledKernelSpec& spec, RngStream& stream);

inline constexpr std::size_t kDefaultMaxIter = 100'000;

struct MeetResult {
  std::optional<std::size_t> tau;  // nullopt when censored
  std::size_t steps = 0;
  std::vector<std::size_t> class_trace;  // class count after each step, if requested
};

MeetResult run_until_meet(const CoupledKernelSpec& spec, std::vector<Point> initial,
                          std::size_t max_iter, RngStream& stream, bool trace = false);
MeetResult run_until_meet(const CoupledKernelSpec& spec, const Measure& pi0, std::size_t c,
                          std::size_t max_iter, RngStream& stream, bool trace = false);
MeetResult run_until_meet(const CoupledKernelSpec& spec,
                          const std::function<Point(RngStream&)>& pi0, std::size_t c,
                          std::size_t max_iter, RngStream& stream, bool trace = false);

enum class MeetingFamily { gaussian, student_t, banana_rmala };
std::string to_string(MeetingFamily f);
MeetingFamily meeting_family_from_string(const std::string& s);

struct MeetingProblem {
  CoupledKernelSpec spec;
  std::function<Point(RngStream&)> initial;  // draws one state from pi0
};

// Gaussian: pi = N(0, I), pi0 = N(1, 16 I), rw-gaussian.
// Student-t: Cauchy target (product of t_1), pi0 = N(0, I), multivariate
// t random walk with df 2.
// Banana: RMALA with scale 0.4, pi0 uniform on [-2, 2]^2 (d must be 2).
// `scale` overrides the default proposal scale when set.
MeetingProblem meeting_problem(MeetingFamily family, GrandMethod method, std::size_t d,
                               std::optional<double> scale = std::nullopt);

struct MeetingCell {
  MeetingFamily family;
  GrandMethod method;
  std::size_t d = 0;
  std::size_t c = 0;
  double mean_tau = 0.0;
  double standard_error = 0.0;
  double censor_rate = 0.0;
  std::size_t n = 0;  // uncensored replicates
  std::size_t censored = 0;
  std::vector<std::optional<std::size_t>> taus;  // per replicate, in order
};

struct MeetingGrid {
  MeetingFamily family = MeetingFamily::gaussian;
  std::vector<GrandMethod> methods;
  std::vector<std::size_t> dims;
  std::vector<std::size_t> chains;
  std::optional<double> scale;
  std::size_t max_iter = kDefaultMaxIter;
};

// Cartesian product of the grid; replicate r of cell k uses the stream
// derived from (seed, k, r).
std::vector<MeetingCell> estimate_meeting_curve(const MeetingGrid& grid, std::size_t n_reps,
                                                std::uint64_t seed, int workers = 1);

}  // namespace grandcouple
