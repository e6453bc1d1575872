#include "grandcouple/mh.hpp"

#include <limits>
#include <numbers>

#include "grandcouple/errors.hpp"

namespace grandcouple {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Eigen::VectorXd grad_log_pi(const Measure& target, std::span<const double> x) {
  if (target.kind() == MeasureKind::banana) {
    const auto g = target.as_banana().grad_log_density(x);
    return Eigen::Vector2d(g[0], g[1]);
  }
  if (target.kind() == MeasureKind::gaussian_diag) {
    const auto& p = target.as_gaussian();
    Eigen::VectorXd g(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) g[static_cast<Eigen::Index>(i)] = -(x[i] - p.mean[i]) / p.var[i];
    return g;
  }
  throw UnsupportedKind("rmala: target needs an analytic gradient and Hessian");
}

Eigen::MatrixXd neg_hessian(const Measure& target, std::span<const double> x) {
  if (target.kind() == MeasureKind::banana) {
    const auto h = target.as_banana().neg_hessian(x);
    Eigen::Matrix2d m;
    m << h[0], h[1], h[2], h[3];
    return m;
  }
  if (target.kind() == MeasureKind::gaussian_diag) {
    const auto& p = target.as_gaussian();
    Eigen::VectorXd diag(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) diag[static_cast<Eigen::Index>(i)] = 1.0 / p.var[i];
    return diag.asDiagonal();
  }
  throw UnsupportedKind("rmala: target needs an analytic gradient and Hessian");
}

double multivariate_t_log_norm(double df, double scale, double d) {
  return std::lgamma(0.5 * (df + d)) - std::lgamma(0.5 * df) -
         0.5 * d * std::log(df * std::numbers::pi) - d * std::log(scale);
}
}  // namespace

std::string to_string(ProposalKind k) {
  switch (k) {
    case ProposalKind::rw_gaussian: return "rw-gaussian";
    case ProposalKind::rw_student_t: return "rw-student-t";
    case ProposalKind::rmala: return "rmala";
  }
  return "?";
}

ProposalKind proposal_kind_from_string(const std::string& s) {
  if (s == "rw-gaussian") return ProposalKind::rw_gaussian;
  if (s == "rw-student-t") return ProposalKind::rw_student_t;
  if (s == "rmala") return ProposalKind::rmala;
  throw InvalidInput("unknown proposal kind: " + s);
}

ProposalKernel ProposalKernel::rw_gaussian(double scale) {
  if (!(scale > 0.0)) throw InvalidInput("proposal scale must be > 0");
  return {ProposalKind::rw_gaussian, scale, 2.0};
}

ProposalKernel ProposalKernel::rw_student_t(double scale, double df) {
  if (!(scale > 0.0)) throw InvalidInput("proposal scale must be > 0");
  if (!(df > 0.0)) throw InvalidInput("proposal df must be > 0");
  return {ProposalKind::rw_student_t, scale, df};
}

ProposalKernel ProposalKernel::rmala(double scale) {
  if (!(scale > 0.0)) throw InvalidInput("proposal scale must be > 0");
  return {ProposalKind::rmala, scale, 2.0};
}

Eigen::MatrixXd regularized_metric(const Measure& target, std::span<const double> x) {
  const Eigen::MatrixXd h = neg_hessian(target, x);
  if (!h.allFinite()) throw InvalidInput("rmala: non-finite Hessian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  Eigen::VectorXd lam = es.eigenvalues().cwiseAbs().cwiseMax(kMetricFloor);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

RmalaGeometry rmala_metric(const Measure& target, std::span<const double> x, double scale) {
  const Eigen::MatrixXd h = neg_hessian(target, x);
  if (!h.allFinite()) throw InvalidInput("rmala: non-finite Hessian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const Eigen::VectorXd lam = es.eigenvalues().cwiseAbs().cwiseMax(kMetricFloor);
  const Eigen::MatrixXd& v = es.eigenvectors();
  const auto d = static_cast<double>(x.size());

  RmalaGeometry g;
  const Eigen::VectorXd grad = grad_log_pi(target, x);
  const Eigen::VectorXd ginv_grad = v * (v.transpose() * grad).cwiseQuotient(lam);
  g.mean = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) +
           0.5 * scale * scale * ginv_grad;
  g.sqrt_cov = scale * v * lam.cwiseSqrt().cwiseInverse().asDiagonal();
  g.sqrt_prec = (lam.cwiseSqrt() / scale).asDiagonal() * v.transpose();
  // log det(s^2 G^-1) = d log s^2 - sum log lam
  g.log_norm = -0.5 * d * kLog2Pi - 0.5 * (d * std::log(scale * scale) - lam.array().log().sum());
  return g;
}

Anchor make_anchor(const Measure& target, const ProposalKernel& kernel, Point x) {
  Anchor a;
  a.log_pi = target.log_density(x);
  if (kernel.kind == ProposalKind::rmala && a.log_pi > kNegInf) {
    a.geom = rmala_metric(target, x, kernel.scale);
  }
  a.x = std::move(x);
  return a;
}

double proposal_log_density(const ProposalKernel& kernel, const Anchor& from,
                            std::span<const double> y) {
  const std::size_t d = from.x.size();
  if (y.size() != d) throw InvalidInput("proposal_log_density: dimension mismatch");
  switch (kernel.kind) {
    case ProposalKind::rw_gaussian: {
      double q = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double z = y[i] - from.x[i];
        q += z * z;
      }
      const double s2 = kernel.scale * kernel.scale;
      return -0.5 * static_cast<double>(d) * (kLog2Pi + std::log(s2)) - 0.5 * q / s2;
    }
    case ProposalKind::rw_student_t: {
      // multivariate t: one shared chi-square mixing variable for all coordinates
      const double nu = kernel.df;
      const double dd = static_cast<double>(d);
      double q = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double z = (y[i] - from.x[i]) / kernel.scale;
        q += z * z;
      }
      return multivariate_t_log_norm(nu, kernel.scale, dd) - 0.5 * (nu + dd) * std::log1p(q / nu);
    }
    case ProposalKind::rmala: {
      if (!from.geom) throw InvalidInput("proposal_log_density: rmala anchor lacks geometry");
      const auto& g = *from.geom;
      const Eigen::VectorXd diff =
          Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(d)) - g.mean;
      return g.log_norm - 0.5 * (g.sqrt_prec * diff).squaredNorm();
    }
  }
  return kNegInf;
}

Point propose(const ProposalKernel& kernel, const Anchor& from, RngStream& stream) {
  const std::size_t d = from.x.size();
  Point y(d);
  switch (kernel.kind) {
    case ProposalKind::rw_gaussian:
      for (std::size_t i = 0; i < d; ++i) y[i] = from.x[i] + kernel.scale * stream.normal();
      break;
    case ProposalKind::rw_student_t: {
      const double w = std::sqrt(2.0 * stream.gamma(0.5 * kernel.df) / kernel.df);
      for (std::size_t i = 0; i < d; ++i) y[i] = from.x[i] + kernel.scale * stream.normal() / w;
      break;
    }
    case ProposalKind::rmala: {
      if (!from.geom) throw InvalidInput("propose: rmala anchor lacks geometry");
      Eigen::VectorXd z(static_cast<Eigen::Index>(d));
      for (std::size_t i = 0; i < d; ++i) z[static_cast<Eigen::Index>(i)] = stream.normal();
      const Eigen::VectorXd v = from.geom->mean + from.geom->sqrt_cov * z;
      for (std::size_t i = 0; i < d; ++i) y[i] = v[static_cast<Eigen::Index>(i)];
      break;
    }
  }
  return y;
}

double log_accept_prob(const ProposalKernel& kernel, const Anchor& x, const Anchor& y,
                       std::optional<double> log_k_xy) {
  if (!(x.log_pi > kNegInf)) throw InvalidInput("accept_prob: current state has zero density");
  if (!(y.log_pi > kNegInf)) return kNegInf;
  double r = y.log_pi - x.log_pi;
  if (!kernel.symmetric()) {
    const double fwd = log_k_xy ? *log_k_xy : proposal_log_density(kernel, x, y.x);
    r += proposal_log_density(kernel, y, x.x) - fwd;
  }
  return std::min(0.0, r);
}

double accept_prob(std::span<const double> x, std::span<const double> y, const Measure& target,
                   const ProposalKernel& kernel) {
  const Anchor ax = make_anchor(target, kernel, Point(x.begin(), x.end()));
  const Anchor ay = make_anchor(target, kernel, Point(y.begin(), y.end()));
  return std::exp(log_accept_prob(kernel, ax, ay));
}

double log1m_exp(double a) {
  if (a >= 0.0) return kNegInf;
  // split point log(1/2) keeps both branches accurate
  return a > -0.6931471805599453 ? std::log(-std::expm1(a)) : std::log1p(-std::exp(a));
}

LiftedState make_lifted(const Measure& target, const ProposalKernel& kernel, Point x) {
  LiftedState s{make_anchor(target, kernel, std::move(x)), &target, kernel};
  if (!(s.anchor.log_pi > kNegInf)) throw InvalidInput("lifted state: zero target density");
  return s;
}

double lifted_log_density(const LiftedState& s, std::span<const double> y, bool u) {
  const double lk = proposal_log_density(s.proposal, s.anchor, y);
  if (!(lk > kNegInf)) return kNegInf;
  const Anchor ay = make_anchor(*s.target, s.proposal, Point(y.begin(), y.end()));
  const double la = log_accept_prob(s.proposal, s.anchor, ay, lk);
  return lk + (u ? la : log1m_exp(la));
}

Point mh_step(const LiftedState& s, RngStream& stream) {
  Point y = propose(s.proposal, s.anchor, stream);
  const Anchor ay = make_anchor(*s.target, s.proposal, y);
  const double la = log_accept_prob(s.proposal, s.anchor, ay);
  const bool u = stream.uniform() < std::exp(la);
  return apply_update(s.anchor.x, y, u);
}

}  // namespace grandcouple
