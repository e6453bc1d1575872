#include "grandcouple/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace grandcouple {
namespace {

constexpr int kMaxDepth = 48;
constexpr int kInitialPanels = 16;

struct Simpson {
  const std::function<double(double)>& g;

  double recurse(double a, double b, double fa, double fm, double fb, double whole,
                 double tol, int depth) const {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = g(lm);
    const double frm = g(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth >= kMaxDepth || std::abs(delta) <= 15.0 * tol) {
      return left + right + delta / 15.0;
    }
    return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }

  double panel(double a, double b, double tol) const {
    const double fa = g(a);
    const double fb = g(b);
    const double m = 0.5 * (a + b);
    const double fm = g(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return recurse(a, b, fa, fm, fb, whole, tol, 0);
  }

  double run(double a, double b, double tol) const {
    double total = 0.0;
    const double h = (b - a) / kInitialPanels;
    for (int i = 0; i < kInitialPanels; ++i) {
      const double lo = a + i * h;
      const double hi = (i + 1 == kInitialPanels) ? b : lo + h;
      total += panel(lo, hi, tol / kInitialPanels);
    }
    return total;
  }
};

// Value of f at an infinite abscissa is taken as zero (densities vanish).
double guarded(const std::function<double(double)>& f, double x, double jac) {
  if (!std::isfinite(x) || !std::isfinite(jac)) return 0.0;
  const double v = f(x) * jac;
  return std::isfinite(v) ? v : 0.0;
}

double finite_piece(const std::function<double(double)>& f, double a, double b, double tol) {
  std::function<double(double)> g = [&](double x) { return guarded(f, x, 1.0); };
  return Simpson{g}.run(a, b, tol);
}

// ∫_a^inf f, x = a + t / (1 - t).
double upper_half_line(const std::function<double(double)>& f, double a, double tol) {
  std::function<double(double)> g = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double s = 1.0 - t;
    return guarded(f, a + t / s, 1.0 / (s * s));
  };
  return Simpson{g}.run(0.0, 1.0, tol);
}

// ∫_-inf^b f, x = b - t / (1 - t).
double lower_half_line(const std::function<double(double)>& f, double b, double tol) {
  std::function<double(double)> g = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double s = 1.0 - t;
    return guarded(f, b - t / s, 1.0 / (s * s));
  };
  return Simpson{g}.run(0.0, 1.0, tol);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 std::span<const double> breakpoints, double abs_tol) {
  if (!(lo < hi)) return 0.0;
  std::vector<double> cuts;
  for (double b : breakpoints) {
    if (std::isfinite(b) && b > lo && b < hi) cuts.push_back(b);
  }
  if (cuts.empty() && !std::isfinite(lo) && !std::isfinite(hi)) cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<double> nodes;
  nodes.push_back(lo);
  nodes.insert(nodes.end(), cuts.begin(), cuts.end());
  nodes.push_back(hi);
  const double tol = abs_tol / static_cast<double>(nodes.size() - 1);

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double a = nodes[i];
    const double b = nodes[i + 1];
    if (std::isfinite(a) && std::isfinite(b)) {
      total += finite_piece(f, a, b, tol);
    } else if (std::isfinite(a)) {
      total += upper_half_line(f, a, tol);
    } else if (std::isfinite(b)) {
      total += lower_half_line(f, b, tol);
    } else {
      total += lower_half_line(f, 0.0, 0.5 * tol) + upper_half_line(f, 0.0, 0.5 * tol);
    }
  }
  return total;
}

}  // namespace grandcouple
