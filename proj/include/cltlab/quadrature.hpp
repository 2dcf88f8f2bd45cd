#pragma once

// Adaptive Gauss-Kronrod integration with an evaluation budget, and a
// fixed Gauss-Legendre rule for short smooth pieces.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "cltlab/errors.hpp"

namespace cltlab {

inline constexpr std::size_t kQuadratureBudget = 1'000'000;

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
};

/// Accumulates panel integrals against a shared evaluation budget.
class PanelIntegrator {
 public:
  explicit PanelIntegrator(std::size_t budget = kQuadratureBudget) : budget_(budget) {}

  /// Integral over [a, b]; rel_tol is relative to the panel's L1 norm.
  /// With abs_tol > 0 a panel whose integral is negligible stops refining
  /// once its error estimate falls below abs_tol.
  double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-12,
                   double abs_tol = 0.0, unsigned max_depth = 18) {
    if (!(b > a)) return 0.0;
    auto counted = [&](double x) {
      if (++evals_ > budget_)
        throw QuadratureFailure("quadrature exceeded " + std::to_string(budget_) + " evaluations");
      return f(x);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double err = 0.0, l1 = 0.0;
    double tol = rel_tol;
    if (abs_tol > 0.0) {
      double v0 = GK::integrate(counted, a, b, 0, rel_tol, &err, &l1);
      if (err <= abs_tol) {
        total_.value += v0;
        total_.error += err;
        return v0;
      }
      if (l1 > 0.0) tol = std::max(rel_tol, abs_tol / l1);
    }
    const double v = GK::integrate(counted, a, b, max_depth, tol, &err, &l1);
    total_.value += v;
    total_.error += err;
    return v;
  }

  QuadResult result() const { return {total_.value, total_.error, evals_}; }
  std::size_t evaluations() const { return evals_; }

 private:
  std::size_t budget_;
  std::size_t evals_ = 0;
  QuadResult total_;
};

/// 10-point Gauss-Legendre on [a, b]; exact for polynomials of degree 19.
inline double gauss_legendre10(const std::function<double(double)>& f, double a, double b) {
  static constexpr std::array<double, 5> x = {0.1488743389816312108848260, 0.4333953941292471907992659,
                                              0.6794095682990244062343274, 0.8650633666889845107320967,
                                              0.9739065285171717200779640};
  static constexpr std::array<double, 5> w = {0.2955242247147528701738930, 0.2692667193099963550912269,
                                              0.2190863625159820439955349, 0.1494513491505805931457763,
                                              0.0666713443086881375935688};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < 5; ++i) s += w[i] * (f(c - h * x[i]) + f(c + h * x[i]));
  return s * h;
}

/// Composite Simpson rule with `intervals` (even) subintervals; test oracle.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t intervals) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / double(intervals);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + h * double(i));
  return s * h / 3.0;
}

}  // namespace cltlab
