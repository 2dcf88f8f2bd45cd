#pragma once

// Berry-Esseen machinery: the smoothing inequality, the explicit bound with
// the integral of |f(t)|^n / t, the cutoff choice T_n, and the reverse
// (transform-side) check driven by measured Kolmogorov distances.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "cltlab/charfn.hpp"
#include "cltlab/comparison.hpp"
#include "cltlab/distribution.hpp"
#include "cltlab/edgeworth.hpp"
#include "cltlab/quadrature.hpp"

namespace cltlab {

using TransformFn = std::function<std::complex<double>(double)>;

struct SmoothingReport {
  double integral_term = 0.0;  // int_0^T |f - g| / t dt
  double dt_term = 0.0;        // D / T
  double T = 0.0;
  double rhs_total = 0.0;
  double quadrature_error_estimate = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

// Panel edges: lo, every breakpoint strictly inside, hi.
inline std::vector<double> panel_edges(double lo, double hi, const std::vector<double>& breakpoints) {
  std::vector<double> e{lo};
  for (double b : breakpoints)
    if (b > lo && b < hi) e.push_back(b);
  std::sort(e.begin() + 1, e.end());
  e.push_back(hi);
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

inline std::vector<double> multiples(double period, double hi) {
  std::vector<double> out;
  if (!(period > 0.0)) return out;
  for (double k = 1.0; k * period < hi; k += 1.0) out.push_back(k * period);
  return out;
}

inline void check_accuracy(const QuadResult& r) {
  if (!(r.error < 1e-9 * (1.0 + std::abs(r.value))))
    throw QuadratureFailure("quadrature error estimate " + format_double(r.error) + " exceeds the target");
}

// Zeros of Re(h) and Im(h) on (lo, hi): sign changes on a uniform scan,
// then bisection. |f - g| has a kink wherever f - g vanishes.
inline std::vector<double> component_roots(const TransformFn& h, double lo, double hi, std::size_t cells) {
  std::vector<double> roots;
  const double step = (hi - lo) / double(cells);
  std::complex<double> prev = h(lo + 0.5 * step);
  double t_prev = lo + 0.5 * step;
  for (std::size_t i = 1; i < cells; ++i) {
    const double t = lo + step * (double(i) + 0.5);
    const std::complex<double> cur = h(t);
    for (int part = 0; part < 2; ++part) {
      auto comp = [&](std::complex<double> z) { return part == 0 ? z.real() : z.imag(); };
      if ((comp(prev) < 0.0) == (comp(cur) < 0.0) || comp(prev) == 0.0 || comp(cur) == 0.0) continue;
      double a = t_prev, b = t;
      const bool neg_at_a = comp(prev) < 0.0;
      for (int it = 0; it < 60 && b - a > 1e-15 * b; ++it) {
        const double m = 0.5 * (a + b);
        if ((comp(h(m)) < 0.0) == neg_at_a)
          a = m;
        else
          b = m;
      }
      roots.push_back(0.5 * (a + b));
    }
    prev = cur;
    t_prev = t;
  }
  return roots;
}

}  // namespace detail

/// int_0^T |f(t) - g(t)| / t dt + D / T. The integrand is bounded at 0
/// because f(0) = g(0) = 1; Gauss-Kronrod nodes never touch the endpoint.
/// Panels break at `breakpoints` (peaks of |f|) and at located zeros of f - g.
inline SmoothingReport smoothing_rhs(const TransformFn& f, const TransformFn& g, double T, double D,
                                     const std::vector<double>& breakpoints = {}) {
  if (!(T > 0.0)) throw DomainError("smoothing_rhs: T must be positive");
  if (!(D > 0.0)) throw DomainError("smoothing_rhs: D must be positive");
  PanelIntegrator quad;
  const TransformFn diff = [&](double t) { return f(t) - g(t); };
  auto breaks = detail::component_roots(diff, 0.0, T, std::max<std::size_t>(2000, static_cast<std::size_t>(200.0 * T)));
  breaks.insert(breaks.end(), breakpoints.begin(), breakpoints.end());
  const auto edges = detail::panel_edges(0.0, T, breaks);
  auto h = [&](double t) { return std::abs(diff(t)) / t; };
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) quad.integrate(h, edges[i], edges[i + 1], 1e-11, 1e-14);
  const auto r = quad.result();
  detail::check_accuracy(r);
  SmoothingReport rep;
  rep.integral_term = r.value;
  rep.dt_term = D / T;
  rep.T = T;
  rep.rhs_total = rep.integral_term + rep.dt_term;
  rep.quadrature_error_estimate = r.error;
  rep.evaluations = r.evaluations;
  return rep;
}

struct Lemma21Report {
  double moment_term = 0.0;    // beta4 / (sigma^4 n)
  double cutoff_term = 0.0;    // 1 / (T sigma sqrt n)
  double tail_integral = 0.0;  // int_{sigma/sqrt(beta4)}^T |f(t)|^n / t dt
  double rhs_total = 0.0;
  double T = 0.0;
  double T0 = 0.0;             // sigma^2 sqrt(n) / sqrt(beta4)
  double t_lower = 0.0;        // sigma / sqrt(beta4)
  bool admissible = false;     // T >= sigma / sqrt(beta4)
  bool non_decaying_tail = false;  // |f| returns to 1 inside the range
  double quadrature_error_estimate = 0.0;
  std::uint64_t n = 0;
};

/// Base transform described by 1 - |f(t)| (accurate near the peaks), the
/// moments, and the spacing of the peaks of |f|.
struct TransformModel {
  std::function<double(double)> one_minus_abs;
  double sigma2 = 1.0;
  double beta4 = 1.0;
  double peak_period = 0.0;  // 0: no known peak lattice

  static TransformModel from_spec(const CharSpec& spec) {
    const Moments m = moments(to_distribution(spec));
    auto ev = std::make_shared<CharEvaluator>(spec);
    return {[ev](double t) { return ev->one_minus_abs(t); }, m.sigma2, m.beta4,
            spec.form == CharSpec::Form::Product ? std::numbers::pi : 2.0 * std::numbers::pi};
  }
  static TransformModel from_distribution(const DiscreteDist& d, double peak_period = 0.0) {
    const Moments m = moments(d);
    return {[d](double t) { return 1.0 - std::abs(fs_transform(d, t)); }, m.sigma2, m.beta4, peak_period};
  }
};

inline Lemma21Report lemma21_rhs(const TransformModel& model, std::uint64_t n, double T) {
  if (n < 1) throw DomainError("lemma21_rhs: n must be at least 1");
  Lemma21Report r;
  r.n = n;
  const double sigma = std::sqrt(model.sigma2), nn = double(n);
  r.t_lower = sigma / std::sqrt(model.beta4);
  r.T0 = model.sigma2 * std::sqrt(nn) / std::sqrt(model.beta4);
  r.T = T;
  r.admissible = T >= r.t_lower;
  if (!r.admissible)
    throw InadmissibleT("lemma21_rhs: T = " + format_double(T) + " is below sigma/sqrt(beta4) = " +
                        format_double(r.t_lower));
  r.moment_term = model.beta4 / (model.sigma2 * model.sigma2 * nn);
  r.cutoff_term = 1.0 / (T * sigma * std::sqrt(nn));
  if (T > r.t_lower) {
    // |f|^n = exp(n log1p(-u)) stays accurate when |f| is within 1e-8 of 1.
    auto h = [&](double t) {
      const double u = model.one_minus_abs(t);
      return u >= 1.0 ? 0.0 : std::exp(nn * std::log1p(-u)) / t;
    };
    const auto peaks = detail::multiples(model.peak_period, T);
    for (double p : peaks)
      if (p > r.t_lower && model.one_minus_abs(p) < 1e-14) r.non_decaying_tail = true;
    PanelIntegrator quad;
    const auto edges = detail::panel_edges(r.t_lower, T, peaks);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) quad.integrate(h, edges[i], edges[i + 1], 1e-11, 1e-14);
    const auto q = quad.result();
    detail::check_accuracy(q);
    r.tail_integral = q.value;
    r.quadrature_error_estimate = q.error;
  }
  r.rhs_total = r.moment_term + r.cutoff_term + r.tail_integral;
  return r;
}

inline Lemma21Report lemma21_rhs(const CharSpec& spec, std::uint64_t n, double T) {
  return lemma21_rhs(TransformModel::from_spec(spec), n, T);
}

inline Lemma21Report lemma21_rhs(const DiscreteDist& base, std::uint64_t n, double T, double peak_period = 0.0) {
  return lemma21_rhs(TransformModel::from_distribution(base, peak_period), n, T);
}

struct CutoffChoice {
  double T = 0.0;
  double r = 0.0;
  double b = 0.0;
};

/// T_n = (b n)^{1/p} (log n)^{-r} with r = (q + 1)/p and b = a p^q / 3.
inline CutoffChoice prop22_cutoff(double p, double q, std::uint64_t n, double a_const) {
  if (!(p > 0.0)) throw DomainError("prop22_cutoff: p must be positive");
  if (n < 3) throw DomainError("prop22_cutoff: n must be at least 3");
  if (!(a_const > 0.0)) throw DomainError("prop22_cutoff: a must be positive");
  CutoffChoice c;
  c.r = (q + 1.0) / p;
  c.b = a_const * std::pow(p, q) / 3.0;
  c.T = std::pow(c.b * double(n), 1.0 / p) * std::pow(std::log(double(n)), -c.r);
  return c;
}

// ---------------------------------------------------------------------------
// Transform-side check driven by exact Kolmogorov distances.

struct Prop51Row {
  std::uint64_t n = 0;
  double delta = 0.0;          // sup |F_n - Phi_3|
  double constant = 0.0;       // 24.2, or 16.02 when alpha3 = 0
  std::size_t points = 0;
  std::size_t violations = 0;  // grid points where |f_n| exceeds the chain bound
  double worst_margin = 0.0;   // min over the grid of bound - |f_n|
  double c_implied = 0.0;      // max over s >= sqrt n of |f_n(s)| / (tau n^{-1/p} log(n+1)^{q+1/2}), tau = s/sqrt n
  double c_argmax = 0.0;       // s attaining c_implied
};

struct Prop51Report {
  std::vector<Prop51Row> rows;
  std::size_t violations = 0;
  double c_ratio = 0.0;  // max/min of c_implied over rows
  double p = 0.0, q = 0.0;
};

/// For each n: Delta_n against Phi_3 (Phi when alpha3 = 0), then on every s
/// of the grid checks |f_n(s)| <= 1.3 e^{-s^2/8} + c |s| Delta_n log^{1/2}(e + 1/Delta_n)
/// with f_n(s) = f(s / (sigma sqrt n))^n, and reports the implied constant.
/// `grid_for` supplies the s-grid for each n.
inline Prop51Report prop51_check(const DiscreteDist& base, const std::vector<std::uint64_t>& n_list, double p,
                                 double q, const std::function<std::vector<double>(std::uint64_t)>& grid_for,
                                 std::size_t cap = kDefaultAtomCap) {
  if (!(p > 0.0)) throw DomainError("prop51_check: p must be positive");
  const Moments mo = moments(base);
  const double sigma = std::sqrt(mo.sigma2);
  const bool symmetric = std::abs(mo.alpha3) <= 1e-14 * std::pow(mo.sigma2, 1.5);
  Prop51Report rep;
  rep.p = p;
  rep.q = q;
  for (std::uint64_t n : n_list) {
    Prop51Row row;
    row.n = n;
    const auto d = zn_dist(base, n, cap);
    const EdgeworthParams ep(symmetric ? 0.0 : mo.alpha3, sigma, n, mo.beta4);
    row.delta = kolmogorov_distance(d, EdgeworthCdf(ep)).delta;
    row.constant = symmetric ? 16.02 : 24.2;
    const double nn = double(n), rn = std::sqrt(nn);
    const double scale_c = std::pow(nn, -1.0 / p) * std::pow(std::log(nn + 1.0), q + 0.5);
    const double dev = row.delta * std::sqrt(std::log(std::numbers::e + 1.0 / row.delta));
    row.worst_margin = std::numeric_limits<double>::infinity();
    for (double s : grid_for(n)) {
      const double fb = std::abs(fs_transform(base, s / (sigma * rn)));
      const double fn = std::pow(fb, nn);
      const double bound = 1.3 * std::exp(-s * s / 8.0) + row.constant * std::abs(s) * dev;
      row.worst_margin = std::min(row.worst_margin, bound - fn);
      if (fn > bound) ++row.violations;
      ++row.points;
      if (s >= rn) {
        const double c = fn / ((s / rn) * scale_c);
        if (c > row.c_implied) {
          row.c_implied = c;
          row.c_argmax = s;
        }
      }
    }
    rep.violations += row.violations;
    rep.rows.push_back(row);
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rep.rows) {
    lo = std::min(lo, r.c_implied);
    hi = std::max(hi, r.c_implied);
  }
  rep.c_ratio = rep.rows.empty() || !(lo > 0.0) ? std::numeric_limits<double>::infinity() : hi / lo;
  return rep;
}

/// lo, lo + step, ... up to hi.
inline std::vector<double> uniform_grid(double lo, double hi, double step) {
  std::vector<double> g;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) g.push_back(lo + step * double(i));
  return g;
}

}  // namespace cltlab
