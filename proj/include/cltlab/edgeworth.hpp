#pragma once

// Normal and third-order Edgeworth approximants, their transforms, and the
// explicit-constant deviation bounds (non-uniform, Wasserstein, transform).

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include "cltlab/comparison.hpp"
#include "cltlab/distribution.hpp"
#include "cltlab/quadrature.hpp"

namespace cltlab {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

inline double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5); }
/// 1 - Phi(x) without cancellation.
inline double std_normal_sf(double x) { return 0.5 * std::erfc(x * std::numbers::sqrt2 * 0.5); }

struct EdgeworthParams {
  double alpha3 = 0.0;
  double sigma = 1.0;
  std::uint64_t n = 1;
  std::optional<double> beta4;

  EdgeworthParams() = default;
  EdgeworthParams(double alpha3_, double sigma_, std::uint64_t n_, std::optional<double> beta4_ = std::nullopt)
      : alpha3(alpha3_), sigma(sigma_), n(n_), beta4(beta4_) {
    if (!(sigma > 0.0)) throw DomainError("Edgeworth sigma must be positive");
    if (n < 1) throw DomainError("Edgeworth n must be at least 1");
  }
  static EdgeworthParams from_moments(const Moments& m, std::uint64_t n) {
    return EdgeworthParams(m.alpha3, std::sqrt(m.sigma2), n, m.beta4);
  }

  /// a = alpha3 / (6 sigma^3 sqrt n).
  double a() const { return alpha3 / (6.0 * sigma * sigma * sigma * std::sqrt(double(n))); }
  /// n >= beta4 / sigma^4 (unknown without beta4).
  std::optional<bool> admissible() const {
    if (!beta4) return std::nullopt;
    return double(n) >= *beta4 / (sigma * sigma * sigma * sigma);
  }
};

/// Real roots of 1 + a (x^3 - 3x) = 0, ascending: three when |a| > 1/2
/// (two distinct at |a| = 1/2), one otherwise, none for a = 0.
inline std::vector<double> phi3_stationary_points(double a) {
  if (a == 0.0) return {};
  const double q = 1.0 / a;  // x^3 - 3x + q = 0
  std::vector<double> roots;
  if (std::abs(a) >= 0.5) {
    const double theta = std::acos(std::clamp(-q / 2.0, -1.0, 1.0));
    for (int k = 0; k < 3; ++k) roots.push_back(2.0 * std::cos((theta - 2.0 * std::numbers::pi * k) / 3.0));
  } else {
    const double s = q > 0 ? 1.0 : -1.0;
    roots.push_back(-2.0 * s * std::cosh(std::acosh(std::abs(q) / 2.0) / 3.0));
  }
  for (double& x : roots) {
    const double fp = 3.0 * x * x - 3.0;
    if (std::abs(fp) > 1e-8) x -= (x * x * x - 3.0 * x + q) / fp;
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(), [](double u, double v) { return std::abs(u - v) < 1e-7; }),
              roots.end());
  return roots;
}

inline std::vector<double> phi3_stationary_points(const EdgeworthParams& p) {
  return phi3_stationary_points(p.a());
}

/// Phi_3(x) = Phi(x) - a (x^2 - 1) phi(x); a = 0 gives Phi.
class EdgeworthCdf : public ComparisonFn {
 public:
  explicit EdgeworthCdf(double a) : a_(a), roots_(phi3_stationary_points(a)) {}
  explicit EdgeworthCdf(const EdgeworthParams& p) : EdgeworthCdf(p.a()) {}

  double a() const { return a_; }

  double value(double x) const override {
    if (a_ == 0.0) return std_normal_cdf(x);
    return std_normal_cdf(x) - a_ * (x * x - 1.0) * std_normal_pdf(x);
  }
  double derivative(double x) const override {
    return std_normal_pdf(x) * (1.0 + a_ * (x * x * x - 3.0 * x));
  }
  std::vector<double> stationary_points(double lo, double hi) const override {
    std::vector<double> out;
    for (double r : roots_)
      if (r >= lo && r <= hi) out.push_back(r);
    return out;
  }
  double second_moment() const override { return 1.0; }
  /// The skew term is odd and integrates to zero over |x| >= t.
  double tail_second_moment(double t) const override {
    t = std::abs(t);
    return 2.0 * (t * std_normal_pdf(t) + std_normal_sf(t));
  }
  /// x Phi + phi + a x phi, an antiderivative of value().
  double antiderivative(double x) const {
    const double p = std_normal_pdf(x);
    return x * std_normal_cdf(x) + p + a_ * x * p;
  }
  /// Antiderivative of value() - 1: -x (1 - Phi) + phi + a x phi.
  double upper_antiderivative(double x) const {
    const double p = std_normal_pdf(x);
    return -x * std_normal_sf(x) + p + a_ * x * p;
  }
  /// 1 - Phi_3(x) without cancellation for large x.
  double upper_tail(double x) const { return std_normal_sf(x) + a_ * (x * x - 1.0) * std_normal_pdf(x); }

 private:
  double a_;
  std::vector<double> roots_;
};

class NormalCdf final : public EdgeworthCdf {
 public:
  NormalCdf() : EdgeworthCdf(0.0) {}
};

inline double phi3(double x, const EdgeworthParams& p) { return EdgeworthCdf(p).value(x); }

/// g_3(t) = e^{-t^2/2} (1 + a (it)^3).
inline std::complex<double> phi3_fourier(double t, const EdgeworthParams& p) {
  const double g = std::exp(-0.5 * t * t);
  return {g, -g * p.a() * t * t * t};
}

/// |G| <= A e^{-x^2/B} on each half-line.
struct TailEnvelope {
  double A = 0.5;
  double B = 2.0;

  TailEnvelope() = default;
  TailEnvelope(double A_, double B_) : A(A_), B(B_) {
    if (!(A >= 0.5)) throw DomainError("tail envelope amplitude must be at least 1/2");
    if (!(B > 0.0)) throw DomainError("tail envelope scale must be positive");
  }
  static TailEnvelope normal() { return {0.5, 2.0}; }
  static TailEnvelope edgeworth() { return {0.57, 4.0}; }
};

namespace detail {
inline void check_delta(double delta) {
  if (!(delta > 0.0) || delta > 1.0) throw DomainError("delta must lie in (0, 1]");
}
inline double log_e_plus_inv(double delta) { return std::log(std::numbers::e + 1.0 / delta); }
}  // namespace detail

/// 13 A B delta log(e + 1/delta): bound on sup x^2 |F - G|.
inline double nonuniform_bound(double delta, const TailEnvelope& env) {
  detail::check_delta(delta);
  return 13.0 * env.A * env.B * delta * detail::log_e_plus_inv(delta);
}

/// 16.02 sqrt(AB) delta log^{1/2}(e + 1/delta): bound on W_1(F, G).
inline double w1_bound(double delta, const TailEnvelope& env) {
  detail::check_delta(delta);
  return 16.02 * std::sqrt(env.A * env.B) * delta * std::sqrt(detail::log_e_plus_inv(delta));
}

/// 4 pi a delta for G carried by [-a, a].
inline double w1_bound_compact(double a, double delta) {
  detail::check_delta(delta);
  if (!(a > 0.0)) throw DomainError("support half-width must be positive");
  return 4.0 * std::numbers::pi * a * delta;
}

/// 16.02 sqrt(AB) |t| delta log^{1/2}(e + 1/delta): bound on |f(t) - g(t)|.
inline double transform_deviation_bound(double t, double delta, const TailEnvelope& env) {
  return std::abs(t) * w1_bound(delta, env);
}

/// 24.2 |t| delta log^{1/2}(e + 1/delta) for G = Phi_3 (n >= beta4/sigma^4).
inline double cf_deviation_bound(double t, double delta) {
  detail::check_delta(delta);
  return 24.2 * std::abs(t) * delta * std::sqrt(detail::log_e_plus_inv(delta));
}

/// 16.02 |t| delta log^{1/2}(e + 1/delta) for G = Phi (alpha3 = 0).
inline double cf_deviation_bound_symmetric(double t, double delta) {
  detail::check_delta(delta);
  return 16.02 * std::abs(t) * delta * std::sqrt(detail::log_e_plus_inv(delta));
}

inline double second_moment(const DiscreteDist& d) {
  CompensatedSum s;
  for (std::size_t i = 0; i < d.size(); ++i) s.add(d.weight(i) * d.position(i) * d.position(i));
  return s.value();
}

struct Lemma31Terms {
  double center = 0.0;       // 4 a^2 delta
  double tail_moment = 0.0;  // integral of x^2 dG over |x| >= a
  double tail_sup = 0.0;     // max of the two tail suprema
  double total = 0.0;
  bool compact = false;      // G carried by [-a, a]
};

/// 4a^2 delta + int_{|x|>=a} x^2 dG + max(sup_{x>=a} x^2|1-G|, sup_{x<=-a} x^2|G|),
/// requiring equal second moments of F and G.
inline Lemma31Terms lemma31_terms(const DiscreteDist& F, const ComparisonFn& G, double a, double delta) {
  if (!(a > 0.0)) throw DomainError("lemma31_bound: a must be positive");
  if (delta < 0.0) throw DomainError("lemma31_bound: delta must be non-negative");
  const double mf = second_moment(F), mg = G.second_moment();
  if (std::abs(mf - mg) > 1e-9)
    throw MomentMismatch("second moments differ: " + format_double(mf) + " vs " + format_double(mg));
  Lemma31Terms t;
  t.center = 4.0 * a * a * delta;
  if (const auto s = G.support(); s && s->first >= -a && s->second <= a) {
    t.compact = true;
    t.total = t.center;
    return t;
  }
  t.tail_moment = G.tail_second_moment(a);
  const auto [r, l] = G.tail_sups(a);
  t.tail_sup = std::max(r, l);
  t.total = t.center + t.tail_moment + t.tail_sup;
  return t;
}

inline double lemma31_bound(const DiscreteDist& F, const ComparisonFn& G, double a, double delta) {
  return lemma31_terms(F, G, a, delta).total;
}

/// sum_k w_k e^{i t x_k}.
inline std::complex<double> fs_transform(const DiscreteDist& d, double t) {
  CompensatedComplexSum s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double w = d.weight(i), arg = t * d.position(i);
    s.add({w * std::cos(arg), w * std::sin(arg)});
  }
  return s.value();
}

namespace detail {

// Root of G(x) = c on [lo, hi] where G - c changes sign and G is monotone.
inline double crossing(const ComparisonFn& G, double c, double lo, double hi) {
  double flo = G.value(lo) - c;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = G.value(mid) - c;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// W_1(F, G) = int |F - G| dx for a continuous G. Pieces between atoms,
/// stationary points and sign crossings carry a constant sign of F - G, so
/// each piece integral is exact up to the quadrature of G; tails are
/// truncated at +-40.
inline double w1_exact(const DiscreteDist& d, const ComparisonFn& G) {
  if (!G.jump_points().empty()) {
    // Step-function G: |F - G| is piecewise constant between merged jumps.
    std::vector<double> pts(d.positions().begin(), d.positions().end());
    const auto j = G.jump_points();
    pts.insert(pts.end(), j.begin(), j.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    CompensatedSum s;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      s.add(std::abs(d.cdf(pts[i]) - G.value(pts[i])) * (pts[i + 1] - pts[i]));
    return s.value();
  }
  constexpr double kTail = 40.0;
  std::vector<double> brk{-kTail};
  for (double x : d.positions())
    if (x > -kTail && x < kTail) brk.push_back(x);
  for (double x : G.stationary_points(-kTail, kTail)) brk.push_back(x);
  brk.push_back(kTail);
  std::sort(brk.begin(), brk.end());
  brk.erase(std::unique(brk.begin(), brk.end()), brk.end());

  const auto* edge = dynamic_cast<const EdgeworthCdf*>(&G);
  PanelIntegrator quad(std::numeric_limits<std::size_t>::max());
  auto piece = [&](double c, double lo, double hi) {
    // int_lo^hi (c - G) dx
    if (edge) {
      // Right of the origin integrate (c - 1) + (1 - G) so that the
      // antiderivative stays small and differences do not cancel.
      if (lo >= 0.0) return (c - 1.0) * (hi - lo) - (edge->upper_antiderivative(hi) - edge->upper_antiderivative(lo));
      return c * (hi - lo) - (edge->antiderivative(hi) - edge->antiderivative(lo));
    }
    auto f = [&](double x) { return c - G.value(x); };
    if (hi - lo <= 0.25) return gauss_legendre10(f, lo, hi);
    return quad.integrate(f, lo, hi, 1e-13);
  };
  CompensatedSum total;
  for (std::size_t i = 0; i + 1 < brk.size(); ++i) {
    const double lo = brk[i], hi = brk[i + 1];
    const double c = d.cdf(lo);  // F is constant on (lo, hi)
    const double glo = G.value(lo), ghi = G.left_value(hi);
    if ((c - glo) * (c - ghi) < 0.0) {
      const double x = detail::crossing(G, c, lo, hi);
      total.add(std::abs(piece(c, lo, x)));
      total.add(std::abs(piece(c, x, hi)));
    } else {
      total.add(std::abs(piece(c, lo, hi)));
    }
  }
  return total.value();
}

}  // namespace cltlab
