#pragma once

// Characteristic functions of the product family cos t cos(a_1 t)... and the
// mixture family p_0 cos t + sum p_k cos(a_k t), the elementary cosine
// inequalities, and growth exponents of 1/(1 - |f(t)|).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cltlab/alpha.hpp"
#include "cltlab/dioph.hpp"
#include "cltlab/distribution.hpp"
#include "cltlab/numeric.hpp"

namespace cltlab {

struct CharSpec {
  enum class Form { Product, Mixture };
  Form form = Form::Product;
  std::vector<AlphaSpec> alphas;  // coefficient 1 is implicit
  std::vector<double> weights;    // p_0 .. p_m, mixture only

  static CharSpec product(std::vector<AlphaSpec> alphas) { return {Form::Product, std::move(alphas), {}}; }
  static CharSpec mixture(std::vector<double> weights, std::vector<AlphaSpec> alphas) {
    CharSpec s{Form::Mixture, std::move(alphas), std::move(weights)};
    s.validate();
    return s;
  }

  void validate() const {
    if (form == Form::Product) {
      if (!weights.empty()) throw DomainError("product form takes no weights");
      return;
    }
    if (weights.size() != alphas.size() + 1) throw DomainError("mixture needs one weight per cosine");
    for (double p : weights)
      if (!(p > 0.0)) throw WeightSumViolation("mixture weights must be positive");
    if (std::abs(compensated_total(weights) - 1.0) > kMassTolerance)
      throw WeightSumViolation("mixture weights do not sum to 1");
  }

  /// `prod:<alpha>,...` or `mix:<p0>:<alpha>=<p1>,...`.
  static CharSpec parse(std::string_view text);
  std::string to_string() const {
    std::ostringstream os;
    if (form == Form::Product) {
      os << "prod:";
      for (std::size_t k = 0; k < alphas.size(); ++k) os << (k ? "," : "") << alphas[k].to_string();
    } else {
      os << "mix:" << format_double(weights[0]) << ":";
      for (std::size_t k = 0; k < alphas.size(); ++k)
        os << (k ? "," : "") << alphas[k].to_string() << "=" << format_double(weights[k + 1]);
    }
    return os.str();
  }
};

namespace detail {

inline bool starts_alpha(std::string_view tok) {
  tok = trim(tok);
  for (const char* p : {"surd:", "cf:", "dec:", "rat:"})
    if (tok.substr(0, std::char_traits<char>::length(p)) == p) return true;
  return false;
}

// Splits a comma list whose items are AlphaSpec texts that may contain commas.
inline std::vector<std::string> group_alpha_items(std::string_view body) {
  std::vector<std::string> items;
  if (trim(body).empty()) return items;
  for (const auto& tok : split(body, ',')) {
    if (items.empty() || starts_alpha(tok))
      items.push_back(std::string(trim(tok)));
    else
      items.back() += "," + std::string(trim(tok));
  }
  return items;
}

inline double parse_weight(std::string_view s) {
  s = trim(s);
  const auto slash = s.find('/');
  try {
    if (slash != std::string_view::npos)
      return std::stod(std::string(s.substr(0, slash))) / std::stod(std::string(s.substr(slash + 1)));
    std::size_t used = 0;
    const double v = std::stod(std::string(s), &used);
    if (used != s.size()) throw ParseError("bad weight");
    return v;
  } catch (const std::exception&) {
    throw ParseError("malformed weight '" + std::string(s) + "'");
  }
}

}  // namespace detail

inline CharSpec CharSpec::parse(std::string_view text) {
  text = detail::trim(text);
  if (text.substr(0, 5) == "prod:") {
    std::vector<AlphaSpec> alphas;
    for (const auto& item : detail::group_alpha_items(text.substr(5))) alphas.push_back(AlphaSpec::parse(item));
    return product(std::move(alphas));
  }
  if (text.substr(0, 4) == "mix:") {
    const std::string_view body = text.substr(4);
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) throw ParseError("mix spec needs p0 followed by ':'");
    std::vector<double> weights{detail::parse_weight(body.substr(0, colon))};
    std::vector<AlphaSpec> alphas;
    for (const auto& item : detail::group_alpha_items(body.substr(colon + 1))) {
      const auto eq = item.rfind('=');
      if (eq == std::string::npos) throw ParseError("mixture item '" + item + "' lacks '=weight'");
      alphas.push_back(AlphaSpec::parse(item.substr(0, eq)));
      weights.push_back(detail::parse_weight(item.substr(eq + 1)));
    }
    return mixture(std::move(weights), std::move(alphas));
  }
  throw ParseError("characteristic-function spec must start with 'prod:' or 'mix:'");
}

namespace detail {

// t * alpha_k in double-double; index -1 stands for the implicit 1.
inline std::vector<DoubleDouble> coefficients_dd(const CharSpec& s) {
  std::vector<DoubleDouble> c{{1.0, 0.0}};
  for (const auto& a : s.alphas) c.push_back(a.to_double_double());
  return c;
}

}  // namespace detail

/// Evaluates f and 1 - |f| for one spec at many points.
class CharEvaluator {
 public:
  explicit CharEvaluator(const CharSpec& spec) : spec_(spec), coef_(detail::coefficients_dd(spec)) {
    spec_.validate();
  }

  double eval(double t) const {
    if (spec_.form == CharSpec::Form::Product) {
      double f = 1.0;
      for (const auto& c : coef_) f *= cos_dd(mul(t, c));
      return f;
    }
    CompensatedSum s;
    for (std::size_t k = 0; k < coef_.size(); ++k) s.add(spec_.weights[k] * cos_dd(mul(t, coef_[k])));
    return s.value();
  }

  /// 1 - |f(t)| without cancellation near the peaks of |f|.
  double one_minus_abs(double t) const {
    if (spec_.form == CharSpec::Form::Product) {
      double log_abs = 0.0;
      for (const auto& c : coef_) {
        const double u = one_minus_abs_cos(mul(t, c));
        if (u >= 1.0) return 1.0;
        log_abs += std::log1p(-u);
      }
      return -std::expm1(log_abs);
    }
    // 1 - f = sum p (1 - cos), 1 + f = sum p (1 + cos), both by half angles.
    CompensatedSum minus, plus;
    for (std::size_t k = 0; k < coef_.size(); ++k) {
      const DoubleDouble th = mul(t, coef_[k]);
      const DoubleDouble half{0.5 * th.hi, 0.5 * th.lo};
      const double s = sin_dd(half), c = cos_dd(half);
      minus.add(2.0 * spec_.weights[k] * s * s);
      plus.add(2.0 * spec_.weights[k] * c * c);
    }
    return std::clamp(std::min(minus.value(), plus.value()), 0.0, 1.0);
  }

  const CharSpec& spec() const { return spec_; }

 private:
  CharSpec spec_;
  std::vector<DoubleDouble> coef_;
};

inline double eval(const CharSpec& spec, double t) { return CharEvaluator(spec).eval(t); }

inline std::vector<std::pair<double, double>> one_minus_abs_profile(const CharSpec& spec,
                                                                    const std::vector<double>& t_grid) {
  if (!std::is_sorted(t_grid.begin(), t_grid.end())) throw DomainError("t grid must be sorted");
  const CharEvaluator ev(spec);
  std::vector<std::pair<double, double>> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) out.emplace_back(t, ev.one_minus_abs(t));
  return out;
}

/// Law of the sum whose transform is given by the CharSpec: lattice-tagged over (1, alphas).
inline DiscreteDist to_distribution(const CharSpec& spec) {
  spec.validate();
  const DiscreteDist one = bernoulli_pm(AlphaSpec::rational(1));
  if (spec.form == CharSpec::Form::Product) {
    DiscreteDist d = one;
    for (const auto& a : spec.alphas) d = convolve(d, bernoulli_pm(a));
    return d;
  }
  std::vector<std::pair<double, DiscreteDist>> comps{{spec.weights[0], one}};
  for (std::size_t k = 0; k < spec.alphas.size(); ++k) comps.emplace_back(spec.weights[k + 1], bernoulli_pm(spec.alphas[k]));
  return mixture(comps);
}

// ---------------------------------------------------------------------------
// Cosine inequalities.

struct Ineq61Result {
  double norm = 0.0;        // ||x||
  double abs_cos = 0.0;     // |cos(pi x)|
  double one_minus = 0.0;   // 1 - |cos(pi x)|
  double margin_exp = 0.0;  // exp(-pi^2 ||x||^2 / 2) - |cos(pi x)|
  double margin_lower = 0.0;  // (1 - |cos|) - 4 ||x||^2
  double margin_upper = 0.0;  // pi^2/2 ||x||^2 - (1 - |cos|)
  bool pass = false;
};

/// |cos(pi x)| <= exp(-pi^2 ||x||^2/2) and 4||x||^2 <= 1 - |cos(pi x)| <= pi^2/2 ||x||^2.
inline Ineq61Result ineq61_check(double x) {
  Ineq61Result r;
  const double frac = x - std::nearbyint(x);  // exact, |frac| <= 1/2
  r.norm = std::abs(frac);
  const double pi = std::numbers::pi;
  r.abs_cos = std::cos(pi * r.norm);
  const double s = std::sin(0.5 * pi * r.norm);
  r.one_minus = 2.0 * s * s;
  const double n2 = r.norm * r.norm;
  r.margin_exp = std::exp(-pi * pi * n2 / 2.0) - r.abs_cos;
  r.margin_lower = r.one_minus - 4.0 * n2;
  r.margin_upper = pi * pi / 2.0 * n2 - r.one_minus;
  r.pass = r.margin_exp >= -1e-12 && r.margin_lower >= -1e-12 && r.margin_upper >= -1e-12;
  return r;
}

/// ||x|| for x = hi + lo.
inline double dist_to_int(const DoubleDouble& x) {
  const double r = x.hi - std::nearbyint(x.hi);
  const double v = r + x.lo;
  return std::abs(v - std::nearbyint(v));
}

struct Lemma61Result {
  double lhs = 0.0;  // ||t||^2 + sum ||t alpha_k||^2
  double rhs = 0.0;  // c^2 eps(n(t))^2 with 1/c = 1 + max |alpha_k|
  std::uint64_t n = 0;
};

inline Lemma61Result lemma61_lower(const std::vector<AlphaSpec>& alphas, double t,
                                   const std::function<double(std::uint64_t)>& eps_at) {
  if (!(t >= 1.0)) throw DomainError("lemma61_lower: t must be at least 1");
  Lemma61Result r;
  // n(t): nearest integer, n + 1/2 -> n.
  r.n = static_cast<std::uint64_t>(std::ceil(t - 0.5));
  double lhs = dist_to_int({t, 0.0});
  lhs *= lhs;
  double amax = 0.0;
  for (const auto& a : alphas) {
    const double d = dist_to_int(mul(t, a.to_double_double()));
    lhs += d * d;
    amax = std::max(amax, std::abs(a.to_double()));
  }
  const double eps = eps_at(r.n);
  if (!(eps > 0.0)) throw DomainError("lemma61_lower: eps(n) must be positive");
  const double c = 1.0 / (1.0 + amax);
  r.lhs = lhs;
  r.rhs = c * c * eps * eps;
  return r;
}

// ---------------------------------------------------------------------------
// Growth exponent of 1/(1 - |f|).

struct GrowthPeak {
  double t;
  double one_minus_abs;
};

struct GrowthFit {
  double p_hat = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> q_hat;  // identifiable only when t_max >= 1e3
  double intercept = 0.0;
  std::vector<GrowthPeak> sample;  // retained peaks, ascending t
  double residual = 0.0;           // RMS of the regression
  bool degenerate_lattice = false;  // |f| reaches 1 at some peak
  std::size_t peaks_scanned = 0;
};

/// Locates the maxima of |f| near t = pi n (product form) or t = 2 pi n
/// (mixture form) on [2, t_max] (golden-section
/// refinement of a local scan), keeps the record peaks (each closer to 1
/// than every earlier one), retains the n_peaks largest, and regresses
/// log(1/(1 - |f|)) on log t (and log log t when t_max >= 1e3).
inline GrowthFit growth_fit(const CharSpec& spec, double t_max, std::size_t n_peaks) {
  if (!(t_max > 10.0)) throw DomainError("growth_fit: t_max must exceed 10");
  if (n_peaks < 8) throw DomainError("growth_fit: n_peaks must be at least 8");
  const CharEvaluator ev(spec);
  GrowthFit fit;
  const double pi = std::numbers::pi;
  std::vector<GrowthPeak> records;
  double best_u = std::numeric_limits<double>::infinity();
  // In mixture form |f| near 1 needs every cosine near the same sign; at odd
  // multiples of pi that is a second family with its own constant.
  const double period = spec.form == CharSpec::Form::Product ? pi : 2.0 * pi;
  const std::size_t kmax = static_cast<std::size_t>(std::floor(t_max / period));
  for (std::size_t k = 1; k <= kmax; ++k) {
    const double c = period * double(k);
    const double lo = std::max(2.0, c - 0.5), hi = std::min(t_max, c + 0.5);
    if (!(hi > lo)) continue;
    // Local scan, then golden section on the best cell.
    const int cells = 40;
    const double h = (hi - lo) / cells;
    double bt = lo, bu = ev.one_minus_abs(lo);
    for (int i = 1; i <= cells; ++i) {
      const double t = lo + h * i, u = ev.one_minus_abs(t);
      if (u < bu) {
        bu = u;
        bt = t;
      }
    }
    double a = std::max(lo, bt - h), b = std::min(hi, bt + h);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double m1 = b - g * (b - a), m2 = a + g * (b - a);
    double u1 = ev.one_minus_abs(m1), u2 = ev.one_minus_abs(m2);
    for (int it = 0; it < 100 && b - a > 1e-13 * b; ++it) {
      if (u1 < u2) {
        b = m2;
        m2 = m1;
        u2 = u1;
        m1 = b - g * (b - a);
        u1 = ev.one_minus_abs(m1);
      } else {
        a = m1;
        m1 = m2;
        u1 = u2;
        m2 = a + g * (b - a);
        u2 = ev.one_minus_abs(m2);
      }
    }
    const double tp = u1 < u2 ? m1 : m2;
    const double up = std::min({u1, u2, bu});
    const double tpk = up == bu ? bt : tp;
    ++fit.peaks_scanned;
    if (up < 1e-24) fit.degenerate_lattice = true;
    if (up < best_u && up < 0.5) {
      best_u = up;
      records.push_back({tpk, up});
    }
  }
  if (fit.degenerate_lattice) return fit;
  if (records.size() > n_peaks) records.erase(records.begin(), records.end() - static_cast<long>(n_peaks));
  fit.sample = records;
  const bool joint = t_max >= 1e3;
  if (records.size() < n_peaks)
    throw InsufficientPeaks("growth_fit: found " + std::to_string(records.size()) + " record peaks, need " +
                            std::to_string(n_peaks));
  const std::size_t N = records.size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(N), joint ? 3 : 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    X(r, 0) = 1.0;
    X(r, 1) = std::log(records[i].t);
    if (joint) X(r, 2) = std::log(std::log(records[i].t));
    y(r) = std::log(1.0 / records[i].one_minus_abs);
  }
  const auto ls = least_squares(X, y);
  fit.intercept = ls.coef(0);
  fit.p_hat = ls.coef(1);
  if (joint) fit.q_hat = ls.coef(2);
  fit.residual = ls.rms;
  return fit;
}

}  // namespace cltlab
