#pragma once

// Experiment harness: exact Delta_n sweeps, log-log rate regression, the
// average of Delta_n over alpha, and the star discrepancy of {k alpha}.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cltlab/alpha.hpp"
#include "cltlab/charfn.hpp"
#include "cltlab/comparison.hpp"
#include "cltlab/dioph.hpp"
#include "cltlab/distribution.hpp"
#include "cltlab/edgeworth.hpp"
#include "cltlab/numeric.hpp"

namespace cltlab {

struct SweepRow {
  std::uint64_t n = 0;
  double delta_phi = 0.0;
  std::optional<double> delta_phi3;  // present when alpha3 != 0 or requested
  double argmax = 0.0;               // of the distance to Phi
  Side side = Side::Right;
  double seconds = 0.0;              // 0 unless timing was requested
  double atom0_mass = 0.0;           // P{Z_n = 0}
  bool lower_bound_ok = true;        // delta_phi >= P{Z_n = 0} / 2
};

struct SweepResult {
  std::string base;  // descriptor, e.g. "prod:surd:0,1,1,2"
  std::vector<SweepRow> rows;
  double sigma2 = 0.0, alpha3 = 0.0, beta4 = 0.0;
};

struct SweepOptions {
  unsigned threads = default_thread_count();
  std::size_t cap = kDefaultAtomCap;
  bool force_phi3 = false;
  bool timing = false;
};

namespace detail {

inline double atom_mass_at_zero(const DiscreteDist& d) {
  const auto pos = d.positions();
  const auto lo = std::lower_bound(pos.begin(), pos.end(), 0.0);
  const auto hi = std::upper_bound(pos.begin(), pos.end(), 0.0);
  // Direct sum; a difference of prefix sums would cancel.
  double m = 0.0;
  for (auto i = static_cast<std::size_t>(lo - pos.begin()); i < static_cast<std::size_t>(hi - pos.begin()); ++i)
    m += d.weight(i);
  return m;
}

inline void check_n_list(const std::vector<std::uint64_t>& n_list, const char* who) {
  if (n_list.empty()) throw DomainError(std::string(who) + ": empty n list");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 1) throw DomainError(std::string(who) + ": n must be at least 1");
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw DomainError(std::string(who) + ": n list must be strictly increasing");
  }
}

}  // namespace detail

/// Exact Kolmogorov distances of Z_n to Phi (and Phi_3) for each n. Items
/// run concurrently; rows come back in n order.
inline SweepResult delta_sweep(const DiscreteDist& base, const std::vector<std::uint64_t>& n_list,
                               std::string descriptor = {}, const SweepOptions& opt = {}) {
  detail::check_n_list(n_list, "delta_sweep");
  const Moments mo = moments(base);
  SweepResult res;
  res.base = std::move(descriptor);
  res.sigma2 = mo.sigma2;
  res.alpha3 = mo.alpha3;
  res.beta4 = mo.beta4;
  const bool skewed = std::abs(mo.alpha3) > 1e-14 * std::pow(mo.sigma2, 1.5);
  const bool want_phi3 = skewed || opt.force_phi3;
  res.rows.resize(n_list.size());
  std::vector<std::exception_ptr> errors(n_list.size());
  // Largest n first so the long items start early.
  parallel_for(n_list.size(), opt.threads, [&](std::size_t k) {
    const std::size_t i = n_list.size() - 1 - k;
    try {
      const auto t0 = std::chrono::steady_clock::now();
      SweepRow row;
      row.n = n_list[i];
      const DiscreteDist d = zn_dist(base, row.n, opt.cap);
      const auto kd = kolmogorov_distance(d, NormalCdf());
      row.delta_phi = kd.delta;
      row.argmax = kd.argmax;
      row.side = kd.side;
      if (want_phi3) {
        const EdgeworthParams ep(skewed ? mo.alpha3 : 0.0, std::sqrt(mo.sigma2), row.n, mo.beta4);
        row.delta_phi3 = kolmogorov_distance(d, EdgeworthCdf(ep)).delta;
      }
      row.atom0_mass = detail::atom_mass_at_zero(d);
      // Phi is continuous at 0, so the jump there splits around it.
      row.lower_bound_ok = row.delta_phi >= 0.5 * row.atom0_mass - 4.0 * std::numeric_limits<double>::epsilon();
      if (opt.timing)
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      res.rows[i] = row;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return res;
}

// ---------------------------------------------------------------------------
// Rate regression.

struct ConstrainedFit {
  double exponent = 0.0;  // pinned to -1/2 - 1/(2 eta)
  double logpow = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
};

struct RateFit {
  double exponent = 0.0;  // power of n in the joint fit
  double logpow = 0.0;    // power of log n in the joint fit
  double intercept = 0.0;
  double r2 = 0.0;
  double rms = 0.0;
  double power_exponent = 0.0;  // slope of the pure power fit (no log term)
  double power_r2 = 0.0;
  std::uint64_t n_min = 0, n_max = 0;
  std::size_t points = 0;
  std::optional<ConstrainedFit> constrained;
};

/// log Delta ~ c + e log n + l log log n over every supplied point (the
/// whole list is the widest window). With eta_hint, also fits l alone with
/// e pinned to -1/2 - 1/(2 eta).
inline RateFit rate_fit(const std::vector<std::pair<std::uint64_t, double>>& pts,
                        std::optional<double> eta_hint = std::nullopt) {
  if (pts.size() < 5) throw TooFewPoints("rate_fit needs at least 5 points, got " + std::to_string(pts.size()));
  for (const auto& [n, v] : pts) {
    if (n < 2) throw DomainError("rate_fit: n must be at least 2 for log log n");
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("rate_fit: values must be positive and finite");
  }
  if (eta_hint && !(*eta_hint > 0.0)) throw DomainError("rate_fit: eta_hint must be positive");
  const auto m = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd X(m, 3), X2(m, 2);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double ln = std::log(double(pts[i].first));
    X(i, 0) = 1.0;
    X(i, 1) = ln;
    X(i, 2) = std::log(ln);
    X2(i, 0) = 1.0;
    X2(i, 1) = ln;
    y(i) = std::log(pts[i].second);
  }
  RateFit f;
  const auto joint = least_squares(X, y);
  f.intercept = joint.coef(0);
  f.exponent = joint.coef(1);
  f.logpow = joint.coef(2);
  f.r2 = joint.r2;
  f.rms = joint.rms;
  const auto pw = least_squares(X2, y);
  f.power_exponent = pw.coef(1);
  f.power_r2 = pw.r2;
  f.points = pts.size();
  f.n_min = pts.front().first;
  f.n_max = pts.front().first;
  for (const auto& p : pts) {
    f.n_min = std::min(f.n_min, p.first);
    f.n_max = std::max(f.n_max, p.first);
  }
  if (eta_hint) {
    ConstrainedFit c;
    c.exponent = -0.5 - 0.5 / *eta_hint;
    Eigen::MatrixXd Xc(m, 2);
    Eigen::VectorXd yc(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      Xc(i, 0) = 1.0;
      Xc(i, 1) = X(i, 2);
      yc(i) = y(i) - c.exponent * X(i, 1);
    }
    const auto cf = least_squares(Xc, yc);
    c.intercept = cf.coef(0);
    c.logpow = cf.coef(1);
    c.rms = cf.rms;
    f.constrained = c;
  }
  return f;
}

enum class SweepColumn { Phi, Phi3 };

inline RateFit rate_fit(const SweepResult& sweep, std::optional<double> eta_hint = std::nullopt,
                        SweepColumn column = SweepColumn::Phi) {
  std::vector<std::pair<std::uint64_t, double>> pts;
  for (const auto& r : sweep.rows) {
    if (column == SweepColumn::Phi3 && !r.delta_phi3) throw DomainError("rate_fit: sweep has no Phi_3 column");
    pts.emplace_back(r.n, column == SweepColumn::Phi ? r.delta_phi : *r.delta_phi3);
  }
  return rate_fit(pts, eta_hint);
}

// ---------------------------------------------------------------------------
// Average over alpha.

struct AvgDelta {
  std::uint64_t n = 0;
  std::size_t grid_size = 0;
  double average = 0.0;
  double ratio = 0.0;  // average * n / log(n + 1)
  std::vector<double> per_alpha;  // Delta_n at alpha_j = (j + 1/2) / grid_size
};

/// Midpoint average of Delta_n(alpha) for B_1 * B_alpha over alpha in (0, 1).
/// Grid points are exact rationals, so atom collisions merge exactly.
inline AvgDelta avg_delta(std::uint64_t n, std::size_t grid_size, unsigned threads = default_thread_count(),
                          std::size_t cap = kDefaultAtomCap) {
  if (n < 1) throw DomainError("avg_delta: n must be at least 1");
  if (grid_size < 1) throw DomainError("avg_delta: grid_size must be at least 1");
  const double support = double(n + 1) * double(n + 1);
  if (support > double(cap))
    throw SupportOverflow("avg_delta: support of " + format_double(support) + " atoms exceeds the cap");
  AvgDelta out;
  out.n = n;
  out.grid_size = grid_size;
  out.per_alpha.resize(grid_size);
  std::vector<std::exception_ptr> errors(grid_size);
  parallel_for(grid_size, threads, [&](std::size_t j) {
    try {
      const AlphaSpec a = AlphaSpec::rational(BigInt(2 * j + 1), BigInt(2 * grid_size));
      const DiscreteDist base = to_distribution(CharSpec::product({a}));
      out.per_alpha[j] = kolmogorov_distance(zn_dist(base, n, cap), NormalCdf()).delta;
    } catch (...) {
      errors[j] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  CompensatedSum s;
  for (double v : out.per_alpha) s.add(v);
  out.average = s.value() / double(grid_size);
  out.ratio = out.average * double(n) / std::log(double(n) + 1.0);
  return out;
}

// ---------------------------------------------------------------------------
// Star discrepancy of {k alpha}, k = 1..n.

namespace detail {

inline double star_from_sorted(const std::vector<double>& x) {
  const double n = double(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d = std::max(d, double(i + 1) / n - x[i]);
    d = std::max(d, x[i] - double(i) / n);
  }
  return d;
}

inline double frac_from_offset(const MultipleScanner::Item& it) {
  if (it.zero) return 0.0;
  return it.offset >= 0.0 ? it.offset : 1.0 + it.offset;
}

}  // namespace detail

/// Fractional parts {k alpha} for k = 1..n_max in k order.
inline std::vector<double> fractional_parts(const AlphaSpec& alpha, std::uint64_t n_max) {
  std::vector<double> out(n_max);
  MultipleScanner scan(alpha, n_max);
  for (std::uint64_t i = 0; i < n_max; ++i) out[i] = detail::frac_from_offset(scan.next());
  return out;
}

/// sup_{0<x<1} |F_n(x) - x| for the empirical law of {k alpha}, k = 1..n.
inline double star_discrepancy(const AlphaSpec& alpha, std::uint64_t n) {
  if (n < 1) throw DomainError("star_discrepancy: n must be at least 1");
  auto x = fractional_parts(alpha, n);
  std::sort(x.begin(), x.end());
  return detail::star_from_sorted(x);
}

/// D*_n for every n in the list, sharing one scan of the multiples.
inline std::vector<std::pair<std::uint64_t, double>> discrepancy_sweep(const AlphaSpec& alpha,
                                                                      const std::vector<std::uint64_t>& n_list) {
  detail::check_n_list(n_list, "discrepancy_sweep");
  const auto all = fractional_parts(alpha, n_list.back());
  std::vector<std::pair<std::uint64_t, double>> out;
  for (std::uint64_t n : n_list) {
    std::vector<double> x(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(x.begin(), x.end());
    out.emplace_back(n, detail::star_from_sorted(x));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kolmogorov rate against discrepancy rate.

struct CompareRow {
  std::uint64_t n = 0;
  double delta = 0.0;
  double dstar = 0.0;
};

struct CompareReport {
  std::string alpha;
  double eta = 1.0;
  double delta_target = -1.0;  // -1/2 - 1/(2 eta)
  double dstar_target = -1.0;  // -1/eta
  std::vector<CompareRow> rows;
  RateFit delta_fit, dstar_fit;
  // Each side read off its own target model: the joint fit (power and log
  // power) for Delta_n, the pure power fit for D*_n.
  double delta_exponent = 0.0;
  double dstar_exponent = 0.0;
  double exponent_gap = 0.0;
};

/// Side-by-side Delta_n(alpha) for B_1 * B_alpha and D*_n(alpha) on a
/// common n list, each with its own rate fit.
inline CompareReport compare_16_vs_17(const AlphaSpec& alpha, const std::vector<std::uint64_t>& n_list,
                                      double eta = 1.0, const SweepOptions& opt = {}) {
  if (!(eta > 0.0)) throw DomainError("compare_16_vs_17: eta must be positive");
  const DiscreteDist base = to_distribution(CharSpec::product({alpha}));
  const auto sweep = delta_sweep(base, n_list, "prod:" + alpha.to_string(), opt);
  const auto disc = discrepancy_sweep(alpha, n_list);
  CompareReport rep;
  rep.alpha = alpha.to_string();
  rep.eta = eta;
  rep.delta_target = -0.5 - 0.5 / eta;
  rep.dstar_target = -1.0 / eta;
  std::vector<std::pair<std::uint64_t, double>> dp;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    rep.rows.push_back({n_list[i], sweep.rows[i].delta_phi, disc[i].second});
    dp.emplace_back(n_list[i], sweep.rows[i].delta_phi);
  }
  rep.delta_fit = rate_fit(dp, eta);
  rep.dstar_fit = rate_fit(disc, eta);
  rep.delta_exponent = rep.delta_fit.exponent;
  rep.dstar_exponent = rep.dstar_fit.power_exponent;
  rep.exponent_gap = std::abs(rep.delta_exponent - rep.dstar_exponent);
  return rep;
}

/// 2^lo, 2^(lo+1), ..., 2^hi.
inline std::vector<std::uint64_t> powers_of_two(int lo, int hi) {
  std::vector<std::uint64_t> out;
  for (int k = lo; k <= hi; ++k) out.push_back(std::uint64_t(1) << k);
  return out;
}

}  // namespace cltlab
