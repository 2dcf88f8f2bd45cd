#pragma once

// Continued fractions, convergents, distances to the nearest integer and
// finite-horizon Diophantine diagnostics.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cltlab/alpha.hpp"

namespace cltlab {

using u128 = unsigned __int128;

struct Convergent {
  BigInt p, q;
};

struct ContinuedFraction {
  BigInt a0;
  std::vector<BigInt> quotients;  // a_1, a_2, ...
  std::vector<Convergent> convergents;  // k = 0 .. size()-1
  bool terminated = false;  // rational with an expansion shorter than requested
  std::size_t certified = 0;  // number of certified terms (counting a0)
  // Eventual period of a quadratic irrational: terms a_{start} .. a_{start+length-1} repeat.
  std::optional<std::pair<std::size_t, std::size_t>> period;

  std::size_t size() const { return 1 + quotients.size(); }
  const BigInt& term(std::size_t k) const { return k == 0 ? a0 : quotients.at(k - 1); }
};

/// p_i/q_i for i = 0..k from the standard recurrence.
inline std::vector<Convergent> convergents(const ContinuedFraction& cf, std::size_t k) {
  if (k >= cf.size())
    throw IndexOutOfRange("convergent index " + std::to_string(k) + " exceeds the " +
                          std::to_string(cf.size()) + " available partial quotients");
  std::vector<Convergent> out;
  out.reserve(k + 1);
  BigInt p = 1, pp = 0, q = 0, qp = 1;  // p_{-1}, p_{-2}, q_{-1}, q_{-2}
  for (std::size_t i = 0; i <= k; ++i) {
    const BigInt& a = cf.term(i);
    BigInt np = a * p + pp, nq = a * q + qp;
    pp = std::move(p);
    p = std::move(np);
    qp = std::move(q);
    q = std::move(nq);
    out.push_back({p, q});
  }
  return out;
}

namespace detail {

inline void finish_cf(ContinuedFraction& cf) {
  cf.certified = cf.size();
  cf.convergents = convergents(cf, cf.size() - 1);
}

// (P + sqrt(D)) / Q with Q | D - P^2, D not a square.
inline void surd_expand(const AlphaSpec::Surd& s, std::size_t depth, ContinuedFraction& cf) {
  const BigInt D = s.b * s.b * s.c * s.c * s.d;
  BigInt P, Q;
  if (s.b > 0) {
    P = s.a * s.c;
    Q = s.c * s.c;
  } else {
    P = -s.a * s.c;
    Q = -s.c * s.c;
  }
  const BigInt root = mp::sqrt(D);
  std::map<std::pair<BigInt, BigInt>, std::size_t> seen;
  for (std::size_t k = 0; k < depth; ++k) {
    if (!cf.period) {
      auto [it, fresh] = seen.emplace(std::make_pair(P, Q), k);
      if (!fresh) cf.period = std::make_pair(it->second, k - it->second);
    }
    const BigInt a = Q > 0 ? floor_div(P + root, Q) : floor_div(P + root + 1, Q);
    if (k == 0)
      cf.a0 = a;
    else
      cf.quotients.push_back(a);
    P = a * Q - P;
    Q = (D - P * P) / Q;
  }
  if (!cf.period) {
    // Keep stepping (without storing) until the cycle closes so the period is reported.
    for (std::size_t k = depth; k < depth + 4 * bit_length(D) * bit_length(D) + 64; ++k) {
      auto [it, fresh] = seen.emplace(std::make_pair(P, Q), k);
      if (!fresh) {
        cf.period = std::make_pair(it->second, k - it->second);
        break;
      }
      const BigInt a = Q > 0 ? floor_div(P + root, Q) : floor_div(P + root + 1, Q);
      P = a * Q - P;
      Q = (D - P * P) / Q;
    }
  }
}

inline void rational_expand(Rational r, std::size_t depth, ContinuedFraction& cf) {
  BigInt num = mp::numerator(r), den = mp::denominator(r);
  for (std::size_t k = 0; k < depth; ++k) {
    const BigInt a = floor_div(num, den);
    if (k == 0)
      cf.a0 = a;
    else
      cf.quotients.push_back(a);
    BigInt rem = num - a * den;
    if (rem == 0) {
      cf.terminated = k + 1 < depth;
      return;
    }
    num = std::move(den);
    den = std::move(rem);
  }
}

}  // namespace detail

/// First `depth` partial quotients (a0 counts as one). Exact for surd,
/// rational and continued-fraction kinds; decimals yield only the certified
/// prefix, see cf_expand_certified.
inline ContinuedFraction cf_expand_certified(const AlphaSpec& alpha, std::size_t depth) {
  if (depth < 1) throw DomainError("cf_expand: depth must be at least 1");
  ContinuedFraction cf;
  if (const auto* dec = alpha.decimal_data()) {
    // Interval continued-fraction algorithm: a term is certified when both
    // endpoints share its floor.
    Rational lo = dec->lo, hi = dec->hi;
    for (std::size_t k = 0; k < depth; ++k) {
      const BigInt a = floor_of(lo);
      if (floor_of(hi) != a) break;
      if (k == 0)
        cf.a0 = a;
      else
        cf.quotients.push_back(a);
      cf.certified = k + 1;
      const Rational flo = lo - Rational(a), fhi = hi - Rational(a);
      if (flo == 0) break;  // reciprocal unbounded
      lo = Rational(1) / fhi;
      hi = Rational(1) / flo;
    }
    if (cf.certified == 0) {
      cf.a0 = floor_of(lo);
      return cf;  // nothing certified; a0 is a guess and convergents stay empty
    }
    cf.convergents = convergents(cf, cf.size() - 1);
    return cf;
  }
  if (const auto* g = alpha.generator_data()) {
    cf.a0 = g->a0;
    for (std::size_t k = 1; k < depth; ++k) {
      BigInt a = g->term(k);
      if (a == 0) {
        cf.terminated = true;
        break;
      }
      cf.quotients.push_back(std::move(a));
    }
  } else if (const auto* c = alpha.cf_data()) {
    cf.a0 = c->a0;
    for (std::size_t k = 1; k < depth; ++k) {
      const std::size_t i = k - 1;
      if (i < c->prefix.size()) {
        cf.quotients.push_back(c->prefix[i]);
      } else if (!c->period.empty()) {
        cf.quotients.push_back(c->period[(i - c->prefix.size()) % c->period.size()]);
      } else {
        cf.terminated = true;
        break;
      }
    }
    if (!c->period.empty()) cf.period = std::make_pair(c->prefix.size() + 1, c->period.size());
  } else if (alpha.is_rational()) {
    detail::rational_expand(*alpha.exact_value(), depth, cf);
  } else if (const auto* s = alpha.surd_data()) {
    detail::surd_expand(*s, depth, cf);
  }
  detail::finish_cf(cf);
  return cf;
}

/// As cf_expand_certified, but a decimal that cannot certify `depth` terms
/// raises PrecisionExhausted.
inline ContinuedFraction cf_expand(const AlphaSpec& alpha, std::size_t depth) {
  ContinuedFraction cf = cf_expand_certified(alpha, depth);
  if (alpha.kind() == AlphaKind::Decimal && cf.certified < depth)
    throw PrecisionExhausted(alpha.to_string() + ": digits certify only " +
                             std::to_string(cf.certified) + " of " + std::to_string(depth) +
                             " partial quotients");
  return cf;
}

// ---------------------------------------------------------------------------
// Distance to the nearest integer.

struct NearestIntDist {
  double value = 0.0;        // ||n alpha||
  double error_bound = 0.0;  // certified absolute error of `value` and `offset`
  double offset = 0.0;       // n alpha - nearest, in (-1/2, 1/2]
  BigInt nearest;            // nearest integer, ties n + 1/2 -> n
};

/// ||n alpha|| with certified error < 2^-40, doubling the bit budget until
/// the result is separated from 0 and 1/2 by more than its error bound.
inline NearestIntDist nearest_int_dist(const AlphaSpec& alpha, const BigInt& n) {
  if (n < 1) throw DomainError("nearest_int_dist: n must be at least 1");
  auto from_exact = [&](const Rational& y) {
    // Tie rule: x = m + 1/2 rounds to m.
    const BigInt m = -floor_of(Rational(Rational(1, 2) - y));
    NearestIntDist out;
    out.nearest = m;
    const Rational off = y - Rational(m);
    out.offset = to_double(off);
    out.value = std::abs(out.offset);
    return out;
  };
  if (alpha.is_rational()) return from_exact(Rational(*alpha.exact_value() * Rational(n)));
  const int cap = precision_cap();
  int bits = 64 + static_cast<int>(bit_length(n));
  for (;;) {
    const int use = std::min(bits, cap);
    const Enclosure e = alpha.approx(use);
    const Rational y = e.mid * Rational(n);
    const Rational err = e.radius * Rational(n);
    NearestIntDist out = from_exact(y);
    const Rational dist = mp::abs(Rational(y - Rational(out.nearest)));
    const Rational to_half = Rational(1, 2) - dist;
    if (err < pow2(-40) && dist > err && to_half > err) {
      out.error_bound = to_double(err) + 1e-300;
      return out;
    }
    if (use >= cap)
      throw PrecisionExhausted("||n alpha|| for " + alpha.to_string() + ", n = " + n.str() +
                               " not separated from 0 or 1/2 within the precision cap");
    bits *= 2;
  }
}

inline NearestIntDist nearest_int_dist(const AlphaSpec& alpha, std::uint64_t n) {
  return nearest_int_dist(alpha, BigInt(n));
}

/// Streams the signed offsets n alpha - round(n alpha) for n = 1..n_max.
/// Fixed-point accumulation in 128-bit integers, falling back to certified
/// per-n queries whenever a value is too close to 0 or 1/2 to trust.
class MultipleScanner {
 public:
  MultipleScanner(const AlphaSpec& alpha, std::uint64_t n_max) : alpha_(alpha), n_max_(n_max) {
    if (n_max_ >= (std::uint64_t(1) << 50)) throw DomainError("scan horizon too large");
    if (const auto& ex = alpha.exact_value()) {
      rational_ = true;
      num_ = mp::numerator(*ex);
      den_ = mp::denominator(*ex);
      const BigInt r = num_ - floor_div(num_, den_) * den_;
      step_ = r;
      acc_ = 0;
      return;
    }
    Enclosure e;
    if (const auto* dec = alpha.decimal_data()) {
      e = {(dec->lo + dec->hi) / 2, (dec->hi - dec->lo) / 2};
    } else {
      e = alpha.approx(kBits + 1);
    }
    const BigInt modulus = BigInt(1) << kBits;
    const BigInt A = floor_of(Rational(e.mid * Rational(modulus)));
    const BigInt frac = A - floor_div(A, modulus) * modulus;
    step128_ = to_u128(frac);
    // Per-step error in units of 2^-kBits; saturates so that everything
    // falls back to certified queries when the representation is too coarse.
    const BigInt unit = floor_of(Rational(e.radius * Rational(modulus))) + 2;
    unit_err_ = unit > (BigInt(1) << 64) ? (u128(1) << 64) : to_u128(unit);
  }

  /// Offset for the next n (starting at 1) and whether it was exact.
  struct Item {
    std::uint64_t n;
    double offset;  // in (-1/2, 1/2]
    bool zero;      // n alpha is an integer
  };

  Item next() {
    ++n_;
    if (rational_) {
      acc_ += step_;
      if (acc_ >= den_) acc_ -= den_;
      // offset = acc/den or acc/den - 1 with ties to the lower integer.
      Rational f(acc_, den_);
      double off;
      if (f > Rational(1, 2))
        off = to_double(Rational(f - 1));
      else
        off = to_double(f);
      return {n_, off, acc_ == 0};
    }
    acc128_ = (acc128_ + step128_) & kMask;
    const u128 half = u128(1) << (kBits - 1);
    // Circular error below 2n units of 2^-kBits.
    const u128 err = unit_err_ * n_ + 2;
    const u128 to_zero = acc128_ < half ? acc128_ : (kMask - acc128_ + 1);
    const u128 to_half = acc128_ > half ? acc128_ - half : half - acc128_;
    if (to_zero <= err || to_half <= err) {
      const NearestIntDist d = nearest_int_dist(alpha_, BigInt(n_));
      return {n_, d.offset, d.value == 0.0};
    }
    double off = acc128_ < half ? std::ldexp(static_cast<double>(acc128_), -kBits)
                                : -std::ldexp(static_cast<double>(kMask - acc128_ + 1), -kBits);
    return {n_, off, false};
  }

  std::uint64_t n_max() const { return n_max_; }

 private:
  static constexpr int kBits = 120;
  static constexpr u128 kMask = (u128(1) << kBits) - 1;
  AlphaSpec alpha_;
  std::uint64_t n_max_;
  std::uint64_t n_ = 0;
  bool rational_ = false;
  BigInt num_, den_, step_, acc_;
  u128 step128_ = 0, acc128_ = 0, unit_err_ = 2;

  static u128 to_u128(const BigInt& v) {
    const BigInt lo_mask = (BigInt(1) << 64) - 1;
    return static_cast<u128>(BigInt(v & lo_mask).convert_to<unsigned long long>()) |
           (static_cast<u128>(BigInt(v >> 64).convert_to<unsigned long long>()) << 64);
  }
};

/// ||n alpha|| for n = 1..n_max (index n-1).
inline std::vector<double> nearest_int_dists(const AlphaSpec& alpha, std::uint64_t n_max) {
  std::vector<double> out(n_max);
  MultipleScanner scan(alpha, n_max);
  for (std::uint64_t i = 0; i < n_max; ++i) out[i] = std::abs(scan.next().offset);
  return out;
}

// ---------------------------------------------------------------------------

struct TypeWitness {
  std::uint64_t n;
  double dist;    // ||n alpha||
  double scaled;  // n^eta_hat * ||n alpha||
};

struct TypeEstimate {
  double eta_hat = 0.0;
  std::vector<TypeWitness> witnesses;  // records of the running maximum, ascending n
  std::uint64_t n_max = 0;
  std::uint64_t n_min = 2;  // lower end of the scanned window
  std::uint64_t argmax = 0;
  bool degenerate = false;  // some ||n alpha|| = 0 (alpha rational)
};

/// Empirical exponent max log(1/(2||n alpha||)) / log n over the window
/// ceil(sqrt(n_max)) <= n <= n_max (n >= 2). Dropping the head of the range
/// keeps the small-n transient (e.g. n = 2 for sqrt 2 gives 1.54) out of the
/// estimate, so that bounded-type numbers approach 1 from above.
inline TypeEstimate type_estimate(const AlphaSpec& alpha, std::uint64_t n_max) {
  if (n_max < 2) throw DomainError("type_estimate: n_max must be at least 2");
  TypeEstimate est;
  est.n_max = n_max;
  est.n_min = std::max<std::uint64_t>(
      2, static_cast<std::uint64_t>(std::ceil(std::sqrt(static_cast<double>(n_max)))));
  est.eta_hat = -std::numeric_limits<double>::infinity();
  MultipleScanner scan(alpha, n_max);
  std::vector<std::pair<std::uint64_t, double>> records;
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    const auto item = scan.next();
    if (item.zero) {
      est.degenerate = true;
      est.eta_hat = std::numeric_limits<double>::infinity();
      est.argmax = n;
      return est;
    }
    if (n < est.n_min) continue;
    const double d = std::abs(item.offset);
    const double e = std::log(1.0 / (2.0 * d)) / std::log(static_cast<double>(n));
    if (e > est.eta_hat) {
      est.eta_hat = e;
      est.argmax = n;
      records.emplace_back(n, d);
    }
  }
  for (auto [n, d] : records)
    est.witnesses.push_back({n, d, std::pow(static_cast<double>(n), est.eta_hat) * d});
  return est;
}

struct EpsProfile {
  std::vector<double> eps;         // eps[n-1] = max_k ||n alpha_k||
  std::vector<double> diagnostic;  // n^eta (log(n+1))^eta' eps(n), when requested
};

inline EpsProfile eps_profile(const std::vector<AlphaSpec>& alphas, std::uint64_t n_max,
                              std::optional<std::pair<double, double>> eta = std::nullopt) {
  if (alphas.empty()) throw DomainError("eps_profile: alpha list is empty");
  EpsProfile out;
  out.eps.assign(n_max, 0.0);
  for (const auto& a : alphas) {
    const auto d = nearest_int_dists(a, n_max);
    for (std::uint64_t i = 0; i < n_max; ++i) out.eps[i] = std::max(out.eps[i], d[i]);
  }
  if (eta) {
    out.diagnostic.resize(n_max);
    for (std::uint64_t i = 0; i < n_max; ++i) {
      const double n = static_cast<double>(i + 1);
      out.diagnostic[i] = std::pow(n, eta->first) * std::pow(std::log(n + 1.0), eta->second) *
                          out.eps[i];
    }
  }
  return out;
}

struct KhinchinePsi {
  std::function<double(std::uint64_t)> fn;
  bool non_increasing = false;
  std::string description;

  /// Checks positivity and the monotonicity flag on 1..n_max.
  void validate(std::uint64_t n_max) const {
    double prev = std::numeric_limits<double>::infinity();
    for (std::uint64_t n = 1; n <= n_max; ++n) {
      const double v = fn(n);
      if (!(v > 0.0)) throw DomainError("psi(" + std::to_string(n) + ") is not positive");
      if (non_increasing && v > prev)
        throw DomainError("psi flagged non-increasing but psi(" + std::to_string(n) +
                          ") > psi(" + std::to_string(n - 1) + ")");
      prev = v;
    }
  }
};

struct KhinchineResult {
  double value = 0.0;
  std::uint64_t argmin = 0;
};

/// Partial infimum over 1 <= n <= n_max of ||n alpha|| / psi(n).
inline KhinchineResult khinchine_r(const AlphaSpec& alpha, const KhinchinePsi& psi,
                                   std::uint64_t n_max) {
  if (n_max < 1) throw DomainError("khinchine_r: n_max must be at least 1");
  psi.validate(n_max);
  KhinchineResult best{std::numeric_limits<double>::infinity(), 0};
  MultipleScanner scan(alpha, n_max);
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    const auto item = scan.next();
    const double r = item.zero ? 0.0 : std::abs(item.offset) / psi.fn(n);
    if (r < best.value) best = {r, n};
    if (best.value == 0.0) break;
  }
  return best;
}

}  // namespace cltlab
