#pragma once

// Real numbers with certified-precision access: quadratic surds, continued
// fractions (finite, eventually periodic, or generated), truncated decimals
// and exact rationals.

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "cltlab/errors.hpp"
#include "cltlab/numeric.hpp"

namespace cltlab {

namespace mp = boost::multiprecision;
using BigInt = mp::cpp_int;
using Rational = mp::cpp_rational;

// ---------------------------------------------------------------------------
// Precision budget shared by every certified query.

namespace detail {
inline std::atomic<int>& precision_cap_storage() {
  static std::atomic<int> cap = [] {
    if (const char* env = std::getenv("CLT_DIOPH_PRECISION_BITS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && *end == '\0' && v >= 64 && v <= (1L << 20)) return static_cast<int>(v);
    }
    return 4096;
  }();
  return cap;
}
}  // namespace detail

/// Ceiling on the bit budget of any precision refinement (default 4096,
/// overridden by CLT_DIOPH_PRECISION_BITS).
inline int precision_cap() { return detail::precision_cap_storage().load(); }
inline void set_precision_cap(int bits) {
  if (bits < 64) throw DomainError("precision cap must be at least 64 bits");
  detail::precision_cap_storage().store(bits);
}

// ---------------------------------------------------------------------------
// Small exact-arithmetic helpers.

inline BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline BigInt floor_of(const Rational& r) {
  return floor_div(mp::numerator(r), mp::denominator(r));
}

inline std::size_t bit_length(const BigInt& x) {
  return x == 0 ? 0 : static_cast<std::size_t>(mp::msb(mp::abs(x))) + 1;
}

inline bool is_perfect_square(const BigInt& x) {
  if (x < 0) return false;
  const BigInt s = mp::sqrt(x);
  return s * s == x;
}

/// Nearly correctly rounded conversion that never overflows on huge
/// numerators and denominators.
inline double to_double(const Rational& r) {
  const BigInt& num = mp::numerator(r);
  const BigInt& den = mp::denominator(r);
  if (num == 0) return 0.0;
  const long shift = 66 - (static_cast<long>(bit_length(num)) - static_cast<long>(bit_length(den)));
  BigInt q = shift >= 0 ? BigInt((num << shift) / den) : BigInt(num / (den << -shift));
  return std::ldexp(q.convert_to<double>(), static_cast<int>(-shift));
}

inline Rational pow2(long e) {
  if (e >= 0) return Rational(BigInt(1) << e);
  return Rational(BigInt(1), BigInt(1) << -e);
}

/// Exact value of a decimal literal such as "-12.5e-3" is not supported;
/// plain "[-]digits[.digits]" only. Returns value and fractional digit count.
inline std::pair<Rational, int> parse_decimal_literal(std::string_view s) {
  if (s.empty()) throw ParseError("empty decimal literal");
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    ++i;
  }
  BigInt digits = 0;
  int frac = 0;
  bool seen_point = false, any = false;
  for (; i < s.size(); ++i) {
    const char ch = s[i];
    if (ch == '.' && !seen_point) {
      seen_point = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      throw ParseError("malformed decimal literal '" + std::string(s) + "'");
    digits = digits * 10 + (ch - '0');
    any = true;
    if (seen_point) ++frac;
  }
  if (!any) throw ParseError("malformed decimal literal '" + std::string(s) + "'");
  BigInt den = mp::pow(BigInt(10), static_cast<unsigned>(frac));
  Rational v(neg ? BigInt(-digits) : digits, den);
  return {v, frac};
}

inline BigInt parse_bigint(std::string_view s) {
  std::string t(s);
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
  std::size_t k = 0;
  while (k < t.size() && std::isspace(static_cast<unsigned char>(t[k]))) ++k;
  t = t.substr(k);
  const std::size_t start = (!t.empty() && (t[0] == '-' || t[0] == '+')) ? 1 : 0;
  if (t.size() == start) throw ParseError("expected integer, got '" + std::string(s) + "'");
  for (std::size_t j = start; j < t.size(); ++j)
    if (!std::isdigit(static_cast<unsigned char>(t[j])))
      throw ParseError("expected integer, got '" + std::string(s) + "'");
  if (t[0] == '+') t = t.substr(1);
  return BigInt(t);
}

// ---------------------------------------------------------------------------

enum class AlphaKind { Surd, ContinuedFraction, Decimal, Rational };

/// |alpha - mid| < radius, or alpha == mid when radius == 0.
struct Enclosure {
  Rational mid;
  Rational radius;
  bool exact() const { return radius == 0; }
};

/// Generator of partial quotients a_i (i >= 1); returning 0 ends the
/// expansion (the number is then rational).
using QuotientGenerator = std::function<BigInt(std::size_t)>;

class AlphaSpec {
 public:
  /// (a + b*sqrt(d)) / c.
  static AlphaSpec surd(BigInt a, BigInt b, BigInt c, BigInt d) {
    if (c == 0) throw DomainError("surd: c must be non-zero");
    if (d < 0) throw DomainError("surd: d must be non-negative");
    if (b != 0 && is_perfect_square(d))
      throw DomainError("surd: d must not be a perfect square unless b = 0");
    if (c < 0) {
      a = -a;
      b = -b;
      c = -c;
    }
    BigInt g = mp::gcd(mp::gcd(mp::abs(a), mp::abs(b)), c);
    if (g > 1) {
      a /= g;
      b /= g;
      c /= g;
    }
    Surd s{a, b, c, d};
    auto impl = std::make_shared<Impl>();
    impl->kind = AlphaKind::Surd;
    impl->data = s;
    impl->text = "surd:" + a.str() + "," + b.str() + "," + c.str() + "," + d.str();
    if (b == 0) impl->exact_value = Rational(a, c);
    return AlphaSpec(std::move(impl));
  }

  static AlphaSpec rational(BigInt p, BigInt q = 1) {
    if (q == 0) throw DomainError("rational: zero denominator");
    Rational v(p, q);
    auto impl = std::make_shared<Impl>();
    impl->kind = AlphaKind::Rational;
    impl->data = v;
    impl->exact_value = v;
    impl->text = "rat:" + mp::numerator(v).str() + "/" + mp::denominator(v).str();
    return AlphaSpec(std::move(impl));
  }

  /// [a0; prefix..., period, period, ...]. An empty period means the finite
  /// continued fraction [a0; prefix...].
  static AlphaSpec continued_fraction(BigInt a0, std::vector<BigInt> prefix,
                                      std::vector<BigInt> period = {}) {
    for (const auto& v : prefix)
      if (v <= 0) throw DomainError("continued fraction: partial quotients must be positive");
    for (const auto& v : period)
      if (v <= 0) throw DomainError("continued fraction: partial quotients must be positive");
    Cf cf{a0, std::move(prefix), std::move(period), std::nullopt};
    std::ostringstream text;
    text << "cf:" << cf.a0.str() << ";";
    bool first = true;
    for (const auto& v : cf.prefix) {
      text << (first ? "" : ",") << v.str();
      first = false;
    }
    if (!cf.period.empty()) {
      text << (first ? "" : ",") << "periodic:";
      for (std::size_t i = 0; i < cf.period.size(); ++i) text << (i ? "," : "") << cf.period[i].str();
    }
    auto impl = std::make_shared<Impl>();
    impl->kind = AlphaKind::ContinuedFraction;
    impl->text = text.str();
    if (cf.period.empty()) {
      impl->exact_value = finite_cf_value(cf.a0, cf.prefix);
    } else {
      cf.surd = periodic_to_surd(cf);
    }
    impl->data = std::move(cf);
    return AlphaSpec(std::move(impl));
  }

  /// Infinite (or generator-terminated) continued fraction, e.g. e or a
  /// Liouville-type expansion.
  static AlphaSpec cf_generator(BigInt a0, QuotientGenerator term, std::string description) {
    auto impl = std::make_shared<Impl>();
    impl->kind = AlphaKind::ContinuedFraction;
    impl->text = "cfgen:" + description;
    impl->data = Gen{std::move(a0), std::move(term)};
    return AlphaSpec(std::move(impl));
  }

  /// Truncated decimal expansion: alpha lies between the literal and the
  /// literal moved one unit in the last place away from zero.
  static AlphaSpec decimal(std::string_view digits) {
    auto [v, frac] = parse_decimal_literal(digits);
    const Rational ulp(BigInt(1), mp::pow(BigInt(10), static_cast<unsigned>(frac)));
    Dec dec;
    const bool neg = !digits.empty() && digits[0] == '-';
    dec.lo = neg ? Rational(v - ulp) : v;
    dec.hi = neg ? v : Rational(v + ulp);
    dec.digits = frac;
    auto impl = std::make_shared<Impl>();
    impl->kind = AlphaKind::Decimal;
    impl->text = "dec:" + std::string(digits);
    impl->data = std::move(dec);
    return AlphaSpec(std::move(impl));
  }

  /// Text grammar: surd:a,b,c,d | cf:a0;a1,...[,periodic:p1,...] |
  /// dec:<digits> | rat:p/q.
  static AlphaSpec parse(std::string_view text);

  AlphaKind kind() const { return impl_->kind; }
  const std::string& to_string() const { return impl_->text; }
  bool same_as(const AlphaSpec& other) const {
    return impl_ == other.impl_ || impl_->text == other.impl_->text;
  }

  /// Exactly known rational value, if any.
  const std::optional<Rational>& exact_value() const { return impl_->exact_value; }
  bool is_rational() const { return impl_->exact_value.has_value(); }

  /// Rational r with |alpha - r| < 2^-bits (or exact). Throws
  /// PrecisionExhausted when the representation cannot deliver `bits`.
  Enclosure approx(int bits) const {
    if (impl_->exact_value) return {*impl_->exact_value, Rational(0)};
    {
      std::lock_guard lock(impl_->cache_mutex);
      if (impl_->cache_bits >= bits) return impl_->cache;
    }
    Enclosure e = compute_approx(bits);
    std::lock_guard lock(impl_->cache_mutex);
    if (bits > impl_->cache_bits) {
      impl_->cache_bits = bits;
      impl_->cache = e;
    }
    return e;
  }

  /// Sign of (alpha - q); exact for surd, rational and continued-fraction
  /// kinds, refined up to the precision cap otherwise.
  int compare(const Rational& q) const {
    if (impl_->exact_value) return sign_of(*impl_->exact_value - q);
    if (const auto* s = surd_data()) return surd_compare(*s, q);
    if (const auto* dec = std::get_if<Dec>(&impl_->data)) {
      if (q < dec->lo) return 1;
      if (q > dec->hi) return -1;
      throw PrecisionExhausted("decimal digits cannot decide comparison with " + q.str());
    }
    for (int bits = 64; bits <= precision_cap(); bits *= 2) {
      const Enclosure e = approx(bits);
      const Rational diff = e.mid - q;
      if (mp::abs(diff) >= e.radius) return sign_of(diff);
    }
    throw PrecisionExhausted("comparison of " + to_string() + " with " + q.str() +
                             " not decided within the precision cap");
  }

  double to_double() const { return cltlab::to_double(approx(80).mid); }

  DoubleDouble to_double_double() const {
    const Rational mid = approx(140).mid;
    const double hi = cltlab::to_double(mid);
    const double lo = cltlab::to_double(Rational(mid - Rational(hi)));
    return {hi, lo};
  }

  /// Fixed-point value A with |alpha * 2^F - A| < 2.
  BigInt fixed_point(int F) const {
    const Enclosure e = approx(F + 1);
    return floor_of(Rational(e.mid * pow2(F)));
  }

  // Introspection used by the continued-fraction expansion.
  struct Surd {
    BigInt a, b, c, d;
  };
  struct Cf {
    BigInt a0;
    std::vector<BigInt> prefix;
    std::vector<BigInt> period;
    std::optional<Surd> surd;
  };
  struct Gen {
    BigInt a0;
    QuotientGenerator term;
  };
  struct Dec {
    Rational lo, hi;
    int digits = 0;
  };

  const Surd* surd_data() const {
    if (const auto* s = std::get_if<Surd>(&impl_->data)) return s;
    if (const auto* cf = std::get_if<Cf>(&impl_->data)) return cf->surd ? &*cf->surd : nullptr;
    return nullptr;
  }
  const Cf* cf_data() const { return std::get_if<Cf>(&impl_->data); }
  const Gen* generator_data() const { return std::get_if<Gen>(&impl_->data); }
  const Dec* decimal_data() const { return std::get_if<Dec>(&impl_->data); }

 private:
  struct Impl {
    AlphaKind kind = AlphaKind::Rational;
    std::variant<Surd, Cf, Gen, Dec, Rational> data;
    std::optional<Rational> exact_value;
    std::string text;
    // Highest-precision enclosure computed so far; shared across copies.
    mutable std::mutex cache_mutex;
    mutable int cache_bits = -1;
    mutable Enclosure cache;
  };

  explicit AlphaSpec(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

  static int sign_of(const Rational& r) { return r > 0 ? 1 : (r < 0 ? -1 : 0); }

  static Rational finite_cf_value(const BigInt& a0, const std::vector<BigInt>& q) {
    if (q.empty()) return Rational(a0);
    Rational v(q.back());
    for (std::size_t i = q.size() - 1; i-- > 0;) v = Rational(q[i]) + Rational(1) / v;
    return Rational(a0) + Rational(1) / v;
  }

  static Surd periodic_to_surd(const Cf& cf) {
    // Purely periodic tail x = [b1; ..., bk, x].
    BigInt P = 1, Pm = 0, Q = 0, Qm = 1;  // (p_{-1}, p_{-2}, q_{-1}, q_{-2})
    for (const auto& b : cf.period) {
      BigInt np = b * P + Pm, nq = b * Q + Qm;
      Pm = P;
      P = np;
      Qm = Q;
      Q = nq;
    }
    const BigInt u = P - Qm;
    const BigInt D = (P - Qm) * (P - Qm) + 4 * Q * Pm;
    const BigInt w = 2 * Q;
    // alpha = [a0; prefix..., x] = (p x + p') / (q x + q').
    BigInt p = cf.a0, pp = 1, q = 1, qp = 0;
    for (const auto& a : cf.prefix) {
      BigInt np = a * p + pp, nq = a * q + qp;
      pp = p;
      p = np;
      qp = q;
      q = nq;
    }
    const BigInt A = p * u + pp * w, B = p, C = q * u + qp * w, E = q;
    BigInt sa = A * C - B * E * D, sb = B * C - A * E, sc = C * C - E * E * D;
    if (sc < 0) {
      sa = -sa;
      sb = -sb;
      sc = -sc;
    }
    BigInt g = mp::gcd(mp::gcd(mp::abs(sa), mp::abs(sb)), sc);
    if (g > 1) {
      sa /= g;
      sb /= g;
      sc /= g;
    }
    return Surd{sa, sb, sc, D};
  }

  static int surd_compare(const Surd& s, const Rational& q) {
    // sign((a + b sqrt d)/c - u/v) with c, v > 0.
    const BigInt& u = mp::numerator(q);
    const BigInt& v = mp::denominator(q);
    const BigInt X = v * s.a - u * s.c;
    const BigInt Y = v * s.b;
    const int sx = X > 0 ? 1 : (X < 0 ? -1 : 0);
    const int sy = Y > 0 ? 1 : (Y < 0 ? -1 : 0);
    if (sy == 0 || s.d == 0) return sx;
    if (sx == 0 || sx == sy) return sy;
    const BigInt lhs = X * X, rhs = Y * Y * s.d;
    if (lhs > rhs) return sx;
    if (lhs < rhs) return sy;
    return 0;
  }

  Enclosure compute_approx(int bits) const {
    if (bits > precision_cap())
      throw PrecisionExhausted("requested " + std::to_string(bits) + " bits exceeds the cap of " +
                               std::to_string(precision_cap()));
    if (const auto* s = surd_data()) {
      const long K = bits + 1;
      const BigInt scale = BigInt(1) << K;
      const BigInt root = mp::sqrt(BigInt(s->b * s->b * s->d * scale * scale));
      const BigInt num = s->a * scale + (s->b < 0 ? BigInt(-root) : root);
      return {Rational(num, BigInt(s->c * scale)), Rational(BigInt(1), BigInt(s->c * scale))};
    }
    if (const auto* g = generator_data()) {
      BigInt p = g->a0, pp = 1, q = 1, qp = 0;
      const BigInt target = BigInt(1) << bits;
      for (std::size_t i = 1;; ++i) {
        const BigInt a = g->term(i);
        if (a == 0) return {Rational(p, q), Rational(0)};
        if (a < 0) throw DomainError("continued fraction generator produced a negative quotient");
        BigInt np = a * p + pp, nq = a * q + qp;
        if (q * nq > target) return {Rational(p, q), Rational(BigInt(1), BigInt(q * nq))};
        pp = p;
        p = np;
        qp = q;
        q = nq;
        if (bit_length(q) > static_cast<std::size_t>(precision_cap()))
          throw PrecisionExhausted("continued fraction generator exceeded the precision cap");
      }
    }
    if (const auto* dec = decimal_data()) {
      const Rational radius = (dec->hi - dec->lo) / 2;
      if (radius >= pow2(-bits))
        throw PrecisionExhausted(to_string() + ": " + std::to_string(dec->digits) +
                                 " decimal digits cannot certify " + std::to_string(bits) +
                                 " bits");
      // Closed interval: widen by a hair so that the bound stays strict.
      return {(dec->lo + dec->hi) / 2, Rational(radius + pow2(-bits - 2))};
    }
    throw PrecisionExhausted("no approximation available for " + to_string());
  }

  std::shared_ptr<Impl> impl_;
};

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline AlphaSpec AlphaSpec::parse(std::string_view text) {
  text = detail::trim(text);
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw ParseError("alpha spec '" + std::string(text) + "' lacks a kind prefix");
  const std::string_view kind = text.substr(0, colon);
  const std::string_view body = text.substr(colon + 1);
  if (kind == "surd") {
    const auto parts = detail::split(body, ',');
    if (parts.size() != 4) throw ParseError("surd expects 4 integers a,b,c,d");
    return surd(parse_bigint(parts[0]), parse_bigint(parts[1]), parse_bigint(parts[2]),
                parse_bigint(parts[3]));
  }
  if (kind == "rat") {
    const auto parts = detail::split(body, '/');
    if (parts.size() == 1) return rational(parse_bigint(parts[0]));
    if (parts.size() != 2) throw ParseError("rat expects p/q");
    return rational(parse_bigint(parts[0]), parse_bigint(parts[1]));
  }
  if (kind == "dec") return decimal(detail::trim(body));
  if (kind == "cf") {
    const auto semi = body.find(';');
    const BigInt a0 = parse_bigint(body.substr(0, semi));
    std::vector<BigInt> prefix, period;
    if (semi != std::string_view::npos) {
      const std::string_view rest = detail::trim(body.substr(semi + 1));
      bool in_period = false;
      if (!rest.empty()) {
        for (auto tok : detail::split(rest, ',')) {
          std::string_view t = detail::trim(tok);
          if (t.substr(0, 9) == "periodic:") {
            if (in_period) throw ParseError("cf: duplicate periodic marker");
            in_period = true;
            t = t.substr(9);
          }
          (in_period ? period : prefix).push_back(parse_bigint(t));
        }
      }
    }
    return continued_fraction(a0, std::move(prefix), std::move(period));
  }
  throw ParseError("unknown alpha kind '" + std::string(kind) + "'");
}

}  // namespace cltlab
