#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <thread>

#include "cltlab/dioph.hpp"

using namespace cltlab;

namespace {

AlphaSpec sqrt2() { return AlphaSpec::parse("surd:0,1,1,2"); }
AlphaSpec golden() { return AlphaSpec::parse("surd:1,1,2,5"); }

std::vector<long> terms(const ContinuedFraction& cf) {
  std::vector<long> out{cf.a0.convert_to<long>()};
  for (const auto& a : cf.quotients) out.push_back(a.convert_to<long>());
  return out;
}

// Liouville-type decimal sum_{k<=5} 10^{-k!} written out digit by digit.
std::string liouville_digits() {
  std::string s(120, '0');
  for (int k : {1, 2, 6, 24, 120}) s[k - 1] = '1';
  return "0." + s;
}

}  // namespace

TEST(AlphaSpec, ParsesEveryKind) {
  EXPECT_EQ(AlphaSpec::parse("surd:0,1,1,2").kind(), AlphaKind::Surd);
  EXPECT_EQ(AlphaSpec::parse("cf:1;periodic:2").kind(), AlphaKind::ContinuedFraction);
  EXPECT_EQ(AlphaSpec::parse("dec:1.4142").kind(), AlphaKind::Decimal);
  EXPECT_EQ(AlphaSpec::parse("rat:9/4").kind(), AlphaKind::Rational);
  EXPECT_THROW(AlphaSpec::parse("surd:0,1,1,4"), DomainError);
  EXPECT_THROW(AlphaSpec::parse("foo:1"), ParseError);
  EXPECT_THROW(AlphaSpec::parse("cf:1;0,2"), DomainError);
  EXPECT_THROW(AlphaSpec::parse("rat:1/0"), DomainError);
}

TEST(AlphaSpec, PeriodicContinuedFractionEqualsSurd) {
  const auto a = AlphaSpec::parse("cf:1;periodic:2");
  ASSERT_NE(a.surd_data(), nullptr);
  // The periodic expansion reduces to sqrt(8)/2.
  EXPECT_EQ(a.compare(Rational(141421356, 100000000)), 1);
  EXPECT_EQ(a.compare(Rational(141421357, 100000000)), -1);
  EXPECT_NEAR(a.to_double(), std::sqrt(2.0), 1e-16);
}

TEST(AlphaSpec, OracleMeetsRequestedPrecision) {
  const auto a = sqrt2();
  for (int bits : {10, 64, 200, 1000}) {
    const Enclosure e = a.approx(bits);
    EXPECT_LT(e.radius, pow2(-bits));
    // Exact check: mid - radius < sqrt 2 < mid + radius.
    EXPECT_EQ(a.compare(Rational(e.mid - e.radius)), 1);
    EXPECT_EQ(a.compare(Rational(e.mid + e.radius)), -1);
  }
}

TEST(AlphaSpec, DecimalBudgetIsHard) {
  const auto a = AlphaSpec::parse("dec:1.41421356");
  EXPECT_NO_THROW(a.approx(20));
  EXPECT_THROW(a.approx(40), PrecisionExhausted);
}

TEST(AlphaSpec, ConcurrentOracleCallsAgree) {
  const auto a = golden();
  std::vector<Rational> mids(8);
  {
    std::vector<std::jthread> pool;
    for (int i = 0; i < 8; ++i) pool.emplace_back([&, i] { mids[i] = a.approx(512 + 64 * i).mid; });
  }
  for (int i = 0; i < 8; ++i) EXPECT_LT(mp::abs(Rational(mids[i] - mids[7])), pow2(-500));
}

TEST(CfExpand, SqrtTwo) {
  const auto cf = cf_expand(sqrt2(), 6);
  EXPECT_EQ(terms(cf), (std::vector<long>{1, 2, 2, 2, 2, 2}));
  ASSERT_TRUE(cf.period.has_value());
  EXPECT_EQ(cf.period->first, 1u);
  EXPECT_EQ(cf.period->second, 1u);
  EXPECT_FALSE(cf.terminated);
}

TEST(CfExpand, RationalTerminates) {
  const auto cf = cf_expand(AlphaSpec::rational(5, 3), 10);
  EXPECT_EQ(terms(cf), (std::vector<long>{1, 1, 2}));
  EXPECT_TRUE(cf.terminated);
}

TEST(CfExpand, GoldenRatio) {
  EXPECT_EQ(terms(cf_expand(golden(), 5)), (std::vector<long>{1, 1, 1, 1, 1}));
}

TEST(CfExpand, SurdPeriodsMatchKnownExpansions) {
  // sqrt 7 = [2; 1,1,1,4], sqrt 13 = [3; 1,1,1,1,6], (3 + sqrt 7)/2 -> period 4.
  EXPECT_EQ(terms(cf_expand(AlphaSpec::parse("surd:0,1,1,7"), 9)),
            (std::vector<long>{2, 1, 1, 1, 4, 1, 1, 1, 4}));
  EXPECT_EQ(terms(cf_expand(AlphaSpec::parse("surd:0,1,1,13"), 7)),
            (std::vector<long>{3, 1, 1, 1, 1, 6, 1}));
  const auto neg = cf_expand(AlphaSpec::parse("surd:0,-1,1,2"), 5);
  EXPECT_EQ(terms(neg), (std::vector<long>{-2, 1, 1, 2, 2}));
  const auto p = cf_expand(AlphaSpec::parse("surd:3,1,2,7"), 3).period;
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(p->second, 4u);
}

TEST(CfExpand, SurdAgreesWithHighPrecisionFloorAlgorithm) {
  // Oracle: the textbook algorithm run on a 2000-bit rational enclosure.
  for (const char* text : {"surd:1,3,5,11", "surd:-7,2,3,19", "surd:2,-5,7,3", "surd:0,1,1,1000003"}) {
    const auto a = AlphaSpec::parse(text);
    const auto cf = cf_expand(a, 30);
    Rational x = a.approx(2000).mid;
    for (std::size_t k = 0; k < 30; ++k) {
      const BigInt fl = floor_of(x);
      EXPECT_EQ(fl, cf.term(k)) << text << " term " << k;
      x = Rational(1) / Rational(x - Rational(fl));
    }
  }
}

TEST(CfExpand, DecimalReportsCertifiedCount) {
  const auto a = AlphaSpec::parse("dec:1.4142135623730950488");
  const auto cf = cf_expand_certified(a, 60);
  EXPECT_GT(cf.certified, 10u);
  EXPECT_LT(cf.certified, 60u);
  for (std::size_t k = 1; k < cf.certified; ++k) EXPECT_EQ(cf.term(k), 2);
  EXPECT_THROW(cf_expand(a, 60), PrecisionExhausted);
  EXPECT_NO_THROW(cf_expand(a, 10));
}

TEST(CfExpand, GeneratorKind) {
  // e = [2; 1, 2, 1, 1, 4, 1, 1, 6, ...]
  const auto e = AlphaSpec::cf_generator(
      2,
      [](std::size_t i) -> BigInt { return (i % 3 == 2) ? BigInt(2 * (i + 1) / 3) : BigInt(1); },
      "e");
  EXPECT_EQ(terms(cf_expand(e, 9)), (std::vector<long>{2, 1, 2, 1, 1, 4, 1, 1, 6}));
  EXPECT_NEAR(e.to_double(), std::exp(1.0), 1e-15);
  EXPECT_EQ(e.compare(Rational(2718281828, 1000000000)), 1);
}

TEST(Convergents, SqrtTwoAndGolden) {
  const auto c = convergents(cf_expand(sqrt2(), 6), 3);
  ASSERT_EQ(c.size(), 4u);
  const long expect[4][2] = {{1, 1}, {3, 2}, {7, 5}, {17, 12}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(c[i].p, expect[i][0]);
    EXPECT_EQ(c[i].q, expect[i][1]);
  }
  const auto g = convergents(cf_expand(golden(), 6), 4);
  const long fib[5][2] = {{1, 1}, {2, 1}, {3, 2}, {5, 3}, {8, 5}};
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(g[i].p, fib[i][0]);
    EXPECT_EQ(g[i].q, fib[i][1]);
  }
  const auto z = convergents(cf_expand(AlphaSpec::rational(-7, 3), 3), 0);
  EXPECT_EQ(z[0].p, -3);
  EXPECT_EQ(z[0].q, 1);
  EXPECT_THROW(convergents(cf_expand(sqrt2(), 3), 3), IndexOutOfRange);
}

TEST(Convergents, DeterminantIdentityProperty) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 40; ++trial) {
    const long a = long(rng() % 41) - 20, b = long(rng() % 9) + 1, c = long(rng() % 9) + 1;
    long d = long(rng() % 200) + 2;
    while (is_perfect_square(BigInt(d))) ++d;
    const auto alpha = AlphaSpec::surd(a, b, c, d);
    const auto cf = cf_expand(alpha, 40);
    const auto& cv = cf.convergents;
    for (std::size_t k = 1; k < cv.size(); ++k) {
      const BigInt det = cv[k].p * cv[k - 1].q - cv[k - 1].p * cv[k].q;
      EXPECT_EQ(det, (k % 2 == 1) ? 1 : -1);
      EXPECT_GT(cv[k].q, cv[k - 1].q - (k == 1 ? 1 : 0));
    }
    // ||q_k alpha|| = |q_k alpha - p_k| < 1/q_{k+1}
    for (std::size_t k = 0; k + 1 < 25; ++k) {
      const auto d = nearest_int_dist(alpha, cv[k].q);
      if (d.value == 0.0) continue;
      EXPECT_LT(d.value, 1.0 / cv[k + 1].q.convert_to<double>() + d.error_bound);
      if (k >= 1) {
        EXPECT_EQ(d.nearest, cv[k].p);
      }
    }
  }
}

TEST(NearestIntDist, Examples) {
  EXPECT_DOUBLE_EQ(nearest_int_dist(AlphaSpec::rational(9, 4), 1).value, 0.25);
  const auto d = nearest_int_dist(sqrt2(), 12);
  EXPECT_NEAR(d.value, 0.029437251522859414, 1e-16);
  EXPECT_LT(d.error_bound, std::ldexp(1.0, -40));
  EXPECT_EQ(d.nearest, 17);
  // Tie rule at a half-integer: 3/2 rounds to 1.
  const auto t = nearest_int_dist(AlphaSpec::rational(3, 2), 1);
  EXPECT_EQ(t.nearest, 1);
  EXPECT_DOUBLE_EQ(t.value, 0.5);
}

TEST(NearestIntDist, StrictlyDecreasingAlongConvergents) {
  const auto cf = cf_expand(sqrt2(), 30);
  double prev = 1.0;
  for (std::size_t k = 0; k < 30; ++k) {
    const auto d = nearest_int_dist(sqrt2(), cf.convergents[k].q);
    // Exact surd arithmetic: |q sqrt2 - p| = |2q^2 - p^2| / (q sqrt2 + p).
    const double p = cf.convergents[k].p.convert_to<double>(), q = cf.convergents[k].q.convert_to<double>();
    EXPECT_NEAR(d.value, 1.0 / (q * std::sqrt(2.0) + p), 1e-15 * d.value + d.error_bound);
    EXPECT_LT(d.value, prev);
    prev = d.value;
  }
}

TEST(NearestIntDist, LiouvilleNeedsPrecisionAndDecimalBudgetFailsLoudly) {
  const auto l = AlphaSpec::decimal(liouville_digits());
  const auto d = nearest_int_dist(l, 1000000);
  EXPECT_NEAR(d.value, 1e-18, 1e-30);
  const auto shortdec = AlphaSpec::parse("dec:0.110001");
  EXPECT_THROW(nearest_int_dist(shortdec, 1000000), PrecisionExhausted);
}

TEST(NearestIntDist, ScannerMatchesCertifiedQueries) {
  for (const char* text : {"surd:0,1,1,2", "surd:1,1,2,5", "rat:355/113", "cf:0;3,periodic:1,4"}) {
    const auto a = AlphaSpec::parse(text);
    const auto all = nearest_int_dists(a, 3000);
    for (std::uint64_t n = 1; n <= 3000; n += 7) {
      const auto d = nearest_int_dist(a, n);
      EXPECT_NEAR(all[n - 1], d.value, 1e-15) << text << " n=" << n;
    }
  }
}

TEST(NearestIntDist, MetricPropertiesProperty) {
  // ||x|| <= |x|, ||x+y|| <= ||x|| + ||y||, | ||x|| - ||y|| | <= ||x - y||, on rationals.
  std::mt19937_64 rng(7);
  auto norm = [](const Rational& x) {
    return nearest_int_dist(AlphaSpec::rational(mp::numerator(x), mp::denominator(x)), 1).value;
  };
  for (int i = 0; i < 2000; ++i) {
    const Rational x(long(rng() % 200001) - 100000, long(rng() % 9999) + 1);
    const Rational y(long(rng() % 200001) - 100000, long(rng() % 9999) + 1);
    const double nx = norm(x), ny = norm(y);
    EXPECT_LE(nx, std::abs(to_double(x)) + 1e-15);
    EXPECT_LE(norm(Rational(x + y)), nx + ny + 1e-15);
    EXPECT_LE(std::abs(nx - ny), norm(Rational(x - y)) + 1e-15);
  }
}

TEST(TypeEstimate, SqrtTwoIsNearOne) {
  const auto est = type_estimate(sqrt2(), 10000);
  EXPECT_GE(est.eta_hat, 1.0);
  EXPECT_LE(est.eta_hat, 1.15);
  EXPECT_NEAR(est.eta_hat, 1.0675586854464785, 1e-9);
  EXPECT_EQ(est.argmax, 169u);
  EXPECT_FALSE(est.degenerate);
  for (const auto& w : est.witnesses) {
    EXPECT_GE(w.n, 1u);
    EXPECT_LE(w.n, 10000u);
    EXPECT_GT(w.dist, 0.0);
    EXPECT_LE(w.dist, 0.5);
  }
  EXPECT_NEAR(est.witnesses.back().scaled, 0.5, 1e-12);
  // Approaches 1 from above along the horizon.
  EXPECT_LT(type_estimate(sqrt2(), 1000000).eta_hat, est.eta_hat);
}

TEST(TypeEstimate, RationalIsDegenerate) {
  EXPECT_TRUE(type_estimate(AlphaSpec::rational(3, 7), 100).degenerate);
}

TEST(TypeEstimate, LiouvilleHorizonValues) {
  const auto l = AlphaSpec::decimal(liouville_digits());
  const auto small = type_estimate(l, 10000);
  EXPECT_NEAR(small.eta_hat, 1.8494850021680094, 1e-9);
  EXPECT_EQ(small.argmax, 100u);
  const auto big = type_estimate(l, 1000000);
  EXPECT_NEAR(big.eta_hat, std::log(0.5e18) / std::log(1e6), 1e-9);
  EXPECT_EQ(big.argmax, 1000000u);
}

TEST(EpsProfile, Examples) {
  const auto p = eps_profile({sqrt2()}, 3);
  EXPECT_NEAR(p.eps[0], 0.41421356237309505, 1e-15);
  EXPECT_NEAR(p.eps[1], 0.17157287525380990, 1e-15);
  EXPECT_NEAR(p.eps[2], 0.24264068711928515, 1e-15);
  EXPECT_EQ(eps_profile({AlphaSpec::rational(1, 2)}, 2).eps[1], 0.0);
  const auto two = eps_profile({sqrt2(), AlphaSpec::parse("surd:0,1,1,3")}, 2, std::make_pair(1.0, 0.0));
  EXPECT_NEAR(two.eps[0], 0.41421356237309505, 1e-15);
  EXPECT_NEAR(two.eps[1], 0.46410161513775459, 1e-15);
  EXPECT_NEAR(two.diagnostic[1], 2 * 0.46410161513775459, 1e-14);
}

TEST(Khinchine, Examples) {
  KhinchinePsi psi{[](std::uint64_t n) { return 1.0 / (double(n) * std::pow(std::log(double(n) + 1), 1.5)); },
                   true, "1/(n log^1.5(n+1))"};
  const auto r = khinchine_r(sqrt2(), psi, 1000);
  EXPECT_NEAR(r.value, 0.23903555608348322, 1e-12);
  EXPECT_EQ(r.argmin, 1u);  // q_0 = 1
  KhinchinePsi one{[](std::uint64_t) { return 1.0; }, true, "1"};
  EXPECT_NEAR(khinchine_r(sqrt2(), one, 1).value, 0.41421356237309505, 1e-15);
  EXPECT_EQ(khinchine_r(AlphaSpec::rational(2, 7), one, 7).value, 0.0);
  // Monotone non-increasing in the horizon.
  double prev = 1e300;
  for (std::uint64_t N : {1u, 10u, 100u, 1000u}) {
    const double v = khinchine_r(golden(), psi, N).value;
    EXPECT_LE(v, prev);
    prev = v;
  }
  KhinchinePsi bad{[](std::uint64_t n) { return double(n); }, true, "n"};
  EXPECT_THROW(khinchine_r(sqrt2(), bad, 5), DomainError);
}
