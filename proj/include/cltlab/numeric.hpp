#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <numbers>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace cltlab {

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class CompensatedComplexSum {
 public:
  void add(std::complex<double> z) noexcept {
    re_.add(z.real());
    im_.add(z.imag());
  }
  std::complex<double> value() const noexcept { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_, im_;
};

inline double compensated_total(std::span<const double> xs) noexcept {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

// Unevaluated sum hi + lo carrying ~106 bits.
struct DoubleDouble {
  double hi = 0.0;
  double lo = 0.0;
  double value() const noexcept { return hi + lo; }
};

/// t * a formed exactly up to the error of `a` itself (hi from an FMA split).
inline DoubleDouble mul(double t, const DoubleDouble& a) noexcept {
  const double p = t * a.hi;
  const double e = std::fma(t, a.hi, -p) + t * a.lo;
  const double s = p + e;
  return {s, e - (s - p)};
}

/// cos of an argument given as hi + lo with |lo| tiny: first-order correction
/// on top of the correctly reduced cos/sin of hi.
inline double cos_dd(const DoubleDouble& x) noexcept {
  return std::cos(x.hi) - std::sin(x.hi) * x.lo;
}

inline double sin_dd(const DoubleDouble& x) noexcept {
  return std::sin(x.hi) + std::cos(x.hi) * x.lo;
}

/// 1 - |cos x| without cancellation near the peaks of |cos|.
inline double one_minus_abs_cos(const DoubleDouble& x) noexcept {
  const double s = sin_dd(x);
  const double c = std::abs(cos_dd(x));
  return s * s / (1.0 + c);
}

/// Binomial(n, 1/2) probability mass, index k = 0..n. Built outward from the
/// mode by the ratio recurrence and renormalised, so no 2^-n underflow.
inline std::vector<double> binomial_half_pmf(int n) {
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  const int mode = n / 2;
  pmf[mode] = 1.0;
  for (int k = mode; k < n; ++k) pmf[k + 1] = pmf[k] * double(n - k) / double(k + 1);
  for (int k = mode; k > 0; --k) pmf[k - 1] = pmf[k] * double(k) / double(n - k + 1);
  long double total = 0.0L;
  for (double v : pmf) total += v;
  for (double& v : pmf) v = static_cast<double>(v / total);
  return pmf;
}

struct LeastSquaresResult {
  Eigen::VectorXd coef;
  double r2 = 0.0;
  double rms = 0.0;
};

/// Ordinary least squares y ~ X b (X includes any intercept column).
inline LeastSquaresResult least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  LeastSquaresResult out;
  out.coef = X.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd resid = y - X * out.coef;
  const double ss_res = resid.squaredNorm();
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).square().sum();
  out.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  out.rms = std::sqrt(ss_res / double(y.size()));
  return out;
}

inline unsigned default_thread_count() noexcept {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work is
/// claimed by index, so results written per index are deterministic. The
/// first exception thrown by any task is rethrown.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace cltlab
