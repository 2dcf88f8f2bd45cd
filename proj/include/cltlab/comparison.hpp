#pragma once

// Comparison functions G (continuous, possibly non-monotone, or step) and
// the exact Kolmogorov distance sup_x |F(x) - G(x)| for a discrete F.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "cltlab/distribution.hpp"

namespace cltlab {

/// Bounded-variation G with G(-inf) = 0 and G(+inf) = 1.
class ComparisonFn {
 public:
  virtual ~ComparisonFn() = default;

  virtual double value(double x) const = 0;
  /// G(x-); equals value(x) unless x is a jump point.
  virtual double left_value(double x) const { return value(x); }
  /// G'(x) away from jump points.
  virtual double derivative(double x) const = 0;
  /// Points in [lo, hi] where G' vanishes (isolated zeros only), ascending.
  virtual std::vector<double> stationary_points(double lo, double hi) const = 0;
  /// Discontinuities, ascending.
  virtual std::vector<double> jump_points() const { return {}; }

  /// Integral of x^2 dG over the real line.
  virtual double second_moment() const = 0;
  /// Integral of x^2 dG over |x| >= a.
  virtual double tail_second_moment(double a) const = 0;
  /// (sup_{x >= a} x^2 |1 - G(x)|, sup_{x <= -a} x^2 |G(x)|).
  virtual std::pair<double, double> tail_sups(double a) const {
    auto scan = [&](auto&& h) {
      // Coarse scan, then golden-section refinement around the best node.
      double best_x = a, best = h(a);
      const double step = 0.01;
      for (double x = a; x <= a + 40.0; x += step) {
        const double v = h(x);
        if (v > best) {
          best = v;
          best_x = x;
        }
      }
      double lo = std::max(a, best_x - step), hi = best_x + step;
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      for (int it = 0; it < 80; ++it) {
        const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
        if (h(m1) < h(m2))
          lo = m1;
        else
          hi = m2;
      }
      return std::max(best, h(0.5 * (lo + hi)));
    };
    const double right = scan([&](double x) { return x * x * std::abs(1.0 - value(x)); });
    const double left = scan([&](double x) { return x * x * std::abs(value(-x)); });
    return {right, left};
  }
  /// Interval carrying the whole measure, if compact.
  virtual std::optional<std::pair<double, double>> support() const { return std::nullopt; }
};

/// Distribution function of a DiscreteDist used as a comparison function.
class StepCdf final : public ComparisonFn {
 public:
  explicit StepCdf(DiscreteDist d) : d_(std::move(d)) {}

  double value(double x) const override { return d_.cdf(x); }
  double left_value(double x) const override { return d_.cdf_left(x); }
  double derivative(double) const override { return 0.0; }
  // Constant between jumps: the jump points already carry every extremum.
  std::vector<double> stationary_points(double, double) const override { return {}; }
  std::vector<double> jump_points() const override {
    return {d_.positions().begin(), d_.positions().end()};
  }
  double second_moment() const override {
    CompensatedSum s;
    for (std::size_t i = 0; i < d_.size(); ++i) s.add(d_.weight(i) * d_.position(i) * d_.position(i));
    return s.value();
  }
  double tail_second_moment(double a) const override {
    CompensatedSum s;
    for (std::size_t i = 0; i < d_.size(); ++i)
      if (std::abs(d_.position(i)) >= a) s.add(d_.weight(i) * d_.position(i) * d_.position(i));
    return s.value();
  }
  std::pair<double, double> tail_sups(double a) const override {
    // x^2 grows within each constant stretch, so suprema sit at left limits
    // of the next jump (right side) or at jumps themselves (left side).
    double right = 0.0, left = 0.0;
    for (std::size_t i = 0; i < d_.size(); ++i) {
      const double x = d_.position(i);
      if (x > a) right = std::max(right, x * x * (1.0 - d_.cdf_left(x)));
      if (x <= -a) left = std::max(left, x * x * d_.cdf(x));
    }
    if (d_.position(d_.size() - 1) < a) right = 0.0;
    else right = std::max(right, a * a * (1.0 - d_.cdf(a)));
    return {right, left};
  }
  std::optional<std::pair<double, double>> support() const override {
    return std::make_pair(d_.position(0), d_.position(d_.size() - 1));
  }
  const DiscreteDist& distribution() const { return d_; }

 private:
  DiscreteDist d_;
};

enum class Side { Left, Right };

inline const char* to_string(Side s) { return s == Side::Left ? "left" : "right"; }

struct KolmogorovResult {
  double delta = 0.0;
  double argmax = 0.0;
  Side side = Side::Right;
};

/// sup_x |F(x) - G(x)| over the complete candidate set: every atom from both
/// sides, every jump of G from both sides and every stationary point of G
/// (where F is constant on the enclosing gap). The tails contribute their
/// limit 0. Among equal maxima the first in ascending order wins, with the
/// left limit ordered before the right one at a common point.
inline KolmogorovResult kolmogorov_distance(const DiscreteDist& d, const ComparisonFn& G) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> extra = G.stationary_points(-inf, inf);
  const auto jumps = G.jump_points();
  extra.insert(extra.end(), jumps.begin(), jumps.end());
  std::sort(extra.begin(), extra.end());

  KolmogorovResult best{0.0, 0.0, Side::Right};
  bool have = false;
  auto offer = [&](double v, double x, Side s) {
    if (!have || v > best.delta * (1.0 + 1e-14)) {
      best = {v, x, s};
      have = true;
    }
  };
  auto offer_point = [&](double x) {
    offer(std::abs(d.cdf_left(x) - G.left_value(x)), x, Side::Left);
    offer(std::abs(d.cdf(x) - G.value(x)), x, Side::Right);
  };

  const auto pos = d.positions();
  std::size_t e = 0;
  for (std::size_t k = 0; k < pos.size(); ++k) {
    const double x = pos[k];
    while (e < extra.size() && extra[e] < x) offer_point(extra[e++]);
    while (e < extra.size() && extra[e] == x) ++e;  // covered by the atom itself
    const double below = k == 0 ? 0.0 : d.prefix(k - 1);
    const double gl = G.left_value(x);
    const double gr = jumps.empty() ? gl : G.value(x);
    offer(std::abs(below - gl), x, Side::Left);
    offer(std::abs(d.prefix(k) - gr), x, Side::Right);
  }
  while (e < extra.size()) offer_point(extra[e++]);
  return best;
}

}  // namespace cltlab
