#pragma once

// Finitely supported distributions with certified atom ordering, exact
// lattice bookkeeping for sums of the form i + alpha_1 j_1 + ..., convolution
// and normalized n-fold sums.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cltlab/alpha.hpp"
#include "cltlab/errors.hpp"
#include "cltlab/numeric.hpp"

namespace cltlab {

inline constexpr std::size_t kDefaultAtomCap = 30'000'000;
inline const double kMassTolerance = std::ldexp(1.0, -45);

/// 17 significant digits, the format of every number the library prints.
inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

/// Atom i sits at scale * sum_k coords[i*dim + k] * basis[k].
struct LatticeTag {
  std::vector<AlphaSpec> basis;
  double scale = 1.0;
  std::vector<std::int32_t> coords;

  std::size_t dim() const { return basis.size(); }
  std::span<const std::int32_t> coords_of(std::size_t i) const {
    return {coords.data() + i * dim(), dim()};
  }
};

struct Moments {
  double mean = 0.0;
  double sigma2 = 0.0;  // central second moment
  double alpha3 = 0.0;  // central third moment
  double beta3 = 0.0;   // E|X - mean|^3
  double beta4 = 0.0;   // E(X - mean)^4
  double lyapunov3 = 0.0;  // beta3 / sigma^3 * n^{-1/2}
  double lyapunov4 = 0.0;  // beta4 / sigma^4 * n^{-1}
  std::uint64_t n = 1;
};

namespace detail {

/// sign(sum_k d_k alpha_k): exact when at most one term is irrational,
/// otherwise refined up to the precision cap.
inline int lattice_sign(const std::vector<AlphaSpec>& basis, std::span<const std::int64_t> d) {
  Rational exact_part = 0;
  std::vector<std::size_t> irrational;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    if (d[k] == 0) continue;
    if (const auto& v = basis[k].exact_value())
      exact_part += *v * Rational(d[k]);
    else
      irrational.push_back(k);
  }
  auto sgn = [](const Rational& r) { return r > 0 ? 1 : (r < 0 ? -1 : 0); };
  if (irrational.empty()) return sgn(exact_part);
  if (irrational.size() == 1) {
    const std::size_t k = irrational[0];
    // d a + r  vs 0  <=>  a vs -r/d
    const int s = basis[k].compare(Rational(-exact_part / Rational(d[k])));
    return d[k] > 0 ? s : -s;
  }
  for (int bits = 64; bits <= precision_cap(); bits *= 2) {
    Rational mid = exact_part, rad = 0;
    for (std::size_t k : irrational) {
      const Enclosure e = basis[k].approx(bits);
      mid += e.mid * Rational(d[k]);
      rad += e.radius * Rational(d[k] < 0 ? -d[k] : d[k]);
    }
    if (mp::abs(mid) > rad) return sgn(mid);
  }
  throw PrecisionExhausted("cannot order lattice atoms within the precision cap");
}

inline bool float_coincide(double x, double y) {
  const double eps = std::numeric_limits<double>::epsilon();
  return std::abs(x - y) <= 8.0 * eps * (std::abs(x) + std::abs(y));
}

// Lookup table from coordinate tuples to dense indices.
class TupleTable {
 public:
  explicit TupleTable(std::size_t dim) : dim_(dim), packed_(dim <= 3) {}

  void reserve(std::size_t n) {
    if (packed_) map_.reserve(n);
  }

  // Returns index of tuple, inserting if new.
  std::size_t insert(std::span<const std::int32_t> c) {
    if (packed_) {
      bool fits = true;
      std::uint64_t key = 0;
      for (std::size_t k = 0; k < dim_; ++k) {
        if (c[k] <= -(1 << 20) || c[k] >= (1 << 20)) fits = false;
        key = (key << 21) | static_cast<std::uint64_t>(c[k] + (1 << 20));
      }
      if (fits) {
        auto [it, fresh] = map_.emplace(key, coords_.size() / std::max<std::size_t>(dim_, 1));
        if (fresh) coords_.insert(coords_.end(), c.begin(), c.end());
        if (dim_ == 0 && fresh) ++count0_;
        return it->second;
      }
      migrate();
    }
    std::vector<std::int32_t> v(c.begin(), c.end());
    auto [it, fresh] = slow_.emplace(std::move(v), size());
    if (fresh) {
      coords_.insert(coords_.end(), c.begin(), c.end());
      if (dim_ == 0) ++count0_;
    }
    return it->second;
  }

  std::size_t size() const { return dim_ == 0 ? count0_ : coords_.size() / dim_; }
  std::vector<std::int32_t>& coords() { return coords_; }

 private:
  void migrate() {
    packed_ = false;
    for (std::size_t i = 0; i < size(); ++i)
      slow_.emplace(std::vector<std::int32_t>(coords_.begin() + i * dim_, coords_.begin() + (i + 1) * dim_), i);
    map_.clear();
  }

  std::size_t dim_;
  bool packed_;
  std::size_t count0_ = 0;
  std::unordered_map<std::uint64_t, std::size_t> map_;
  std::map<std::vector<std::int32_t>, std::size_t> slow_;
  std::vector<std::int32_t> coords_;
};

inline void check_weights(std::span<const double> w) {
  if (w.empty()) throw DomainError("distribution must have at least one atom");
  for (double x : w)
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("atom weights must be positive and finite");
  const double total = compensated_total(w);
  if (std::abs(total - 1.0) > kMassTolerance)
    throw WeightSumViolation("atom weights sum to " + std::to_string(total) + ", not 1");
}

}  // namespace detail

class DiscreteDist {
 public:
  /// Untagged atoms; sorted and merged when positions coincide within a few
  /// ulps. Zero weights are dropped (they arise only from underflow).
  static DiscreteDist from_atoms(std::vector<double> positions, std::vector<double> weights) {
    if (positions.size() != weights.size()) throw DomainError("positions and weights differ in length");
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      if (!std::isfinite(positions[i])) throw DomainError("atom positions must be finite");
      if (weights[i] != 0.0) order.push_back(i);
    }
    std::vector<double> w_nz;
    for (auto i : order) w_nz.push_back(weights[i]);
    detail::check_weights(w_nz);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
    DiscreteDist d;
    for (std::size_t i : order) {
      if (!d.pos_.empty() && detail::float_coincide(d.pos_.back(), positions[i])) {
        d.w_.back() += weights[i];
      } else {
        d.pos_.push_back(positions[i]);
        d.w_.push_back(weights[i]);
      }
    }
    d.finish();
    return d;
  }

  /// Lattice atoms with exact ordering: distinct tuples are ordered by the
  /// sign of the exact linear form, certified through the precision oracle.
  /// Tuples that turn out to share a position are merged and the tag is
  /// dropped.
  static DiscreteDist from_lattice(std::vector<AlphaSpec> basis, double scale,
                                   std::vector<std::int32_t> coords, std::vector<double> weights) {
    const std::size_t m = basis.size();
    if (m == 0) throw DomainError("lattice basis must be non-empty");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("lattice scale must be positive");
    if (coords.size() != weights.size() * m) throw DomainError("coordinate table has the wrong size");
    // Drop underflowed weights.
    {
      std::size_t out = 0;
      for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] == 0.0) continue;
        if (out != i) {
          weights[out] = weights[i];
          std::copy_n(coords.begin() + i * m, m, coords.begin() + out * m);
        }
        ++out;
      }
      weights.resize(out);
      coords.resize(out * m);
    }
    detail::check_weights(weights);
    const std::size_t N = weights.size();

    std::vector<double> value(N);  // unscaled position
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    // groups[g] = [begin, end) ranges of `order` whose members sit at one exact position
    std::vector<std::size_t> group_start;

    bool all_rational = true;
    for (const auto& b : basis) all_rational = all_rational && b.is_rational();

    std::optional<std::vector<__int128>> int_keys;
    double key_unit = 1.0;
    if (all_rational) {
      BigInt L = 1;
      for (const auto& b : basis) L = mp::lcm(L, BigInt(mp::denominator(*b.exact_value())));
      std::vector<std::int64_t> mult(m);
      bool fits = bit_length(L) < 62;
      for (std::size_t k = 0; k < m && fits; ++k) {
        const Rational& v = *basis[k].exact_value();
        const BigInt mk = mp::numerator(v) * (L / mp::denominator(v));
        if (bit_length(mk) >= 62) fits = false;
        else mult[k] = mk.convert_to<std::int64_t>();
      }
      if (fits) {
        int_keys.emplace(N);
        for (std::size_t i = 0; i < N; ++i) {
          __int128 key = 0;
          for (std::size_t k = 0; k < m; ++k) key += static_cast<__int128>(coords[i * m + k]) * mult[k];
          (*int_keys)[i] = key;
        }
        key_unit = 1.0 / L.convert_to<double>();
      }
    }

    if (int_keys) {
      const auto& K = *int_keys;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return K[a] != K[b] ? K[a] < K[b] : a < b;
      });
      for (std::size_t i = 0; i < N; ++i) value[i] = static_cast<double>(K[i]) * key_unit;
      for (std::size_t r = 0; r < N; ++r)
        if (r == 0 || K[order[r]] != K[order[r - 1]]) group_start.push_back(r);
    } else {
      std::vector<double> beta(m);
      for (std::size_t k = 0; k < m; ++k) beta[k] = basis[k].to_double();
      std::vector<double> tol(N);
      const double eps = std::numeric_limits<double>::epsilon();
      for (std::size_t i = 0; i < N; ++i) {
        double v = 0.0, mag = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          const double t = coords[i * m + k] * beta[k];
          v += t;
          mag += std::abs(t);
        }
        value[i] = v;
        tol[i] = 4.0 * double(m + 1) * eps * mag;
      }
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return value[a] != value[b] ? value[a] < value[b] : a < b;
      });
      // Clusters of float-indistinguishable values are ordered exactly.
      std::vector<std::int64_t> diff(m);
      auto exact_cmp = [&](std::size_t a, std::size_t b) {
        for (std::size_t k = 0; k < m; ++k)
          diff[k] = std::int64_t(coords[a * m + k]) - std::int64_t(coords[b * m + k]);
        return detail::lattice_sign(basis, diff);
      };
      std::size_t r = 0;
      while (r < N) {
        std::size_t e = r + 1;
        while (e < N && value[order[e]] - value[order[e - 1]] <= tol[order[e]] + tol[order[e - 1]]) ++e;
        if (e - r > 1) {
          std::stable_sort(order.begin() + r, order.begin() + e,
                           [&](std::size_t a, std::size_t b) { return exact_cmp(a, b) < 0; });
          for (std::size_t j = r; j < e; ++j)
            if (j == r || exact_cmp(order[j], order[j - 1]) != 0) group_start.push_back(j);
        } else {
          group_start.push_back(r);
        }
        r = e;
      }
    }

    DiscreteDist d;
    const bool merged = group_start.size() != N;
    group_start.push_back(N);
    const std::size_t G = group_start.size() - 1;
    d.pos_.resize(G);
    d.w_.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
      const std::size_t head = order[group_start[g]];
      d.pos_[g] = scale * value[head];
      CompensatedSum s;
      for (std::size_t j = group_start[g]; j < group_start[g + 1]; ++j) s.add(weights[order[j]]);
      d.w_[g] = s.value();
      // Keep positions strictly increasing even if two certified-distinct
      // atoms round to the same double.
      if (g > 0 && d.pos_[g] <= d.pos_[g - 1])
        d.pos_[g] = std::nextafter(d.pos_[g - 1], std::numeric_limits<double>::infinity());
    }
    if (!merged) {
      LatticeTag tag;
      tag.basis = std::move(basis);
      tag.scale = scale;
      tag.coords.resize(N * m);
      for (std::size_t r = 0; r < N; ++r)
        std::copy_n(coords.begin() + order[r] * m, m, tag.coords.begin() + r * m);
      d.lattice_ = std::move(tag);
    }
    d.finish();
    return d;
  }

  std::size_t size() const { return pos_.size(); }
  std::span<const double> positions() const { return pos_; }
  std::span<const double> weights() const { return w_; }
  double position(std::size_t i) const { return pos_[i]; }
  double weight(std::size_t i) const { return w_[i]; }
  const std::optional<LatticeTag>& lattice() const { return lattice_; }

  /// Sum of weights of atoms 0..k.
  double prefix(std::size_t k) const { return cum_[k]; }
  double total_mass() const { return cum_.back(); }

  /// P{X <= x}.
  double cdf(double x) const {
    const auto it = std::upper_bound(pos_.begin(), pos_.end(), x);
    const auto k = static_cast<std::size_t>(it - pos_.begin());
    return k == 0 ? 0.0 : cum_[k - 1];
  }

  /// P{X < x}.
  double cdf_left(double x) const {
    const auto it = std::lower_bound(pos_.begin(), pos_.end(), x);
    const auto k = static_cast<std::size_t>(it - pos_.begin());
    return k == 0 ? 0.0 : cum_[k - 1];
  }

  /// Same atoms and weights with positions multiplied by c > 0.
  DiscreteDist scaled(double c) const {
    if (!(c > 0.0)) throw DomainError("scale factor must be positive");
    DiscreteDist d = *this;
    for (double& x : d.pos_) x *= c;
    if (d.lattice_) d.lattice_->scale *= c;
    return d;
  }

 private:
  void finish() {
    cum_.resize(w_.size());
    CompensatedSum s;
    for (std::size_t i = 0; i < w_.size(); ++i) {
      s.add(w_[i]);
      cum_[i] = s.value();
    }
  }

  std::vector<double> pos_, w_, cum_;
  std::optional<LatticeTag> lattice_;
};

// ---------------------------------------------------------------------------
// Constructors.

/// Atoms -|scale| and |scale| with weight 1/2 each.
inline DiscreteDist bernoulli_pm(double scale) {
  if (scale == 0.0 || !std::isfinite(scale)) throw DegenerateScale("Bernoulli scale must be non-zero");
  return DiscreteDist::from_atoms({-std::abs(scale), std::abs(scale)}, {0.5, 0.5});
}

/// +-alpha with weight 1/2 each, lattice-tagged over the basis (alpha).
inline DiscreteDist bernoulli_pm(const AlphaSpec& alpha) {
  if (alpha.is_rational() && *alpha.exact_value() == 0)
    throw DegenerateScale("Bernoulli scale must be non-zero");
  return DiscreteDist::from_lattice({alpha}, 1.0, {-1, 1}, {0.5, 0.5});
}

inline DiscreteDist point_mass(double x = 0.0) { return DiscreteDist::from_atoms({x}, {1.0}); }

namespace detail {

struct BasisUnion {
  std::vector<AlphaSpec> basis;
  std::vector<std::vector<std::size_t>> index;  // per input: slot of each of its basis elements
};

inline BasisUnion unite(const std::vector<const LatticeTag*>& tags) {
  BasisUnion u;
  for (const auto* t : tags) {
    std::vector<std::size_t> idx;
    for (const auto& b : t->basis) {
      std::size_t slot = u.basis.size();
      for (std::size_t k = 0; k < u.basis.size(); ++k)
        if (u.basis[k].same_as(b)) slot = k;
      if (slot == u.basis.size()) u.basis.push_back(b);
      idx.push_back(slot);
    }
    u.index.push_back(std::move(idx));
  }
  return u;
}

inline bool same_scale(double a, double b) { return a == b; }

}  // namespace detail

/// Weighted union of components; weights must be positive and sum to 1.
inline DiscreteDist mixture(const std::vector<std::pair<double, DiscreteDist>>& components) {
  if (components.empty()) throw DomainError("mixture needs at least one component");
  std::vector<double> ws;
  for (const auto& [w, _] : components) {
    if (!(w > 0.0)) throw WeightSumViolation("mixture weights must be positive");
    ws.push_back(w);
  }
  if (std::abs(compensated_total(ws) - 1.0) > kMassTolerance)
    throw WeightSumViolation("mixture weights do not sum to 1");

  bool tagged = true;
  for (const auto& [_, d] : components)
    tagged = tagged && d.lattice() && detail::same_scale(d.lattice()->scale, components[0].second.lattice()->scale);
  if (tagged) {
    std::vector<const LatticeTag*> tags;
    for (const auto& [_, d] : components) tags.push_back(&*d.lattice());
    const auto u = detail::unite(tags);
    const std::size_t m = u.basis.size();
    detail::TupleTable table(m);
    std::vector<double> weights;
    std::vector<std::int32_t> c(m);
    for (std::size_t j = 0; j < components.size(); ++j) {
      const auto& [w, d] = components[j];
      for (std::size_t i = 0; i < d.size(); ++i) {
        std::fill(c.begin(), c.end(), 0);
        const auto src = d.lattice()->coords_of(i);
        for (std::size_t k = 0; k < src.size(); ++k) c[u.index[j][k]] += src[k];
        const std::size_t slot = table.insert(c);
        if (slot == weights.size()) weights.push_back(0.0);
        weights[slot] += w * d.weight(i);
      }
    }
    return DiscreteDist::from_lattice(u.basis, tags[0]->scale, std::move(table.coords()), std::move(weights));
  }
  std::vector<double> pos, wt;
  for (const auto& [w, d] : components)
    for (std::size_t i = 0; i < d.size(); ++i) {
      pos.push_back(d.position(i));
      wt.push_back(w * d.weight(i));
    }
  return DiscreteDist::from_atoms(std::move(pos), std::move(wt));
}

/// Distribution of X + Y for independent X ~ d1, Y ~ d2.
inline DiscreteDist convolve(const DiscreteDist& d1, const DiscreteDist& d2,
                             std::size_t cap = kDefaultAtomCap) {
  if (d1.lattice() && d2.lattice() && detail::same_scale(d1.lattice()->scale, d2.lattice()->scale)) {
    const auto u = detail::unite({&*d1.lattice(), &*d2.lattice()});
    const std::size_t m = u.basis.size();
    // Coordinates of each input in the united basis.
    auto lift = [&](const DiscreteDist& d, const std::vector<std::size_t>& idx) {
      std::vector<std::int32_t> out(d.size() * m, 0);
      for (std::size_t i = 0; i < d.size(); ++i) {
        const auto src = d.lattice()->coords_of(i);
        for (std::size_t k = 0; k < src.size(); ++k) out[i * m + idx[k]] += src[k];
      }
      return out;
    };
    const auto c1 = lift(d1, u.index[0]);
    const auto c2 = lift(d2, u.index[1]);
    detail::TupleTable table(m);
    table.reserve(std::min(cap, d1.size() * d2.size()));
    std::vector<double> weights;
    std::vector<std::int32_t> c(m);
    for (std::size_t i = 0; i < d1.size(); ++i)
      for (std::size_t j = 0; j < d2.size(); ++j) {
        for (std::size_t k = 0; k < m; ++k) {
          const std::int64_t s = std::int64_t(c1[i * m + k]) + c2[j * m + k];
          if (s > std::numeric_limits<std::int32_t>::max() || s < std::numeric_limits<std::int32_t>::min())
            throw SupportOverflow("lattice coordinate exceeds 32 bits");
          c[k] = static_cast<std::int32_t>(s);
        }
        const std::size_t slot = table.insert(c);
        if (slot == weights.size()) {
          if (weights.size() >= cap)
            throw SupportOverflow("convolution support exceeds the cap of " + std::to_string(cap) + " atoms");
          weights.push_back(0.0);
        }
        weights[slot] += d1.weight(i) * d2.weight(j);
      }
    return DiscreteDist::from_lattice(u.basis, d1.lattice()->scale, std::move(table.coords()), std::move(weights));
  }
  if (d1.size() > cap / d2.size() + 1 || d1.size() * d2.size() > cap)
    throw SupportOverflow("convolution support exceeds the cap of " + std::to_string(cap) + " atoms");
  std::vector<double> pos, wt;
  pos.reserve(d1.size() * d2.size());
  wt.reserve(d1.size() * d2.size());
  for (std::size_t i = 0; i < d1.size(); ++i)
    for (std::size_t j = 0; j < d2.size(); ++j) {
      pos.push_back(d1.position(i) + d2.position(j));
      wt.push_back(d1.weight(i) * d2.weight(j));
    }
  return DiscreteDist::from_atoms(std::move(pos), std::move(wt));
}

inline Moments moments(const DiscreteDist& d, std::uint64_t n = 1) {
  Moments out;
  out.n = n;
  CompensatedSum m1;
  for (std::size_t i = 0; i < d.size(); ++i) m1.add(d.weight(i) * d.position(i));
  out.mean = m1.value();
  CompensatedSum s2, s3, a3, s4;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double x = d.position(i) - out.mean, w = d.weight(i);
    const double x2 = x * x;
    s2.add(w * x2);
    s3.add(w * x2 * x);
    a3.add(w * x2 * std::abs(x));
    s4.add(w * x2 * x2);
  }
  out.sigma2 = s2.value();
  out.alpha3 = s3.value();
  out.beta3 = a3.value();
  out.beta4 = s4.value();
  if (out.sigma2 > 0.0) {
    const double s = std::sqrt(out.sigma2);
    out.lyapunov3 = out.beta3 / (s * s * s) / std::sqrt(double(n));
    out.lyapunov4 = out.beta4 / (out.sigma2 * out.sigma2) / double(n);
  }
  return out;
}

namespace detail {

// Lattice-tagged product of independent symmetric +-1 factors, one per basis
// element: 2^m atoms at all sign vectors with weight 2^-m.
inline bool is_sign_product(const DiscreteDist& d) {
  if (!d.lattice()) return false;
  const std::size_t m = d.lattice()->dim();
  if (m > 20 || d.size() != (std::size_t(1) << m)) return false;
  const double w = std::ldexp(1.0, -static_cast<int>(m));
  std::vector<bool> seen(d.size(), false);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::abs(d.weight(i) - w) > 1e-15) return false;
    std::size_t mask = 0;
    const auto c = d.lattice()->coords_of(i);
    for (std::size_t k = 0; k < m; ++k) {
      if (c[k] != 1 && c[k] != -1) return false;
      if (c[k] == 1) mask |= std::size_t(1) << k;
    }
    if (seen[mask]) return false;
    seen[mask] = true;
  }
  return true;
}

inline DiscreteDist power_by_squaring(const DiscreteDist& base, std::uint64_t n, std::size_t cap) {
  std::optional<DiscreteDist> acc;
  DiscreteDist p = base;
  while (n > 0) {
    if (n & 1) acc = acc ? convolve(*acc, p, cap) : p;
    n >>= 1;
    if (n > 0) p = convolve(p, p, cap);
  }
  return *acc;
}

}  // namespace detail

/// Distribution of Z_n = (X_1 + ... + X_n) / (sigma sqrt n) for a mean-zero base.
inline DiscreteDist zn_dist(const DiscreteDist& base, std::uint64_t n, std::size_t cap = kDefaultAtomCap) {
  if (n < 1) throw DomainError("zn_dist: n must be at least 1");
  const Moments mo = moments(base);
  if (!(mo.sigma2 > 0.0)) throw DegenerateScale("zn_dist: base distribution is degenerate");
  const double spread = std::max(std::abs(base.position(0)), std::abs(base.position(base.size() - 1)));
  if (std::abs(mo.mean) > 1e-12 * spread) throw DomainError("zn_dist: base distribution must have mean zero");
  const double norm = std::sqrt(mo.sigma2 * double(n));

  if (detail::is_sign_product(base)) {
    const auto& tag = *base.lattice();
    const std::size_t m = tag.dim();
    const double count = std::pow(double(n + 1), double(m));
    if (count > double(cap))
      throw SupportOverflow("Z_n support of " + format_double(count) +
                            " atoms exceeds the cap of " + std::to_string(cap));
    if (n > static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max()))
      throw SupportOverflow("n too large for 32-bit lattice coordinates");
    const auto pmf = binomial_half_pmf(static_cast<int>(n));
    // Sign vectors in the base map basis element k to its coordinate slot k.
    const std::size_t N = static_cast<std::size_t>(count);
    std::vector<std::int32_t> coords(N * m);
    std::vector<double> weights(N);
    std::vector<std::size_t> digit(m, 0);
    for (std::size_t i = 0; i < N; ++i) {
      double w = 1.0;
      for (std::size_t k = 0; k < m; ++k) {
        coords[i * m + k] = static_cast<std::int32_t>(2 * digit[k]) - static_cast<std::int32_t>(n);
        w *= pmf[digit[k]];
      }
      weights[i] = w;
      for (std::size_t k = 0; k < m; ++k) {
        if (++digit[k] <= n) break;
        digit[k] = 0;
      }
    }
    return DiscreteDist::from_lattice(tag.basis, tag.scale / norm, std::move(coords), std::move(weights));
  }
  if (base.lattice()) {
    // Repeated convolution with the (small) base is cheaper than squaring
    // when the lattice keeps the support polynomial in n.
    DiscreteDist acc = base;
    for (std::uint64_t k = 1; k < n; ++k) acc = convolve(acc, base, cap);
    return acc.scaled(1.0 / norm);
  }
  return detail::power_by_squaring(base, n, cap).scaled(1.0 / norm);
}

// ---------------------------------------------------------------------------
// CSV serialization: header `position,weight[,c0,c1,...]`.

inline void write_csv(std::ostream& os, const DiscreteDist& d) {
  os << "position,weight";
  const auto& tag = d.lattice();
  if (tag)
    for (std::size_t k = 0; k < tag->dim(); ++k) os << ",c" << k;
  os << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    os << format_double(d.position(i)) << ',' << format_double(d.weight(i));
    if (tag)
      for (auto c : tag->coords_of(i)) os << ',' << c;
    os << '\n';
  }
}

/// Reads positions and weights; '#' lines are comments. Coordinate columns
/// are ignored because the basis is not part of the file.
inline DiscreteDist read_csv(std::istream& is) {
  std::string line;
  bool header = false;
  std::vector<double> pos, wt;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("position,weight", 0) != 0) throw ParseError("expected header 'position,weight'");
      header = true;
      continue;
    }
    std::istringstream ls(line);
    std::string a, b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) throw ParseError("malformed row '" + line + "'");
    try {
      pos.push_back(std::stod(a));
      wt.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw ParseError("malformed number in row '" + line + "'");
    }
  }
  if (!header) throw ParseError("missing CSV header");
  return DiscreteDist::from_atoms(std::move(pos), std::move(wt));
}

}  // namespace cltlab
