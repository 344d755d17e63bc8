#pragma once

// Uniqueness machinery: the difference of two mixture densities as an exact
// spline, the truncated-power determinant det((Y_i - t_j)_+^e), and the
// search for order statistics interlacing with the atoms.

#include "kmono/kernel.hpp"
#include "kmono/spline.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace kmono {

namespace detail {

inline double binomial(int n, int r) {
  double out = 1.0;
  for (int i = 1; i <= r; ++i) out = out * (n - r + i) / i;
  return out;
}

//! Local polynomial (in tau = x - origin) of coef * (loc - x)^power for x < loc.
inline Polynomial<double> reflected_power(double coef, double loc, double origin, int power) {
  // (loc - origin - tau)^power = sum_d C(power,d) (loc-origin)^{power-d} (-tau)^d
  std::vector<double> c(power + 1);
  const double h = loc - origin;
  for (int d = 0; d <= power; ++d) {
    const double sign = (d % 2 == 0) ? 1.0 : -1.0;
    c[d] = coef * binomial(power, d) * std::pow(h, power - d) * sign;
  }
  return Polynomial<double>(std::move(c));
}

} // namespace detail

//! q(x) = f1(x) - f2(x) as a piecewise polynomial on [0, inf) with knots at
//! 0 and every atom location of either model; C^{k-2}.
inline PiecewisePolynomial difference_spline(const KMonotoneModel& m1, const KMonotoneModel& m2) {
  if (m1.k() != m2.k()) throw invalid_argument("difference_spline: models must share k");
  const int k = m1.k();

  std::map<double, double> signed_weights;
  for (const Atom& a : m1.mixing().atoms()) signed_weights[a.location] += a.weight;
  for (const Atom& a : m2.mixing().atoms()) signed_weights[a.location] -= a.weight;

  std::vector<double> knots{0.0};
  for (const auto& [loc, w] : signed_weights) knots.push_back(loc);

  std::vector<Polynomial<double>> pieces;
  pieces.reserve(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) {
    Polynomial<double> piece;
    for (const auto& [loc, w] : signed_weights) {
      if (loc <= knots[i] || w == 0.0) continue;
      // s_j * k / Y^k, formed without Y^k
      const double coef = w * (k / loc) * ipow(1.0 / loc, k - 1);
      piece += detail::reflected_power(coef, loc, knots[i], k - 1);
    }
    pieces.push_back(std::move(piece));
  }
  return PiecewisePolynomial(std::move(knots), std::move(pieces), k - 2);
}

struct SignedLogDeterminant {
  int sign = 0;          // -1, 0, +1
  double log_abs = 0.0;  // log|det| (meaningless when sign == 0)
};

namespace detail {

using big_int = boost::multiprecision::cpp_int;

inline double log_abs(const big_int& x) {
  big_int a = abs(x);
  const std::size_t bits = boost::multiprecision::msb(a);
  if (bits <= 60) return std::log(a.convert_to<double>());
  a >>= (bits - 60);
  return std::log(a.convert_to<double>()) + static_cast<double>(bits - 60) * std::log(2.0);
}

} // namespace detail

//! det((Y_i - t_j)_+^exponent) as exact sign and log-magnitude. Every input
//! double is an integer multiple of a common power of two, so the matrix is
//! scaled to integers and the determinant taken by fraction-free (Bareiss)
//! elimination. Near-coincident points make the matrix extremely
//! ill-conditioned, which rules out floating-point LU for the sign.
inline SignedLogDeterminant tp_determinant_sign_log(std::span<const double> locations, std::span<const double> points,
                                                    int exponent) {
  if (locations.size() != points.size())
    throw invalid_argument("tp_determinant: locations and points must have equal length");
  if (exponent < 1) throw invalid_argument("tp_determinant: exponent must be >= 1");
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (!std::isfinite(locations[i]) || !std::isfinite(points[i]))
      throw invalid_argument("tp_determinant: inputs must be finite");
    if (i > 0 && (!(locations[i] > locations[i - 1]) || !(points[i] > points[i - 1])))
      throw invalid_argument("tp_determinant: locations and points must be strictly ascending");
  }
  const std::size_t m = locations.size();
  if (m == 0) return {1, 0.0};

  // Smallest binary exponent among the inputs: x = mantissa * 2^e.
  auto lowest_exponent = [](double x) {
    if (x == 0) return std::numeric_limits<int>::max();
    int e = 0;
    double frac = std::frexp(x, &e); // x = frac * 2^e, 0.5 <= |frac| < 1
    int bits = 0;
    while (frac != std::floor(frac)) {
      frac *= 2;
      ++bits;
    }
    return e - bits;
  };
  int shift = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < m; ++i) shift = std::min({shift, lowest_exponent(locations[i]), lowest_exponent(points[i])});
  if (shift == std::numeric_limits<int>::max()) shift = 0;
  auto to_int = [&](double x) {
    int e = 0;
    const double frac = std::frexp(x, &e);
    // x = (frac * 2^53) * 2^(e - 53); the mantissa is an exact integer.
    detail::big_int mant(static_cast<long long>(std::ldexp(frac, 53)));
    const int rel = e - 53 - shift;
    if (rel >= 0) return detail::big_int(mant << rel);
    return detail::big_int(mant >> -rel); // exact: shift is the smallest exponent
  };

  std::vector<detail::big_int> a(m * m);
  std::vector<detail::big_int> yi(m), tj(m);
  for (std::size_t i = 0; i < m; ++i) {
    yi[i] = to_int(locations[i]);
    tj[i] = to_int(points[i]);
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const detail::big_int diff = yi[i] - tj[j];
      a[i * m + j] = diff > 0 ? detail::big_int(pow(diff, static_cast<unsigned>(exponent))) : detail::big_int(0);
    }

  int sign = 1;
  detail::big_int prev(1);
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t pivot = c;
    while (pivot < m && a[pivot * m + c] == 0) ++pivot;
    if (pivot == m) return {0, -std::numeric_limits<double>::infinity()};
    if (pivot != c) {
      for (std::size_t j = 0; j < m; ++j) std::swap(a[c * m + j], a[pivot * m + j]);
      sign = -sign;
    }
    for (std::size_t r = c + 1; r < m; ++r) {
      for (std::size_t j = c + 1; j < m; ++j)
        a[r * m + j] = (a[c * m + c] * a[r * m + j] - a[r * m + c] * a[c * m + j]) / prev;
      a[r * m + c] = 0;
    }
    prev = a[c * m + c];
  }
  const detail::big_int& det = a[m * m - 1];
  if (det < 0) sign = -sign;
  const double log_scale = static_cast<double>(shift) * exponent * static_cast<double>(m) * std::log(2.0);
  return {sign, detail::log_abs(det) + log_scale};
}

//! det((Y_i - t_j)_+^exponent). May overflow to +-inf for large matrices;
//! use tp_determinant_sign_log for the sign.
inline double tp_determinant(std::span<const double> locations, std::span<const double> points, int exponent) {
  const auto sl = tp_determinant_sign_log(locations, points, exponent);
  if (sl.sign == 0) return 0.0;
  return sl.sign * std::exp(sl.log_abs);
}

//! Indices i_1 < ... < i_m (0-based) of order statistics with
//! X_(i_j) < Y_j < X_(i_{j+k}), where X_(i_l) = +inf for l > m.
//! Each i_l must lie in [#{X <= Y_{l-k}}, #{X < Y_l} - 1]; both bounds are
//! nondecreasing in l, so taking the smallest admissible index at every
//! step finds a witness whenever one exists.
inline std::optional<std::vector<std::size_t>> interlacing_witness(std::span<const double> atom_locations,
                                                                   const Sample& sample, int k) {
  check_order(k);
  const auto x = sample.values();
  const std::size_t m = atom_locations.size();
  std::vector<std::size_t> witness;
  witness.reserve(m);
  for (std::size_t l = 0; l < m; ++l) {
    // largest admissible index: X_(i) < Y_l
    const auto below = static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), atom_locations[l]) - x.begin());
    if (below == 0) return std::nullopt;
    const std::size_t upper = below - 1;
    std::size_t lower = witness.empty() ? 0 : witness.back() + 1;
    if (l >= static_cast<std::size_t>(k)) {
      // X_(i_l) > Y_{l-k}
      const auto not_above =
          static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), atom_locations[l - k]) - x.begin());
      lower = std::max(lower, not_above);
    }
    if (lower > upper) return std::nullopt;
    witness.push_back(lower);
  }
  return witness;
}

} // namespace kmono
