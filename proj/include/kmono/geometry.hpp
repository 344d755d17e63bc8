#pragma once

// Likelihood geometry of the mixture: the curve Gamma(y) of kernel values at
// the order statistics, the fitted vector b, the support-plane coefficients
// v_i = k / (n b_i), the certificate spline
//
//   p(y) = y^k - sum_i v_i (y - X_(i))_+^{k-1},
//
// the directional derivative D(y) = (1/n) sum_i Gamma(y)_i / b_i - 1
// (= -p(y) / y^k), and the optimality certificate assembled from them.

#include "kmono/kernel.hpp"
#include "kmono/spline.hpp"
#include "kmono/total_positivity.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace kmono {

//! Quad-precision float used where the certificate needs headroom beyond
//! double (p(y) is a difference of terms of size y^k).
using extended = boost::multiprecision::cpp_bin_float_quad;

template <typename Real = double>
std::vector<Real> gamma_curve(const Sample& sample, int k, Real y) {
  if (!(y > 0)) throw invalid_argument("gamma_curve: y must be positive");
  std::vector<Real> out;
  out.reserve(sample.size());
  for (double x : sample.values()) out.push_back(kernel_eval<Real>(k, y, Real(x)));
  return out;
}

//! (f(X_(i)))_i
template <typename Real = double>
std::vector<Real> fitted_vector(const KMonotoneModel& model, const Sample& sample) {
  std::vector<Real> out;
  out.reserve(sample.size());
  for (double x : sample.values()) out.push_back(density_eval<Real>(model, Real(x)));
  return out;
}

//! sum_i log f(X_(i)); -inf when some fitted value is zero.
inline double log_likelihood(const KMonotoneModel& model, const Sample& sample) {
  long double total = 0;
  for (long double f : fitted_vector<long double>(model, sample)) {
    if (!(f > 0)) return -std::numeric_limits<double>::infinity();
    total += std::log(f);
  }
  return static_cast<double>(total);
}

template <typename Real>
std::vector<Real> support_plane_coefficients(std::span<const Real> b, int k) {
  std::vector<Real> v;
  v.reserve(b.size());
  const Real n(static_cast<double>(b.size()));
  for (const Real& bi : b) {
    if (!(bi > 0)) throw invalid_argument("fitted values must be positive");
    v.push_back(Real(k) / (n * bi));
  }
  return v;
}

//! p as an exact piecewise polynomial with knots {0, X_(1), ..., X_(n)}
//! (tied observations share a knot), degree k per piece, C^{k-2}.
template <typename T = double>
BasicPiecewisePolynomial<T> p_function(std::span<const T> v, const Sample& sample, int k) {
  check_order(k);
  if (v.size() != sample.size()) throw invalid_argument("p_function: need one coefficient per observation");
  for (const T& vi : v)
    if (!(vi > 0)) throw invalid_argument("p_function: coefficients must be positive");

  std::vector<double> knots{0.0};
  std::vector<T> knot_weight{T(0)};
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (sample[i] == knots.back()) {
      knot_weight.back() += v[i];
    } else {
      knots.push_back(sample[i]);
      knot_weight.push_back(v[i]);
    }
  }

  std::vector<Polynomial<T>> pieces;
  pieces.reserve(knots.size());
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const T origin(knots[i]);
    // (origin + tau)^k
    Polynomial<T> piece = Polynomial<T>::power_of_linear(-origin, k);
    for (std::size_t l = 1; l <= i; ++l) {
      // -v_l (origin - X_l + tau)^{k-1}
      piece -= Polynomial<T>::power_of_linear(T(knots[l]) - origin, k - 1) * knot_weight[l];
    }
    pieces.push_back(std::move(piece));
  }
  return BasicPiecewisePolynomial<T>(std::move(knots), std::move(pieces), k - 2);
}

//! Direct evaluation of p(y) (no piecewise expansion).
template <typename Real>
Real p_value(std::span<const Real> v, const Sample& sample, int k, Real y) {
  Real total = ipow(y, k);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const Real d = y - Real(sample[i]);
    if (d > 0) total -= v[i] * ipow(d, k - 1);
  }
  return total;
}

//! D(y) = (1/n) sum_i Gamma(y)_i / b_i - 1.
template <typename Real = double>
Real directional_derivative(std::span<const Real> b, const Sample& sample, int k, Real y) {
  if (!(y > 0)) throw invalid_argument("directional_derivative: y must be positive");
  if (b.size() != sample.size()) throw invalid_argument("directional_derivative: need one fitted value per observation");
  Real total(0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (!(b[i] > 0)) throw invalid_argument("directional_derivative: fitted values must be positive");
    const Real x(sample[i]);
    if (!(x < y)) continue;
    total += kernel_eval<Real>(k, y, x) / b[i];
  }
  return total / Real(static_cast<double>(sample.size())) - Real(1);
}

namespace detail {

//! Sorted points of [lo, hi] (hi may be +inf) where the local polynomial
//! `poly` (coordinate y - origin) has approximate real roots.
template <typename T>
void append_piece_roots(const Polynomial<T>& poly, T origin, T lo, T hi, std::vector<T>& out) {
  if (poly.degree() < 1) return;
  T local_hi = hi - origin;
  if (!std::isfinite(static_cast<double>(hi))) local_hi = cauchy_root_bound(poly);
  for (const T& r : approximate_real_roots(poly, lo - origin, local_hi)) out.push_back(origin + r);
}

//! r(y) = y p'(y) - k p(y) on one piece; D'(y) = -r(y) / y^{k+1}.
template <typename T>
Polynomial<T> stationarity_polynomial(const Polynomial<T>& piece, T origin, int k) {
  const Polynomial<T> y_local({origin, T(1)});
  return y_local * piece.derivative() - piece * T(k);
}

} // namespace detail

//! Every local extremum candidate of p and of D on [0, inf): knots, roots of
//! p' and of y p' - k p on every piece (the tail piece is searched up to its
//! Cauchy root bound), plus `grid_per_piece` uniform probes per finite piece
//! and over the tail window (X_(n), tail_window].
template <typename T = long double>
std::vector<T> certificate_probe_points(const BasicPiecewisePolynomial<T>& p, int k, double tail_window,
                                        int grid_per_piece = 8) {
  std::vector<T> pts;
  const auto knots = p.knots();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T origin(knots[i]);
    const bool last = i + 1 == p.size();
    const T hi = last ? T(std::numeric_limits<double>::infinity()) : T(knots[i + 1]);
    pts.push_back(origin);
    detail::append_piece_roots(p.piece(i).derivative(), origin, origin, hi, pts);
    detail::append_piece_roots(detail::stationarity_polynomial(p.piece(i), origin, k), origin, origin, hi, pts);
    const T grid_hi = last ? T(std::max(tail_window, knots[i] * 1.0)) : hi;
    for (int g = 1; g <= grid_per_piece; ++g) pts.push_back(origin + (grid_hi - origin) * T(g) / T(grid_per_piece + 1));
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

struct LocationBound {
  std::size_t atom_index = 0;
  double location = 0.0;
  double order_statistic = 0.0; // +inf when the atom index exceeds n
  bool ok = false;
};

//! Conditions satisfied by the unique MLE, each with its evidence.
struct ConditionReport {
  std::size_t support_size = 0;
  std::size_t sample_size = 0;
  bool support_size_ok = false; // m <= n

  bool location_bounds_ok = false; // Y_j > X_(j) for all j
  std::vector<LocationBound> location_bounds;

  bool tail_ok = false; // Y_m > X_(n)
  double max_location = 0.0;
  double max_observation = 0.0;

  //! 0-based indices i_1 < ... < i_m with X_(i_j) < Y_j < X_(i_{j+k});
  //! nullopt when no such subset exists.
  std::optional<std::vector<std::size_t>> interlacing;

  //! det((Y_j - X_(i_l))_+^{k-1}) at the interlacing witness.
  bool determinant_ok = false;
  int determinant_sign = 0;
  std::optional<double> determinant_value;
  std::optional<double> determinant_log_abs;

  bool all_ok() const {
    return support_size_ok && location_bounds_ok && tail_ok && interlacing.has_value() && determinant_ok;
  }
};

inline ConditionReport condition_report(const MixingMeasure& measure, const Sample& sample, int k) {
  check_order(k);
  std::vector<double> locations;
  for (const Atom& a : measure.atoms())
    if (a.weight > 0) locations.push_back(a.location);

  ConditionReport r;
  r.support_size = locations.size();
  r.sample_size = sample.size();
  r.support_size_ok = r.support_size <= r.sample_size;

  r.location_bounds_ok = !locations.empty();
  for (std::size_t j = 0; j < locations.size(); ++j) {
    LocationBound lb;
    lb.atom_index = j;
    lb.location = locations[j];
    lb.order_statistic = j < sample.size() ? sample[j] : std::numeric_limits<double>::infinity();
    lb.ok = lb.location > lb.order_statistic;
    r.location_bounds_ok = r.location_bounds_ok && lb.ok;
    r.location_bounds.push_back(lb);
  }

  r.max_location = locations.empty() ? 0.0 : locations.back();
  r.max_observation = sample.max();
  r.tail_ok = r.max_location > r.max_observation;

  r.interlacing = interlacing_witness(locations, sample, k);
  if (r.interlacing) {
    std::vector<double> points;
    for (std::size_t i : *r.interlacing) points.push_back(sample[i]);
    const auto sl = tp_determinant_sign_log(locations, points, k - 1);
    r.determinant_sign = sl.sign;
    r.determinant_log_abs = sl.log_abs;
    r.determinant_value = sl.sign == 0 ? 0.0 : sl.sign * std::exp(sl.log_abs);
    r.determinant_ok = sl.sign > 0;
  }
  return r;
}

struct Certificate {
  std::vector<double> b;             // fitted values at the order statistics
  std::vector<double> v;             // k / (n b_i)
  double p_min = 0.0;                // minimum of p over [0, inf)
  double p_argmin = 0.0;
  std::vector<double> atom_p_values; // p at every atom
  double gradient_sup = 0.0;         // sup_y D(y)
  double gradient_argmax = 0.0;
  double scale = 1.0;                // X_(n)^k
  double tolerance = 0.0;
  bool optimal = false;
  std::optional<ConditionReport> report; // absent for tied samples
};

//! Certificate of optimality for a candidate model on the sample. The
//! candidate is optimal iff p >= -tol * X_(n)^k on [0, inf) and
//! p(Y_j) <= tol * X_(n)^k at every atom. p and D are evaluated in quad
//! precision at all critical points of both functions.
inline Certificate certify(const KMonotoneModel& model, const Sample& sample, double tol) {
  if (!(tol > 0)) throw invalid_argument("certify: tolerance must be positive");
  const int k = model.k();
  const std::vector<extended> b = fitted_vector<extended>(model, sample);
  for (const extended& bi : b)
    if (!(bi > 0))
      throw not_certifiable_error("candidate gives zero density at an observation (log-likelihood is -inf)");
  const std::vector<extended> v = support_plane_coefficients<extended>(b, k);

  Certificate cert;
  cert.tolerance = tol;
  cert.scale = ipow(sample.max(), k);
  for (const extended& x : b) cert.b.push_back(static_cast<double>(x));
  for (const extended& x : v) cert.v.push_back(static_cast<double>(x));

  // One exact expansion in quad precision; a long double copy drives the
  // root finding, values always come from the quad pieces.
  const auto p_ext = p_function<extended>(v, sample, k);
  std::vector<Polynomial<long double>> ld_pieces;
  for (const auto& piece : p_ext.pieces()) {
    std::vector<long double> c;
    for (const extended& x : piece.coefficients()) c.push_back(static_cast<long double>(x));
    ld_pieces.emplace_back(std::move(c));
  }
  const BasicPiecewisePolynomial<long double> p_spline(std::vector<double>(p_ext.knots().begin(), p_ext.knots().end()),
                                                      std::move(ld_pieces), p_ext.smoothness());
  const double window = 4.0 * std::max(model.mixing().max_location(), sample.max());
  std::vector<long double> probes = certificate_probe_points(p_spline, k, window);
  for (const Atom& a : model.mixing().atoms()) probes.push_back(a.location);

  extended p_min = std::numeric_limits<double>::infinity();
  extended d_sup = -std::numeric_limits<double>::infinity();
  for (long double y_ld : probes) {
    if (!(y_ld >= 0)) continue;
    const extended y(y_ld);
    const extended p = p_ext(y);
    if (p < p_min) {
      p_min = p;
      cert.p_argmin = static_cast<double>(y_ld);
    }
    if (y > 0) {
      // D(y) = -p(y) / y^k
      const extended d = -p / ipow(y, k);
      if (d > d_sup) {
        d_sup = d;
        cert.gradient_argmax = static_cast<double>(y_ld);
      }
    }
  }
  cert.p_min = static_cast<double>(p_min);
  cert.gradient_sup = static_cast<double>(d_sup);

  double atom_p_max = -std::numeric_limits<double>::infinity();
  for (const Atom& a : model.mixing().atoms()) {
    const double pa = static_cast<double>(p_value<extended>(v, sample, k, extended(a.location)));
    cert.atom_p_values.push_back(pa);
    if (a.weight > 0) atom_p_max = std::max(atom_p_max, pa);
  }

  const double bound = tol * cert.scale;
  cert.optimal = cert.p_min >= -bound && atom_p_max <= bound;
  if (sample.distinct()) cert.report = condition_report(model.mixing(), sample, k);
  return cert;
}

} // namespace kmono
