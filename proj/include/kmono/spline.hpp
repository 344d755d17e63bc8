#pragma once

// Piecewise polynomials with a global smoothness class, and zero counting
// with multiplicities.
//
// Multiplicity of a zero x of a C^s function is the order n of the first
// nonvanishing derivative, capped at s+1. count_zeros reports both this
// capped value and the local (per-side) vanishing order of the pieces.

#include "kmono/exact_roots.hpp"
#include "kmono/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace kmono {

//! Knots t_0 < ... < t_{m-1}; piece i lives on [t_i, t_{i+1}) (t_m = +inf)
//! and is stored in the local coordinate y - t_i. smoothness s means the
//! function is C^s on [t_0, inf); s = -1 allows jumps at knots.
template <typename T = double>
class BasicPiecewisePolynomial {
public:
  static constexpr int infinitely_smooth = std::numeric_limits<int>::max() / 4;

  BasicPiecewisePolynomial() = default;

  BasicPiecewisePolynomial(std::vector<double> knots, std::vector<Polynomial<T>> pieces, int smoothness)
      : knots_(std::move(knots)), pieces_(std::move(pieces)), smoothness_(smoothness) {
    if (knots_.empty()) throw invalid_argument("piecewise polynomial needs at least one knot");
    if (knots_.size() != pieces_.size()) throw invalid_argument("piece count must equal knot count");
    if (smoothness_ < -1) throw invalid_argument("smoothness must be >= -1");
    for (std::size_t i = 1; i < knots_.size(); ++i)
      if (!(knots_[i] > knots_[i - 1])) throw invalid_argument("knots must be strictly increasing");
  }

  std::span<const double> knots() const { return knots_; }
  std::span<const Polynomial<T>> pieces() const { return pieces_; }
  const Polynomial<T>& piece(std::size_t i) const { return pieces_[i]; }
  std::size_t size() const { return pieces_.size(); }
  int smoothness() const { return smoothness_; }
  double domain_begin() const { return knots_.front(); }
  //! Right end of piece i (+inf for the last).
  double piece_end(std::size_t i) const {
    return i + 1 < knots_.size() ? knots_[i + 1] : std::numeric_limits<double>::infinity();
  }

  //! Index of the piece containing y (right-continuous convention).
  std::size_t piece_index(double y) const {
    if (y < knots_.front()) throw invalid_argument("evaluation point below the spline domain");
    auto it = std::upper_bound(knots_.begin(), knots_.end(), y);
    return static_cast<std::size_t>(it - knots_.begin()) - 1;
  }

  template <typename U = T>
  U operator()(U y) const {
    const std::size_t i = piece_index(static_cast<double>(y));
    return pieces_[i](U(y - U(knots_[i])));
  }

  T derivative_at(double y, int order) const {
    const std::size_t i = piece_index(y);
    return pieces_[i].derivative(order)(T(y - knots_[i]));
  }

  //! True when adjacent pieces agree in value and derivatives up to the
  //! smoothness order at every interior knot, relative to the local scale.
  bool check_smoothness(double rel_tol = 1e-10) const {
    using std::abs;
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
      const T h = T(knots_[i] - knots_[i - 1]);
      const int top = std::min(smoothness_, std::max(pieces_[i - 1].degree(), pieces_[i].degree()));
      for (int d = 0; d <= top; ++d) {
        const Polynomial<T> dl = pieces_[i - 1].derivative(d);
        const T left = dl(h);
        const T right = pieces_[i].derivative(d)(T(0));
        T scale(0);
        T hp(1);
        for (const auto& c : dl.coefficients()) {
          scale += abs(c) * hp;
          hp *= h;
        }
        scale = std::max({scale, T(abs(right)), T(1e-300)});
        if (abs(left - right) > T(rel_tol) * scale) return false;
      }
    }
    return true;
  }

private:
  std::vector<double> knots_;
  std::vector<Polynomial<T>> pieces_;
  int smoothness_ = infinitely_smooth;
};

using PiecewisePolynomial = BasicPiecewisePolynomial<double>;

//! order-th derivative; smoothness drops by order (never below -1).
template <typename T>
BasicPiecewisePolynomial<T> differentiate(const BasicPiecewisePolynomial<T>& f, int order) {
  const int s = f.smoothness();
  if (order < 0) throw invalid_argument("derivative order must be nonnegative");
  if (s != BasicPiecewisePolynomial<T>::infinitely_smooth && order > s + 1)
    throw invalid_argument("derivative order " + std::to_string(order) + " exceeds smoothness + 1 = " +
                           std::to_string(s + 1));
  std::vector<Polynomial<T>> pieces;
  pieces.reserve(f.size());
  for (const auto& p : f.pieces()) pieces.push_back(p.derivative(order));
  const int s_new = s == BasicPiecewisePolynomial<T>::infinitely_smooth ? s : std::max(-1, s - order);
  return BasicPiecewisePolynomial<T>(std::vector<double>(f.knots().begin(), f.knots().end()), std::move(pieces),
                                     s_new);
}

struct Zero {
  double location = 0.0;
  int multiplicity = 0;   // capped by the smoothness class
  int local_order = 0;    // uncapped vanishing order (min over the sides that exist)
  int left_order = -1;    // vanishing order of the piece on the left (-1: side outside the interval)
  int right_order = -1;   // same for the right side
  bool at_knot = false;
};

struct ZeroCount {
  std::vector<Zero> zeros;
  int total = 0;       // sum of capped multiplicities
  int total_local = 0; // sum of uncapped local orders
};

namespace detail {

inline double snap_distance(double point) { return 1e-9 * std::max(1.0, std::abs(point)); }

struct SidePoint {
  double location;
  bool is_knot;
  int left = -1;  // -1: side not in the interval; otherwise vanishing order (0 = nonzero)
  int right = -1;
  int left_sign = 0;
  int right_sign = 0;
};

} // namespace detail

//! Zeros of f on [lo, hi] counted with multiplicity.
//! Throws infinite_zeros_error if a piece vanishes on a subinterval.
inline ZeroCount count_zeros(const PiecewisePolynomial& f, double lo, double hi) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw invalid_argument("zero-count interval must be finite with lo <= hi");
  if (lo < f.domain_begin()) throw invalid_argument("zero-count interval starts below the spline domain");

  const int s = f.smoothness();
  const int cap = s == PiecewisePolynomial::infinitely_smooth ? std::numeric_limits<int>::max() : std::max(1, s + 1);

  // Boundary points: lo, hi and every knot strictly inside.
  std::map<double, detail::SidePoint> points;
  points[lo] = {lo, false};
  points[hi] = {hi, false};
  for (double t : f.knots())
    if (t > lo && t < hi) points[t] = {t, true};
  if (lo == hi) points.erase(hi);
  for (auto& [x, pt] : points)
    pt.is_knot = std::find(f.knots().begin(), f.knots().end(), x) != f.knots().end();

  ZeroCount result;
  std::vector<Zero> interior;

  const std::size_t first = f.piece_index(lo);
  for (std::size_t i = first; i < f.size(); ++i) {
    const double start = std::max(lo, f.knots()[i]);
    const double end = std::min(hi, f.piece_end(i));
    if (start > hi) break;
    const Polynomial<rational> piece = to_rational(f.piece(i));
    const rational origin = to_rational(f.knots()[i]);
    const rational a = to_rational(start) - origin;
    const rational b = to_rational(end) - origin;
    if (piece.is_zero()) {
      if (end > start) throw infinite_zeros_error("piece " + std::to_string(i) + " vanishes identically");
      continue;
    }

    auto side_order = [&](const rational& at) {
      return *vanishing_order(piece, at);
    };
    // Right side of `start`, left side of `end` belong to this piece.
    {
      auto& pt = points.at(start);
      pt.right = side_order(a);
      pt.right_sign = sign_of(piece(a));
    }
    if (end > start) {
      auto& pt = points.at(end);
      pt.left = side_order(b);
      pt.left_sign = sign_of(piece(b));
    }
    if (!(end > start)) continue;

    for (const auto& [factor, mult] : square_free_decomposition(piece)) {
      for (const rational& r : isolate_real_roots(factor, a, b)) {
        const double x = to_double(r + origin);
        if (x - start <= detail::snap_distance(start)) {
          auto& pt = points.at(start);
          if (pt.right == 0) pt.right = mult;
          continue;
        }
        if (end - x <= detail::snap_distance(end)) {
          auto& pt = points.at(end);
          if (pt.left == 0) pt.left = mult;
          continue;
        }
        interior.push_back({x, std::min(mult, cap), mult, mult, mult, false});
      }
    }
  }

  for (auto& [x, pt] : points) {
    Zero z;
    z.location = x;
    z.at_knot = pt.is_knot;
    z.left_order = pt.left;
    z.right_order = pt.right;
    const bool has_left = pt.left >= 0;
    const bool has_right = pt.right >= 0;
    const int l = has_left ? pt.left : 0;
    const int r = has_right ? pt.right : 0;
    if (s == -1 && has_left && has_right) {
      // One-sided limits of a discontinuous function: a sign change across
      // the jump or a vanishing side counts once.
      const bool crossing = pt.left_sign * pt.right_sign < 0;
      if (l == 0 && r == 0 && !crossing) continue;
      z.local_order = std::max({1, std::min(l > 0 ? l : r, r > 0 ? r : l)});
      z.multiplicity = 1;
    } else {
      if (l == 0 && r == 0) continue;
      // Rounded continuity can leave one side vanishing to order 0; use the
      // sides that do vanish.
      int local = std::numeric_limits<int>::max();
      if (l > 0) local = std::min(local, l);
      if (r > 0) local = std::min(local, r);
      z.local_order = local;
      z.multiplicity = std::min(local, cap);
    }
    interior.push_back(z);
  }

  std::sort(interior.begin(), interior.end(), [](const Zero& a, const Zero& b) { return a.location < b.location; });
  for (const Zero& z : interior) {
    result.total += z.multiplicity;
    result.total_local += z.local_order;
  }
  result.zeros = std::move(interior);
  return result;
}

struct RolleCheck {
  bool holds = false;
  int zeros_function = 0;
  int zeros_derivative = 0;
  int order = 0;
};

//! Checks N(f^(order), [lo,hi]) >= N(f, [lo,hi]) - order with capped counts.
inline RolleCheck rolle_bound_check(const PiecewisePolynomial& f, double lo, double hi, int order) {
  const PiecewisePolynomial df = differentiate(f, order);
  RolleCheck out;
  out.order = order;
  out.zeros_function = count_zeros(f, lo, hi).total;
  out.zeros_derivative = count_zeros(df, lo, hi).total;
  out.holds = out.zeros_derivative >= out.zeros_function - order;
  return out;
}

} // namespace kmono
