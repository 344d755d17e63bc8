#pragma once

// Dense univariate polynomials (ascending coefficients) and a fast
// floating-point real-root finder. Exact root isolation lives in
// exact_roots.hpp.

#include "kmono/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace kmono {

template <typename T>
class Polynomial {
public:
  Polynomial() = default;
  explicit Polynomial(std::vector<T> coefficients) : c_(std::move(coefficients)) { trim(); }
  Polynomial(std::initializer_list<T> coefficients) : c_(coefficients) { trim(); }

  static Polynomial constant(T value) { return Polynomial(std::vector<T>{std::move(value)}); }

  //! (t - root)^power
  static Polynomial power_of_linear(const T& root, int power) {
    Polynomial out = constant(T(1));
    const Polynomial lin(std::vector<T>{-root, T(1)});
    for (int i = 0; i < power; ++i) out = out * lin;
    return out;
  }

  bool is_zero() const { return c_.empty(); }
  //! -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<T>& coefficients() const { return c_; }
  T coefficient(int d) const { return d >= 0 && d < static_cast<int>(c_.size()) ? c_[d] : T(0); }
  const T& leading() const { return c_.back(); }

  template <typename U>
  U operator()(const U& t) const {
    U acc(0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * t + U(*it);
    return acc;
  }

  Polynomial derivative(int order = 1) const {
    if (order <= 0) return *this;
    if (order > degree()) return Polynomial();
    std::vector<T> d(c_.size() - order);
    for (std::size_t i = 0; i < d.size(); ++i) {
      T factor(1);
      for (int j = 0; j < order; ++j) factor *= T(static_cast<long long>(i + order - j));
      d[i] = c_[i + order] * factor;
    }
    return Polynomial(std::move(d));
  }

  //! q(t) = p(t + shift)
  Polynomial shifted(const T& shift) const {
    std::vector<T> a(c_);
    const int n = static_cast<int>(a.size());
    // Taylor shift by repeated synthetic division.
    for (int i = 0; i < n; ++i)
      for (int j = n - 2; j >= i; --j) a[j] += shift * a[j + 1];
    return Polynomial(std::move(a));
  }

  //! q(s) = p(scale * s)
  Polynomial scaled(const T& scale) const {
    std::vector<T> a(c_);
    T factor(1);
    for (auto& coef : a) {
      coef *= factor;
      factor *= scale;
    }
    return Polynomial(std::move(a));
  }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), T(0));
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
    trim();
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), T(0));
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
    trim();
    return *this;
  }
  Polynomial& operator*=(const T& s) {
    for (auto& coef : c_) coef *= s;
    trim();
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, const T& s) { return a *= s; }
  friend Polynomial operator*(const T& s, Polynomial a) { return a *= s; }
  friend Polynomial operator-(Polynomial a) { return a *= T(-1); }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return Polynomial();
    std::vector<T> out(a.c_.size() + b.c_.size() - 1, T(0));
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
    return Polynomial(std::move(out));
  }

  friend bool operator==(const Polynomial&, const Polynomial&) = default;

  //! Euclidean division; returns {quotient, remainder}.
  friend std::pair<Polynomial, Polynomial> divmod(const Polynomial& num, const Polynomial& den) {
    if (den.is_zero()) throw invalid_argument("polynomial division by zero");
    std::vector<T> r(num.c_);
    const int dd = den.degree();
    if (num.degree() < dd) return {Polynomial(), num};
    std::vector<T> q(num.degree() - dd + 1, T(0));
    for (int i = num.degree(); i >= dd; --i) {
      const T factor = r[i] / den.leading();
      q[i - dd] = factor;
      for (int j = 0; j <= dd; ++j) r[i - dd + j] -= factor * den.c_[j];
    }
    r.resize(dd);
    return {Polynomial(std::move(q)), Polynomial(std::move(r))};
  }

private:
  void trim() {
    while (!c_.empty() && c_.back() == T(0)) c_.pop_back();
  }

  std::vector<T> c_;
};

namespace detail {

template <typename T>
T newton_polish(const Polynomial<T>& p, const Polynomial<T>& dp, T x, T lo, T hi) {
  using std::abs;
  for (int it = 0; it < 60; ++it) {
    const T fx = p(x);
    if (fx == T(0)) break;
    const T d = dp(x);
    if (d == T(0)) break;
    const T next = x - fx / d;
    if (!(next >= lo && next <= hi)) break;
    const T step = abs(next - x);
    x = next;
    if (step <= std::numeric_limits<T>::epsilon() * (abs(x) + std::numeric_limits<T>::min())) break;
  }
  return x;
}

template <typename T>
T bisect_sign_change(const Polynomial<T>& p, T a, T b) {
  T fa = p(a);
  for (int it = 0; it < 200; ++it) {
    const T m = a + (b - a) / 2;
    if (!(m > a && m < b)) break;
    const T fm = p(m);
    if (fm == T(0)) return m;
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return a + (b - a) / 2;
}

} // namespace detail

//! Approximate real roots of p in [lo, hi] (finite), sorted. Uses
//! companion-matrix eigenvalues in the scaled variable s = (t - lo)/(hi - lo)
//! followed by Newton polishing, plus bisection on sign changes of a
//! uniform probe grid. Near-real eigenvalues of clustered roots are kept,
//! so callers that optimize over the returned points may receive a few
//! extra (harmless) probes.
template <typename T>
std::vector<T> approximate_real_roots(const Polynomial<T>& p, T lo, T hi, int probe_cells = 16) {
  using std::abs;
  std::vector<T> roots;
  if (p.is_zero() || p.degree() == 0 || !(hi > lo)) return roots;
  const T width = hi - lo;
  const Polynomial<T> dp = p.derivative();

  const Polynomial<T> local = p.shifted(lo).scaled(width);
  const auto& c = local.coefficients();
  T cmax(0);
  for (const auto& x : c) cmax = std::max(cmax, T(abs(x)));
  int deg = local.degree();
  while (deg > 0 && abs(c[deg]) <= T(1e-14) * cmax) --deg;

  if (deg >= 1) {
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
    const double lead = static_cast<double>(c[deg]);
    for (int i = 0; i < deg; ++i) companion(0, i) = -static_cast<double>(c[deg - 1 - i]) / lead;
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
    if (es.info() == Eigen::Success) {
      const auto ev = es.eigenvalues();
      for (int i = 0; i < ev.size(); ++i) {
        const double re = ev[i].real();
        const double im = ev[i].imag();
        if (re < -0.05 || re > 1.05 || std::abs(im) > 0.05) continue;
        T x = lo + T(std::clamp(re, 0.0, 1.0)) * width;
        roots.push_back(detail::newton_polish(p, dp, x, lo, hi));
      }
    }
  }

  // Sign-change sweep catches anything the eigenvalue route lost.
  T prev_x = lo;
  T prev_f = p(lo);
  if (prev_f == T(0)) roots.push_back(lo);
  for (int i = 1; i <= probe_cells; ++i) {
    const T x = i == probe_cells ? hi : lo + width * T(i) / T(probe_cells);
    const T fx = p(x);
    if (fx == T(0)) {
      roots.push_back(x);
    } else if (prev_f != T(0) && ((fx < 0) != (prev_f < 0))) {
      roots.push_back(detail::bisect_sign_change(p, prev_x, x));
    }
    prev_x = x;
    prev_f = fx;
  }

  std::sort(roots.begin(), roots.end());
  std::vector<T> unique;
  for (const T& r : roots) {
    if (!unique.empty() && abs(r - unique.back()) <= T(1e-13) * (abs(r) + width)) continue;
    unique.push_back(r);
  }
  return unique;
}

//! Cauchy bound: every root satisfies |t| <= 1 + max_i |c_i / c_d|.
template <typename T>
T cauchy_root_bound(const Polynomial<T>& p) {
  using std::abs;
  T bound(0);
  for (int i = 0; i < p.degree(); ++i) bound = std::max(bound, T(abs(p.coefficient(i) / p.leading())));
  return T(1) + bound;
}

} // namespace kmono
