#pragma once

// Exact real-root isolation over the rationals: square-free decomposition
// (Yun), Sturm sequences, and bisection refinement with exact sign
// evaluation. Input coefficients are doubles, which convert to rationals
// without rounding.

#include "kmono/polynomial.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <optional>
#include <vector>

namespace kmono {

using rational = boost::multiprecision::cpp_rational;

inline rational to_rational(double x) {
  if (!std::isfinite(x)) throw invalid_argument("cannot convert non-finite value to rational");
  return rational(x);
}

inline double to_double(const rational& x) { return x.convert_to<double>(); }

inline Polynomial<rational> to_rational(const Polynomial<double>& p) {
  std::vector<rational> c;
  c.reserve(p.coefficients().size());
  for (double x : p.coefficients()) c.push_back(to_rational(x));
  return Polynomial<rational>(std::move(c));
}

inline Polynomial<rational> make_monic(const Polynomial<rational>& p) {
  if (p.is_zero()) return p;
  return p * (rational(1) / p.leading());
}

inline Polynomial<rational> poly_gcd(Polynomial<rational> a, Polynomial<rational> b) {
  while (!b.is_zero()) {
    auto r = divmod(a, b).second;
    a = std::move(b);
    b = make_monic(r);
  }
  return make_monic(a);
}

inline Polynomial<rational> exact_quotient(const Polynomial<rational>& a, const Polynomial<rational>& b) {
  return divmod(a, b).first;
}

struct SquareFreeFactor {
  Polynomial<rational> factor; // monic, square-free, degree >= 1
  int multiplicity;
};

//! Yun's algorithm: p = c * prod_i factor_i^i with pairwise coprime factors.
inline std::vector<SquareFreeFactor> square_free_decomposition(const Polynomial<rational>& p) {
  std::vector<SquareFreeFactor> out;
  if (p.degree() < 1) return out;
  const Polynomial<rational> dp = p.derivative();
  Polynomial<rational> a = poly_gcd(p, dp);
  Polynomial<rational> b = exact_quotient(p, a);
  Polynomial<rational> c = exact_quotient(dp, a);
  Polynomial<rational> d = c - b.derivative();
  int i = 1;
  while (b.degree() >= 1) {
    a = poly_gcd(b, d);
    if (a.degree() >= 1) out.push_back({make_monic(a), i});
    b = exact_quotient(b, a);
    c = exact_quotient(d, a);
    d = c - b.derivative();
    ++i;
  }
  return out;
}

inline int sign_of(const rational& x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

class SturmSequence {
public:
  explicit SturmSequence(const Polynomial<rational>& p) {
    seq_.push_back(p);
    if (p.degree() < 1) return;
    seq_.push_back(p.derivative());
    while (true) {
      auto r = divmod(seq_[seq_.size() - 2], seq_.back()).second;
      if (r.is_zero()) break;
      // Positive rescaling keeps signs and limits coefficient growth.
      r = -(r * (rational(1) / abs(r.leading())));
      seq_.push_back(std::move(r));
    }
  }

  int sign_changes(const rational& x) const {
    int changes = 0;
    int last = 0;
    for (const auto& s : seq_) {
      const int sg = sign_of(s(x));
      if (sg == 0) continue;
      if (last != 0 && sg != last) ++changes;
      last = sg;
    }
    return changes;
  }

  //! Sign changes at +inf (positive = true) or -inf.
  int sign_changes_at_infinity(bool positive) const {
    int changes = 0;
    int last = 0;
    for (const auto& s : seq_) {
      if (s.is_zero()) continue;
      int sg = sign_of(s.leading());
      if (!positive && (s.degree() % 2 == 1)) sg = -sg;
      if (last != 0 && sg != last) ++changes;
      last = sg;
    }
    return changes;
  }

  //! Distinct roots in (a, b]; exact when p(a) != 0.
  int count(const rational& a, const rational& b) const { return sign_changes(a) - sign_changes(b); }

private:
  std::vector<Polynomial<rational>> seq_;
};

namespace detail {

inline rational refine_simple_root(const Polynomial<rational>& g, rational a, rational b, double rel_tol) {
  int sa = sign_of(g(a));
  for (int it = 0; it < 2000; ++it) {
    const double ad = to_double(a);
    const double bd = to_double(b);
    const double scale = std::max({1.0, std::abs(ad), std::abs(bd)});
    if (bd - ad <= rel_tol * scale || std::nextafter(ad, bd) >= bd) break;
    double md = ad + (bd - ad) / 2;
    rational m = to_rational(md);
    if (!(m > a && m < b)) m = (a + b) / 2;
    const int sm = sign_of(g(m));
    if (sm == 0) return m;
    if (sm == sa) {
      a = m;
    } else {
      b = m;
    }
  }
  return (a + b) / 2;
}

inline void isolate(const Polynomial<rational>& g, const SturmSequence& sturm, const rational& a, const rational& b,
                    int count, double rel_tol, std::vector<rational>& out) {
  if (count <= 0) return;
  if (count == 1) {
    out.push_back(refine_simple_root(g, a, b, rel_tol));
    return;
  }
  // Split away from roots of g so the Sturm count stays exact.
  rational m = (a + b) / 2;
  for (int nudge = 3; sign_of(g(m)) == 0; ++nudge) m = a + (b - a) * rational(1, 2) + (b - a) / rational(1 << std::min(nudge, 30));
  const int left = sturm.count(a, m);
  isolate(g, sturm, a, m, left, rel_tol, out);
  isolate(g, sturm, m, b, count - left, rel_tol, out);
}

} // namespace detail

//! Roots of a square-free polynomial strictly inside (a, b), sorted and
//! refined to rel_tol (0: to the nearest double). Roots at the endpoints
//! are excluded.
inline std::vector<rational> isolate_real_roots(Polynomial<rational> g, const rational& a, const rational& b,
                                                double rel_tol = 0.0) {
  std::vector<rational> out;
  if (g.degree() < 1 || !(b > a)) return out;
  for (const rational* end : {&a, &b}) {
    if (sign_of(g(*end)) == 0) g = exact_quotient(g, Polynomial<rational>({-*end, rational(1)}));
  }
  if (g.degree() < 1) return out;
  const SturmSequence sturm(g);
  detail::isolate(g, sturm, a, b, sturm.count(a, b), rel_tol, out);
  return out;
}

//! Order of vanishing of p at x (0 if p(x) != 0). The zero polynomial is
//! reported as nullopt.
inline std::optional<int> vanishing_order(const Polynomial<rational>& p, const rational& x) {
  if (p.is_zero()) return std::nullopt;
  Polynomial<rational> q = p;
  int order = 0;
  while (!q.is_zero() && sign_of(q(x)) == 0) {
    q = q.derivative();
    ++order;
  }
  return order;
}

} // namespace kmono
