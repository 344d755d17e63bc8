#include "kmono/exact_roots.hpp"
#include "kmono/total_positivity.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace kmono;

namespace {

// Exact det((Y_i - t_j)_+^e) by rational Gaussian elimination.
rational exact_tp_determinant(const std::vector<double>& y, const std::vector<double>& t, int e) {
  const std::size_t m = y.size();
  std::vector<std::vector<rational>> a(m, std::vector<rational>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const rational d = to_rational(y[i]) - to_rational(t[j]);
      rational p(1);
      if (d > 0) {
        for (int r = 0; r < e; ++r) p *= d;
      } else {
        p = 0;
      }
      a[i][j] = p;
    }
  rational det(1);
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    while (piv < m && a[piv][c] == 0) ++piv;
    if (piv == m) return rational(0);
    if (piv != c) {
      std::swap(a[piv], a[c]);
      det = -det;
    }
    det *= a[c][c];
    for (std::size_t r = c + 1; r < m; ++r) {
      const rational f = a[r][c] / a[c][c];
      for (std::size_t j = c; j < m; ++j) a[r][j] -= f * a[c][j];
    }
  }
  return det;
}

bool interlaces(const std::vector<double>& y, const Sample& x, const std::vector<std::size_t>& idx, int k) {
  const std::size_t m = y.size();
  for (std::size_t j = 0; j < m; ++j) {
    if (!(x[idx[j]] < y[j])) return false;
    if (j + k < m && !(y[j] < x[idx[j + k]])) return false;
  }
  for (std::size_t j = 1; j < m; ++j)
    if (!(idx[j] > idx[j - 1])) return false;
  return true;
}

bool brute_force_interlacing(const std::vector<double>& y, const Sample& x, int k) {
  const std::size_t m = y.size(), n = x.size();
  if (m > n) return false;
  std::vector<std::size_t> idx(m);
  for (std::size_t j = 0; j < m; ++j) idx[j] = j;
  while (true) {
    if (interlaces(y, x, idx, k)) return true;
    std::size_t j = m;
    while (j > 0 && idx[j - 1] == n - m + j - 1) --j;
    if (j == 0) return false;
    ++idx[j - 1];
    for (std::size_t l = j; l < m; ++l) idx[l] = idx[l - 1] + 1;
  }
}

KMonotoneModel model(int k, std::vector<Atom> atoms) { return KMonotoneModel(k, MixingMeasure(std::move(atoms))); }

} // namespace

TEST(TpDeterminant, ReferenceExamples) {
  const std::vector<double> y1{2.0}, t1{1.0};
  EXPECT_DOUBLE_EQ(tp_determinant(y1, t1, 1), 1.0);
  const std::vector<double> y{2.0, 3.0}, t{1.0, 2.5};
  EXPECT_NEAR(tp_determinant(y, t, 1), 0.5, 1e-15);
  const std::vector<double> t2{2.5, 2.7};
  EXPECT_EQ(tp_determinant(y, t2, 1), to_double(exact_tp_determinant(y, t2, 1)));
  EXPECT_EQ(tp_determinant(y, t2, 1), 0.0);
}

TEST(TpDeterminant, PositiveUnderInterlacingAgainstExactArithmetic) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + trial % 4;
    const int m = 1 + trial % 6;
    std::vector<double> y(m);
    double acc = 0.0;
    for (double& v : y) v = acc += 0.2 + u(rng);
    // t_j in (Y_{j-k}, Y_j), kept increasing
    std::vector<double> t(m);
    double last = 0.0;
    bool ok = true;
    for (int j = 0; j < m; ++j) {
      const double lo = std::max(last, j >= k ? y[j - k] : 0.0);
      if (!(lo < y[j])) { ok = false; break; }
      t[j] = last = lo + (y[j] - lo) * (0.1 + 0.8 * u(rng));
    }
    if (!ok) continue;
    const auto sl = tp_determinant_sign_log(y, t, k - 1);
    const rational exact = exact_tp_determinant(y, t, k - 1);
    ASSERT_GT(exact, 0) << "trial " << trial;
    EXPECT_EQ(sl.sign, 1) << "trial " << trial;
    EXPECT_NEAR(sl.log_abs, std::log(to_double(exact)), 1e-9 * (1 + std::abs(sl.log_abs)));
  }
}

TEST(TpDeterminant, IllConditionedSignIsExact) {
  // columns nearly coincide: floating-point elimination loses the sign
  const std::vector<double> y{0.0030144123841853478, 0.009680144210906098, 0.52876500363999068, 1.4963375221855373,
                              2.9418092427116753, 5.1198549833111882};
  const std::vector<double> t{0.0001635288600815854, 0.00033020081805501533, 0.00044794317829649488,
                              0.00047044214172914378, 0.0030998751693576132, 0.0098904945999402916};
  const rational exact = exact_tp_determinant(y, t, 3);
  ASSERT_GT(exact, 0);
  const auto sl = tp_determinant_sign_log(y, t, 3);
  EXPECT_EQ(sl.sign, 1);
  const double log_exact = std::log(to_double(exact));
  EXPECT_NEAR(sl.log_abs, log_exact, 1e-9 * std::abs(log_exact));
}

TEST(TpDeterminant, RejectsBadInput) {
  const std::vector<double> y{1.0, 2.0}, t{1.0};
  EXPECT_THROW(tp_determinant(y, t, 1), invalid_argument);
  const std::vector<double> y2{2.0, 1.0}, t2{0.5, 0.7};
  EXPECT_THROW(tp_determinant(y2, t2, 1), invalid_argument);
}

TEST(Interlacing, ReferenceExamples) {
  const std::vector<double> y1{2.0};
  for (int k : {2, 3, 7}) {
    const auto w = interlacing_witness(y1, Sample({1.0}), k);
    ASSERT_TRUE(w);
    EXPECT_EQ(*w, std::vector<std::size_t>{0});
  }
  const std::vector<double> y{1.5, 2.5};
  const auto w = interlacing_witness(y, Sample({1.0, 2.0, 3.0}), 2);
  ASSERT_TRUE(w);
  EXPECT_EQ(*w, (std::vector<std::size_t>{0, 1}));
}

TEST(Interlacing, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  int found = 0;
  for (int trial = 0; trial < 600; ++trial) {
    const int k = 2 + trial % 3;
    const int m = 1 + trial % 6;
    const int n = m + static_cast<int>(rng() % 5);
    std::vector<double> xs(n), y(m);
    for (double& v : xs) v = u(rng);
    for (double& v : y) v = u(rng);
    std::sort(y.begin(), y.end());
    if (std::adjacent_find(y.begin(), y.end()) != y.end()) continue;
    const Sample x(xs);
    const auto w = interlacing_witness(y, x, k);
    const bool expected = brute_force_interlacing(y, x, k);
    EXPECT_EQ(w.has_value(), expected) << "trial " << trial;
    if (w) {
      EXPECT_TRUE(interlaces(y, x, *w, k)) << "trial " << trial;
      ++found;
    }
  }
  EXPECT_GT(found, 50);
}

TEST(DifferenceSpline, IdenticalModelsGiveZero) {
  const auto m = model(3, {{1.0, 0.3}, {2.0, 0.7}});
  const auto q = difference_spline(m, m);
  for (const auto& piece : q.pieces()) EXPECT_TRUE(piece.is_zero());
}

TEST(DifferenceSpline, TwoSingleAtoms) {
  const auto q = difference_spline(model(2, {{2, 1}}), model(2, {{3, 1}}));
  EXPECT_EQ(q.knots().size(), 3u); // 0, 2, 3
  for (double x : {0.0, 0.5, 1.9, 2.0, 2.5, 3.0, 4.0}) {
    const double expected = std::max(2 - x, 0.0) / 2 - 2 * std::max(3 - x, 0.0) / 9;
    EXPECT_NEAR(q(x), expected, 1e-15) << x;
  }
  EXPECT_EQ(q.smoothness(), 0);
}

TEST(DifferenceSpline, EqualsDensityDifference) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int k = 2; k <= 7; ++k) {
    std::vector<Atom> a1, a2;
    for (int j = 0; j < 3; ++j) a1.push_back({u(rng), 1.0 / 3});
    for (int j = 0; j < 2; ++j) a2.push_back({u(rng), 0.5});
    const auto m1 = model(k, a1), m2 = model(k, a2);
    const auto q = difference_spline(m1, m2);
    for (int i = 0; i <= 200; ++i) {
      const double x = 0.03 * i;
      const double f1 = density_eval(m1, x), f2 = density_eval(m2, x);
      EXPECT_NEAR(q(x), f1 - f2, 1e-12 * std::max({f1, f2, 1.0})) << "k=" << k << " x=" << x;
    }
    EXPECT_TRUE(q.check_smoothness(1e-9)) << "k=" << k;
  }
}
