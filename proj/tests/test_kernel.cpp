#include "kmono/kernel.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace kmono;

namespace {

KMonotoneModel model(int k, std::vector<Atom> atoms) { return KMonotoneModel(k, MixingMeasure(std::move(atoms))); }

// Kolmogorov-Smirnov statistic of a sorted sample against a CDF.
template <typename Cdf>
double ks_statistic(const Sample& s, Cdf F) {
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = F(s[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_critical_1pct(std::size_t n) {
  const double r = std::sqrt(static_cast<double>(n));
  return 1.62762 / (r + 0.12 + 0.11 / r);
}

} // namespace

TEST(KernelEval, ReferenceExamples) {
  EXPECT_DOUBLE_EQ(kernel_eval(2, 1.0, 0.0), 2.0);
  EXPECT_EQ(kernel_eval(3, 2.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(kernel_eval(2, 2.0, 1.0), 0.5);
}

TEST(KernelEval, MatchesHighPrecisionFormula) {
  using big = boost::multiprecision::cpp_bin_float_50;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k : {2, 3, 5, 8, 20, 40, 80}) {
    for (int t = 0; t < 50; ++t) {
      const double y = 0.01 + 10 * u(rng);
      const double x = y * u(rng);
      const big yy(y), xx(x);
      const big ref = big(k) * pow(yy - xx, k - 1) / pow(yy, k);
      const double got = kernel_eval(k, y, x);
      EXPECT_NEAR(got, ref.convert_to<double>(), 1e-13 * ref.convert_to<double>() + 1e-300) << k << " " << y << " " << x;
    }
  }
}

TEST(KernelEval, OutsideSupportAndErrors) {
  EXPECT_EQ(kernel_eval(4, 1.0, 1.5), 0.0);
  EXPECT_THROW(kernel_eval(1, 1.0, 0.5), invalid_argument);
  EXPECT_THROW(kernel_eval(2, 0.0, 0.5), invalid_argument);
  EXPECT_THROW(kernel_eval(2, 1.0, -0.5), invalid_argument);
}

TEST(DensityEval, ReferenceExamples) {
  EXPECT_DOUBLE_EQ(density_eval(model(2, {{2, 1}}), 1.0), 0.5);
  const auto m = model(3, {{1, 0.5}, {2, 0.5}});
  EXPECT_DOUBLE_EQ(density_eval(m, 0.0), 2.25);
  EXPECT_EQ(density_eval(m, 2.0), 0.0);
}

TEST(DensityEval, NonincreasingOnGrid) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int k = 2; k <= 6; ++k) {
    std::vector<Atom> atoms;
    for (int j = 0; j < 4; ++j) atoms.push_back({u(rng), 0.25});
    const auto m = model(k, atoms);
    double prev = density_eval(m, 0.0);
    for (int i = 1; i <= 500; ++i) {
      const double f = density_eval(m, i * 0.012);
      EXPECT_LE(f, prev * (1 + 1e-14));
      prev = f;
    }
  }
}

TEST(DensityCdf, ReferenceExamples) {
  const auto m = model(2, {{1, 1}});
  EXPECT_DOUBLE_EQ(density_cdf(m, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(density_cdf(m, 0.5), 0.75);
  EXPECT_EQ(density_cdf(m, 0.0), 0.0);
}

TEST(DensityCdf, IsTheIntegralOfTheDensity) {
  // composite Gauss-Legendre (5 points) on each piece between atoms
  const double gx[] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
  const double gw[] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                       0.2369268850561891};
  const auto m = model(4, {{0.7, 0.2}, {1.5, 0.5}, {3.0, 0.3}});
  for (double x : {0.3, 0.7, 1.1, 2.9, 3.5}) {
    double integral = 0.0;
    const int cells = 400;
    for (int c = 0; c < cells; ++c) {
      const double a = x * c / cells, b = x * (c + 1) / cells;
      for (int q = 0; q < 5; ++q) integral += gw[q] * (b - a) / 2 * density_eval(m, (a + b) / 2 + gx[q] * (b - a) / 2);
    }
    EXPECT_NEAR(integral, density_cdf(m, x), 1e-8) << x;
  }
}

TEST(SampleFrom, DeterministicPerSeed) {
  const auto m = model(3, {{1, 0.3}, {2, 0.7}});
  const Sample a = sample_from(m, 5, 7);
  const Sample b = sample_from(m, 5, 7);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_TRUE(a.distinct());
}

TEST(SampleFrom, SupportBound) {
  const Sample s = sample_from(model(2, {{1, 0.5}, {3, 0.5}}), 10000, 2);
  EXPECT_LT(s.max(), 3.0);
}

TEST(SampleFrom, KolmogorovSmirnovSingleAtom) {
  const auto m = model(2, {{1, 1}});
  const Sample s = sample_from(m, 10000, 1);
  EXPECT_LT(ks_statistic(s, [&](double x) { return density_cdf(m, x); }), ks_critical_1pct(s.size()));
}

TEST(SampleAndMeasure, Validation) {
  EXPECT_THROW(Sample(std::vector<double>{}), invalid_argument);
  EXPECT_THROW(Sample({1.0, -1.0}), invalid_argument);
  EXPECT_THROW(Sample({1.0, 1.0}), tied_sample_error);
  EXPECT_FALSE(Sample({1.0, 1.0}, ties::allow).distinct());
  EXPECT_THROW(MixingMeasure({{1.0, 0.5}, {2.0, 0.4}}), invalid_argument);
  EXPECT_THROW(MixingMeasure({{1.0, 0.5}, {1.0, 0.5}}), invalid_argument);
  EXPECT_THROW(MixingMeasure({{0.0, 1.0}}), invalid_argument);
  EXPECT_THROW(MixingMeasure(std::vector<Atom>{}), invalid_argument);
  const MixingMeasure g({{3.0, 0.25}, {1.0, 0.75}});
  EXPECT_EQ(g[0].location, 1.0);
  EXPECT_EQ(g.max_location(), 3.0);
}
