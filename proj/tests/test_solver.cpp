#include "kmono/geometry.hpp"
#include "kmono/solver.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace kmono;

namespace {

KMonotoneModel model(int k, std::vector<Atom> atoms) { return KMonotoneModel(k, MixingMeasure(std::move(atoms))); }

// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> u(v);
  std::sort(u.rbegin(), u.rend());
  double css = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    css += u[j];
    const double t = (css - 1.0) / (j + 1);
    if (u[j] - t > 0) theta = t;
  }
  for (double& x : v) x = std::max(0.0, x - theta);
  return v;
}

double weights_loglik(const std::vector<double>& support, const Sample& x, int k, const std::vector<double>& w) {
  double total = 0.0;
  for (double xi : x.values()) {
    double f = 0.0;
    for (std::size_t j = 0; j < support.size(); ++j) f += w[j] * kernel_eval(k, support[j], xi);
    total += std::log(f);
  }
  return total;
}

// Projected gradient ascent with backtracking; independent of the solver.
std::vector<double> projected_gradient_weights(const std::vector<double>& support, const Sample& x, int k) {
  const std::size_t m = support.size();
  std::vector<double> w(m, 1.0 / m);
  double obj = weights_loglik(support, x, k, w);
  double step = 1.0;
  for (int it = 0; it < 20000; ++it) {
    std::vector<double> g(m, 0.0);
    for (double xi : x.values()) {
      double f = 0.0;
      for (std::size_t j = 0; j < m; ++j) f += w[j] * kernel_eval(k, support[j], xi);
      for (std::size_t j = 0; j < m; ++j) g[j] += kernel_eval(k, support[j], xi) / f;
    }
    bool moved = false;
    for (int ls = 0; ls < 50; ++ls, step /= 2) {
      std::vector<double> trial(m);
      for (std::size_t j = 0; j < m; ++j) trial[j] = w[j] + step * g[j];
      trial = project_simplex(trial);
      bool feasible = true;
      for (double xi : x.values()) {
        double f = 0.0;
        for (std::size_t j = 0; j < m; ++j) f += trial[j] * kernel_eval(k, support[j], xi);
        feasible = feasible && f > 0;
      }
      if (!feasible) continue;
      const double t_obj = weights_loglik(support, x, k, trial);
      if (t_obj > obj) {
        w = trial;
        obj = t_obj;
        moved = true;
        step *= 4;
        break;
      }
    }
    if (!moved) break;
  }
  return w;
}

void expect_conditions(const SolveResult& r, const Sample& x) {
  ASSERT_TRUE(r.certificate.report);
  const ConditionReport& c = *r.certificate.report;
  EXPECT_TRUE(c.support_size_ok);
  EXPECT_TRUE(c.location_bounds_ok);
  EXPECT_TRUE(c.tail_ok);
  EXPECT_TRUE(c.interlacing.has_value());
  EXPECT_TRUE(c.determinant_ok);
  EXPECT_LE(r.model.mixing().size(), x.size());
}

} // namespace

TEST(SolveMle, SinglePointClosedForm) {
  for (int k : {2, 3, 4, 5, 8}) {
    const SolveResult r = solve_mle(Sample({1.0}), k);
    ASSERT_TRUE(r.converged) << k;
    ASSERT_EQ(r.model.mixing().size(), 1u) << k;
    EXPECT_NEAR(r.model.mixing()[0].location, k, 1e-8 * k) << k;
    EXPECT_DOUBLE_EQ(r.model.mixing()[0].weight, 1.0);
    EXPECT_GE(r.certificate.p_min, -1e-12);
  }
}

TEST(SolveMle, MatchesBruteForceOnThreePoints) {
  const Sample x({1.0, 2.0, 3.0});
  const SolveResult r = solve_mle(x, 2);
  ASSERT_TRUE(r.converged);
  const SolveResult oracle = brute_force_oracle(x, 2, 120);
  EXPECT_GE(r.log_likelihood, oracle.log_likelihood - 1e-6);
  // the grid optimum is near the true one
  EXPECT_LE(r.log_likelihood - oracle.log_likelihood, 5e-2);
  expect_conditions(r, x);
}

TEST(SolveMle, LogLikelihoodNondecreasing) {
  for (int k = 2; k <= 5; ++k) {
    const Sample x = sample_from(model(k, {{1.0, 0.5}, {2.5, 0.5}}), 40, 100 + k);
    const SolveResult r = solve_mle(x, k);
    ASSERT_TRUE(r.converged) << k;
    for (std::size_t i = 1; i < r.log_likelihood_trace.size(); ++i)
      EXPECT_GE(r.log_likelihood_trace[i], r.log_likelihood_trace[i - 1] - 1e-12 * std::abs(r.log_likelihood_trace[i]))
          << "k=" << k << " iteration " << i;
    expect_conditions(r, x);
  }
}

TEST(SolveMle, CertificateHoldsOnConvergence) {
  const Sample x = sample_from(model(3, {{0.5, 0.3}, {1.0, 0.3}, {4.0, 0.4}}), 60, 9);
  const SolveResult r = solve_mle(x, 3);
  ASSERT_TRUE(r.converged);
  const double scale = ipow(x.max(), 3);
  EXPECT_GE(r.certificate.p_min, -1e-8 * scale);
  for (double pv : r.certificate.atom_p_values) EXPECT_LE(pv, 1e-8 * scale);
  EXPECT_LE(r.final_gradient_sup, 1e-8);
}

TEST(SolveMle, IterationCapReportsNonConvergence) {
  const Sample x = sample_from(model(2, {{1.0, 0.5}, {2.0, 0.5}}), 50, 4);
  SolverConfig cfg;
  cfg.max_outer_iters = 1;
  const SolveResult r = solve_mle(x, 2, cfg);
  EXPECT_EQ(r.outer_iterations, 1);
  EXPECT_EQ(r.log_likelihood, log_likelihood(r.model, x));
}

TEST(InnerWeightSolve, TrivialSupports) {
  const std::vector<double> s{2.0};
  EXPECT_EQ(inner_weight_solve(s, Sample({1.0}), 2), std::vector<double>{1.0});
  const std::vector<double> s2{7.5};
  EXPECT_EQ(inner_weight_solve(s2, Sample({0.5, 1.5, 3.0}), 4), std::vector<double>{1.0});
}

TEST(InnerWeightSolve, InfeasibleSupport) {
  const std::vector<double> s{0.5, 1.0};
  EXPECT_THROW(inner_weight_solve(s, Sample({1.0, 2.0}), 2), infeasible_support_error);
}

TEST(InnerWeightSolve, MatchesProjectedGradientReference) {
  {
    const std::vector<double> s{2.0, 4.0};
    const Sample x({1.0, 3.0});
    const auto w = inner_weight_solve(s, x, 2);
    const auto ref = projected_gradient_weights({2.0, 4.0}, x, 2);
    EXPECT_NEAR(weights_loglik({2.0, 4.0}, x, 2, w), weights_loglik({2.0, 4.0}, x, 2, ref), 1e-8);
    EXPECT_GE(weights_loglik({2.0, 4.0}, x, 2, w), weights_loglik({2.0, 4.0}, x, 2, ref) - 1e-10);
  }
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.2, 4.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 2 + trial % 4;
    std::vector<double> xs(8), s(5);
    for (double& a : xs) a = u(rng);
    for (double& a : s) a = u(rng);
    const Sample x(xs);
    s.push_back(1.5 * x.max());
    std::sort(s.begin(), s.end());
    const auto w = inner_weight_solve(s, x, k);
    const auto ref = projected_gradient_weights(s, x, k);
    EXPECT_GE(weights_loglik(s, x, k, w), weights_loglik(s, x, k, ref) - 1e-8) << "trial " << trial;
    double sum = 0.0;
    for (double a : w) {
      EXPECT_GE(a, 0.0);
      sum += a;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(CandidateSearch, EmptyAtOptimum) {
  const std::vector<double> b{0.5};
  EXPECT_TRUE(candidate_search(b, Sample({1.0}), 2).empty());
}

TEST(CandidateSearch, FindsTheImprovingDirection) {
  const std::vector<double> b{4.0 / 9.0};
  const auto c = candidate_search(b, Sample({1.0}), 2);
  ASSERT_FALSE(c.empty());
  EXPECT_NEAR(c.front().location, 2.0, 1e-6);
  EXPECT_NEAR(c.front().gradient, 0.125, 1e-12);
}

TEST(CandidateSearch, ArgmaxInvariantUnderScalingOfB) {
  const Sample x({0.4, 1.1, 1.9, 2.6});
  const auto fit = model(2, {{3.0, 1.0}});
  auto b = fitted_vector(fit, x);
  const auto c1 = candidate_search(b, x, 2);
  for (double& v : b) v *= 0.5;
  const auto c2 = candidate_search(b, x, 2);
  ASSERT_FALSE(c1.empty());
  ASSERT_FALSE(c2.empty());
  EXPECT_NEAR(c1.front().location, c2.front().location, 1e-6 * c1.front().location);
}

TEST(PruneAndMerge, ReferenceExamples) {
  const auto a = prune_and_merge(MixingMeasure({{2.0, 1.0 - 1e-15}, {2.0000001, 1e-15}}));
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].location, 2.0);
  EXPECT_DOUBLE_EQ(a[0].weight, 1.0);

  const auto b = prune_and_merge(MixingMeasure({{2.0, 0.5}, {2.0 + 1e-9, 0.5}}));
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NEAR(b[0].location, 2.0 + 0.5e-9, 1e-15);
  EXPECT_DOUBLE_EQ(b[0].weight, 1.0);

  const MixingMeasure c({{1.0, 0.25}, {2.0, 0.25}, {3.0, 0.5}});
  EXPECT_EQ(prune_and_merge(c), c);
}

TEST(BruteForceOracle, ReferenceExamples) {
  const SolveResult a = brute_force_oracle(Sample({1.0}), 2, 10000);
  ASSERT_EQ(a.model.mixing().size(), 1u);
  EXPECT_NEAR(a.model.mixing()[0].location, 2.0, 3.0 / 10000 + 1e-12);
  EXPECT_NEAR(a.log_likelihood, std::log(0.5), 1e-5);

  const Sample x({1.0, 2.0});
  EXPECT_LE(brute_force_oracle(x, 2, 200).log_likelihood, solve_mle(x, 2).log_likelihood + 1e-6);

  const SolveResult c = brute_force_oracle(Sample({1.0}), 3, 3000);
  EXPECT_NEAR(c.model.mixing().max_location(), 3.0, 3.0 / 3000 + 1e-12);
}

TEST(SolveMle, ScaleEquivariance) {
  const Sample x = sample_from(model(3, {{1.0, 0.6}, {2.0, 0.4}}), 25, 77);
  const SolveResult base = solve_mle(x, 3);
  ASSERT_TRUE(base.converged);
  for (double c : {0.01, 100.0}) {
    const SolveResult r = solve_mle(x.scaled(c), 3);
    ASSERT_TRUE(r.converged);
    ASSERT_EQ(r.model.mixing().size(), base.model.mixing().size());
    for (std::size_t j = 0; j < base.model.mixing().size(); ++j) {
      EXPECT_NEAR(r.model.mixing()[j].location, c * base.model.mixing()[j].location,
                  1e-8 * c * base.model.mixing()[j].location);
      EXPECT_NEAR(r.model.mixing()[j].weight, base.model.mixing()[j].weight, 1e-8);
    }
  }
}
