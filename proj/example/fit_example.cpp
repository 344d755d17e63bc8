// Draw from a two-atom convex decreasing density, fit it, print the result.

#include "kmono/geometry.hpp"
#include "kmono/solver.hpp"

#include <iostream>

int main() {
  const int k = 2;
  const kmono::KMonotoneModel truth(k, kmono::MixingMeasure({{1.0, 0.4}, {3.0, 0.6}}));
  const kmono::Sample sample = kmono::sample_from(truth, 200, 42);

  const kmono::SolveResult fit = kmono::solve_mle(sample, k);
  std::cout << "converged: " << std::boolalpha << fit.converged << " after " << fit.outer_iterations
            << " iterations\n";
  std::cout << "log-likelihood: " << fit.log_likelihood << "\n";
  for (const auto& a : fit.model.mixing().atoms()) std::cout << "  atom " << a.location << "  weight " << a.weight << "\n";

  const auto& report = *fit.certificate.report;
  std::cout << "p_min = " << fit.certificate.p_min << ", sup D = " << fit.certificate.gradient_sup << "\n";
  std::cout << "conditions hold: " << report.all_ok() << "\n";
}
