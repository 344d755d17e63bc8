// kmono: fit, simulate and certify k-monotone density MLEs.

#include "kmono/cli.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"k-monotone density maximum likelihood"};
  app.require_subcommand(1);

  kmono::cli::FitRequest fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit the MLE to a sample file");
  fit_cmd->add_option("--input", fit.input, "sample file (one value per line)")->required();
  fit_cmd->add_option("--column", fit.column, "0-based CSV column to read");
  fit_cmd->add_option("--k", fit.k, "monotonicity order k >= 2")->required();
  fit_cmd->add_option("--tol-gradient", fit.config.tol_gradient, "certificate tolerance");
  fit_cmd->add_option("--max-iters", fit.config.max_outer_iters, "outer iteration cap");
  fit_cmd->add_option("--seed", fit.config.seed, "seed for the candidate grid jitter");
  std::string grid;
  fit_cmd->add_option("--grid", grid, "density grid LO:HI:COUNT");
  fit_cmd->add_flag("--allow-ties", fit.allow_ties, "accept repeated observations");
  fit_cmd->add_option("--output", fit.output, "result JSON path")->required();

  kmono::cli::SimulateRequest sim;
  auto* sim_cmd = app.add_subcommand("simulate", "draw a sample from a mixture");
  sim_cmd->add_option("--k", sim.k, "monotonicity order k >= 2")->required();
  sim_cmd->add_option("--atoms", sim.atoms, "mixing measure \"Y1:w1,Y2:w2\"")->required();
  sim_cmd->add_option("--n", sim.n, "sample size")->required();
  sim_cmd->add_option("--seed", sim.seed, "random seed")->required();
  sim_cmd->add_option("--output", sim.output, "output file")->required();

  kmono::cli::CertifyRequest cert;
  auto* cert_cmd = app.add_subcommand("certify", "check a candidate measure for optimality");
  cert_cmd->add_option("--input", cert.input, "sample file")->required();
  cert_cmd->add_option("--column", cert.column, "0-based CSV column to read");
  cert_cmd->add_option("--candidate", cert.candidate, "JSON file with an \"atoms\" array")->required();
  cert_cmd->add_option("--k", cert.k, "monotonicity order k >= 2")->required();
  cert_cmd->add_option("--tol", cert.tol, "certificate tolerance");
  cert_cmd->add_flag("--allow-ties", cert.allow_ties, "accept repeated observations");
  cert_cmd->add_option("--output", cert.output, "write the document here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kmono::cli::input_failure;
  }

  try {
    if (*fit_cmd) {
      if (!grid.empty()) fit.grid = kmono::parse_grid_spec(grid);
      return kmono::cli::cmd_fit(fit);
    }
    if (*sim_cmd) return kmono::cli::cmd_simulate(sim);
    if (*cert_cmd) return kmono::cli::cmd_certify(cert);
  } catch (const std::invalid_argument& e) {
    std::cerr << "kmono [error] " << e.what() << '\n';
    return kmono::cli::input_failure;
  } catch (const std::exception& e) {
    std::cerr << "kmono [error] " << e.what() << '\n';
    return kmono::cli::not_optimal;
  }
  return kmono::cli::input_failure;
}
