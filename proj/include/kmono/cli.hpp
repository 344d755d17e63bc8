#pragma once

// The fit / simulate / certify commands behind the kmono executable. Each
// returns the process exit code: 0 certified, 1 input error, 2 not converged
// or not optimal.

#include "kmono/geometry.hpp"
#include "kmono/io.hpp"
#include "kmono/kernel.hpp"
#include "kmono/solver.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

namespace kmono::cli {

enum exit_code : int { certified = 0, input_failure = 1, not_optimal = 2 };

enum class log_level { error = 0, warn = 1, info = 2, debug = 3 };

//! Reads KMONO_LOG (error|warn|info|debug or 0-3). Unset or unknown: warn.
inline log_level log_level_from_env() {
  const char* env = std::getenv("KMONO_LOG");
  if (!env) return log_level::warn;
  const std::string v(env);
  if (v == "error" || v == "0" || v == "quiet") return log_level::error;
  if (v == "info" || v == "2") return log_level::info;
  if (v == "debug" || v == "3" || v == "trace") return log_level::debug;
  return log_level::warn;
}

class Logger {
public:
  explicit Logger(std::ostream& out, log_level level = log_level_from_env()) : out_(out), level_(level) {}

  template <typename... Args>
  void log(log_level at, const Args&... args) const {
    if (static_cast<int>(at) > static_cast<int>(level_)) return;
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    out_ << "kmono [" << names[static_cast<int>(at)] << "] ";
    (out_ << ... << args);
    out_ << '\n';
  }
  template <typename... Args> void error(const Args&... a) const { log(log_level::error, a...); }
  template <typename... Args> void warn(const Args&... a) const { log(log_level::warn, a...); }
  template <typename... Args> void info(const Args&... a) const { log(log_level::info, a...); }
  template <typename... Args> void debug(const Args&... a) const { log(log_level::debug, a...); }

private:
  std::ostream& out_;
  log_level level_;
};

struct FitRequest {
  std::string input;
  std::optional<std::size_t> column; // CSV column (0-based)
  int k = 2;
  SolverConfig config;
  std::string output;
  std::optional<GridSpec> grid;
  bool allow_ties = false;
};

struct SimulateRequest {
  int k = 2;
  std::string atoms; // "Y1:w1,Y2:w2"
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string output;
};

struct CertifyRequest {
  std::string input;
  std::optional<std::size_t> column;
  std::string candidate;
  int k = 2;
  double tol = 1e-8;
  bool allow_ties = false;
  std::string output; // empty: stdout
};

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw input_error("cannot open output file '" + path + "'");
  out << text;
  if (!out) throw input_error("failed writing output file '" + path + "'");
}

} // namespace detail

//! Fits the MLE and writes the result document. The document is written
//! even when the solver does not converge.
inline int cmd_fit(const FitRequest& req, std::ostream& log_stream = std::cerr) {
  const Logger log(log_stream);
  try {
    check_order(req.k);
    req.config.validate();
    if (req.output.empty()) throw input_error("fit: --output is required");
    const Sample sample = read_sample_file(req.input, req.column, req.allow_ties ? ties::allow : ties::reject);
    log.info("fit: n = ", sample.size(), ", k = ", req.k);

    const SolveResult fit = solve_mle(sample, req.k, req.config);
    log.info("fit: ", fit.outer_iterations, " outer iterations, ", fit.model.mixing().size(), " atoms, sup D = ",
             fit.final_gradient_sup);

    ResultDocument doc = make_document(fit.model, sample);
    doc.certificate = to_document(fit.certificate);
    doc.solver = SolverDocument{fit.outer_iterations, fit.converged};
    if (req.grid) doc.density_grid = density_grid(fit.model, *req.grid);
    const bool ok = fit.converged && fit.certificate.optimal;
    doc.status = ok ? "certified" : "not_converged";
    detail::write_text(req.output, serialize(doc));
    if (!ok) {
      log.warn("fit: solver did not reach a certified optimum (sup D = ", fit.final_gradient_sup, ")");
      return not_optimal;
    }
    return certified;
  } catch (const std::invalid_argument& e) {
    log.error(req.input, ": ", e.what());
    return input_failure;
  }
}

//! Draws n observations from the model and writes them sorted, one per line.
inline int cmd_simulate(const SimulateRequest& req, std::ostream& log_stream = std::cerr) {
  const Logger log(log_stream);
  try {
    check_order(req.k);
    if (req.n == 0) throw input_error("simulate: --n must be positive");
    if (req.output.empty()) throw input_error("simulate: --output is required");
    const KMonotoneModel model(req.k, MixingMeasure(parse_atom_list(req.atoms), 1e-9));
    const Sample sample = sample_from(model, req.n, req.seed);
    std::ostringstream text;
    text << std::setprecision(17);
    for (double x : sample.values()) text << x << '\n';
    detail::write_text(req.output, text.str());
    log.info("simulate: wrote ", sample.size(), " values to ", req.output);
    return certified;
  } catch (const std::invalid_argument& e) {
    log.error("simulate: ", e.what());
    return input_failure;
  }
}

//! Certifies a supplied mixing measure against the data without solving.
inline int cmd_certify(const CertifyRequest& req, std::ostream& out = std::cout, std::ostream& log_stream = std::cerr) {
  const Logger log(log_stream);
  try {
    check_order(req.k);
    if (!(req.tol > 0)) throw input_error("certify: --tol must be positive");
    const Sample sample = read_sample_file(req.input, req.column, req.allow_ties ? ties::allow : ties::reject);
    const KMonotoneModel model(req.k, MixingMeasure(read_candidate_atoms(req.candidate), 1e-9));

    ResultDocument doc = make_document(model, sample);
    int code = certified;
    try {
      const Certificate cert = certify(model, sample, req.tol);
      doc.certificate = to_document(cert);
      doc.status = cert.optimal ? "certified" : "not_optimal";
      if (!cert.optimal) {
        log.warn("certify: candidate is not optimal (p_min = ", cert.p_min, ", sup D = ", cert.gradient_sup, ")");
        code = not_optimal;
      }
    } catch (const not_certifiable_error& e) {
      log.warn("certify: ", e.what());
      doc.status = "not_certifiable";
      code = not_optimal;
    }
    if (req.output.empty()) {
      out << serialize(doc);
    } else {
      detail::write_text(req.output, serialize(doc));
    }
    return code;
  } catch (const std::invalid_argument& e) {
    log.error("certify: ", e.what());
    return input_failure;
  }
}

} // namespace kmono::cli
