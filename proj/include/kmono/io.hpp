#pragma once

// File formats: plain-text samples (one value per line, or one column of a
// CSV file), the "Y1:w1,Y2:w2" atom list, and the JSON result document.

#include "kmono/geometry.hpp"
#include "kmono/kernel.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace kmono {

//! Malformed input file or argument. The message names the offending line.
class input_error : public invalid_argument {
public:
  using invalid_argument::invalid_argument;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

} // namespace detail

//! Reads observations from a text stream. Blank lines and lines starting
//! with '#' are skipped. With `column` set, each line is split on commas and
//! that (0-based) field is used.
inline Sample read_sample(std::istream& in, std::optional<std::size_t> column = std::nullopt,
                          ties policy = ties::reject) {
  std::vector<std::pair<double, std::size_t>> values; // value, line number
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::string_view field = body;
    if (column) {
      const auto fields = detail::split(body, ',');
      if (*column >= fields.size())
        throw input_error("line " + std::to_string(line_no) + ": no column " + std::to_string(*column));
      field = fields[*column];
    }
    const auto value = detail::parse_double(field);
    if (!value || !std::isfinite(*value))
      throw input_error("line " + std::to_string(line_no) + ": not a number: '" + std::string(detail::trim(field)) + "'");
    if (!(*value > 0))
      throw input_error("line " + std::to_string(line_no) + ": observation must be positive, got " +
                        std::string(detail::trim(field)));
    values.emplace_back(*value, line_no);
  }
  if (values.empty()) throw input_error("input contains no observations");

  std::vector<std::pair<double, std::size_t>> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  if (policy == ties::reject) {
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i].first == sorted[i - 1].first) {
        const auto [a, b] = std::minmax(sorted[i].second, sorted[i - 1].second);
        throw tied_sample_error("line " + std::to_string(b) + ": value ties with line " + std::to_string(a) +
                                " (use --allow-ties to fit anyway)");
      }
    }
  }
  std::vector<double> raw;
  raw.reserve(values.size());
  for (const auto& [v, l] : values) raw.push_back(v);
  return Sample(std::move(raw), policy);
}

inline Sample read_sample_file(const std::string& path, std::optional<std::size_t> column = std::nullopt,
                               ties policy = ties::reject) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open input file '" + path + "'");
  return read_sample(in, column, policy);
}

//! "Y1:w1,Y2:w2,..." -> atoms (unvalidated).
inline std::vector<Atom> parse_atom_list(std::string_view spec) {
  std::vector<Atom> atoms;
  for (std::string_view item : detail::split(spec, ',')) {
    item = detail::trim(item);
    if (item.empty()) continue;
    const auto parts = detail::split(item, ':');
    if (parts.size() != 2) throw input_error("atom '" + std::string(item) + "' is not of the form location:weight");
    const auto loc = detail::parse_double(parts[0]);
    const auto w = detail::parse_double(parts[1]);
    if (!loc || !w) throw input_error("atom '" + std::string(item) + "' has a non-numeric field");
    atoms.push_back({*loc, *w});
  }
  if (atoms.empty()) throw input_error("atom list is empty");
  return atoms;
}

struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t count = 2;
};

//! "LO:HI:COUNT"
inline GridSpec parse_grid_spec(std::string_view spec) {
  const auto parts = detail::split(spec, ':');
  if (parts.size() != 3) throw input_error("grid must be LO:HI:COUNT");
  const auto lo = detail::parse_double(parts[0]);
  const auto hi = detail::parse_double(parts[1]);
  const auto count = detail::parse_double(parts[2]);
  if (!lo || !hi || !count) throw input_error("grid fields must be numeric");
  if (!(*lo >= 0) || !(*hi > *lo)) throw input_error("grid needs 0 <= LO < HI");
  if (*count < 2 || std::floor(*count) != *count) throw input_error("grid COUNT must be an integer >= 2");
  return {*lo, *hi, static_cast<std::size_t>(*count)};
}

// ---------------------------------------------------------------------------
// Result document

struct SampleSummary {
  std::size_t n = 0;
  double min = 0.0;
  double max = 0.0;
  friend bool operator==(const SampleSummary&, const SampleSummary&) = default;
};

struct ConditionsDocument {
  bool support_size_ok = false;
  bool location_bounds_ok = false;
  bool tail_ok = false;
  //! 1-based order-statistic indices, null when no interlacing subset exists.
  std::optional<std::vector<std::size_t>> interlacing_indices;
  bool determinant_ok = false;
  std::optional<double> determinant_value;
  std::optional<double> determinant_log_abs;
  friend bool operator==(const ConditionsDocument&, const ConditionsDocument&) = default;
};

struct CertificateDocument {
  bool optimal = false;
  double tolerance = 0.0;
  double scale = 0.0;
  double p_min = 0.0;
  double p_argmin = 0.0;
  double gradient_sup = 0.0;
  double gradient_argmax = 0.0;
  std::vector<double> atom_p_values;
  std::optional<ConditionsDocument> conditions;
  friend bool operator==(const CertificateDocument&, const CertificateDocument&) = default;
};

struct SolverDocument {
  int iterations = 0;
  bool converged = false;
  friend bool operator==(const SolverDocument&, const SolverDocument&) = default;
};

struct GridPoint {
  double x = 0.0;
  double f = 0.0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

struct ResultDocument {
  //! "certified", "not_optimal", "not_converged" or "not_certifiable".
  std::string status;
  int k = 2;
  SampleSummary sample;
  std::vector<Atom> atoms;
  std::optional<double> log_likelihood; // null when -inf
  std::optional<CertificateDocument> certificate;
  std::optional<SolverDocument> solver;
  std::optional<std::vector<GridPoint>> density_grid;
  friend bool operator==(const ResultDocument&, const ResultDocument&) = default;
};

inline CertificateDocument to_document(const Certificate& cert) {
  CertificateDocument doc;
  doc.optimal = cert.optimal;
  doc.tolerance = cert.tolerance;
  doc.scale = cert.scale;
  doc.p_min = cert.p_min;
  doc.p_argmin = cert.p_argmin;
  doc.gradient_sup = cert.gradient_sup;
  doc.gradient_argmax = cert.gradient_argmax;
  doc.atom_p_values = cert.atom_p_values;
  if (cert.report) {
    const ConditionReport& r = *cert.report;
    ConditionsDocument c;
    c.support_size_ok = r.support_size_ok;
    c.location_bounds_ok = r.location_bounds_ok;
    c.tail_ok = r.tail_ok;
    if (r.interlacing) {
      std::vector<std::size_t> one_based;
      for (std::size_t i : *r.interlacing) one_based.push_back(i + 1);
      c.interlacing_indices = std::move(one_based);
    }
    c.determinant_ok = r.determinant_ok;
    if (r.determinant_value && std::isfinite(*r.determinant_value)) c.determinant_value = r.determinant_value;
    if (r.determinant_log_abs && std::isfinite(*r.determinant_log_abs)) c.determinant_log_abs = r.determinant_log_abs;
    doc.conditions = std::move(c);
  }
  return doc;
}

inline ResultDocument make_document(const KMonotoneModel& model, const Sample& sample) {
  ResultDocument doc;
  doc.k = model.k();
  doc.sample = {sample.size(), sample.min(), sample.max()};
  doc.atoms.assign(model.mixing().atoms().begin(), model.mixing().atoms().end());
  const double ll = log_likelihood(model, sample);
  if (std::isfinite(ll)) doc.log_likelihood = ll;
  return doc;
}

inline std::vector<GridPoint> density_grid(const KMonotoneModel& model, const GridSpec& grid) {
  std::vector<GridPoint> out;
  out.reserve(grid.count);
  for (std::size_t i = 0; i < grid.count; ++i) {
    const double x = i + 1 == grid.count ? grid.hi : grid.lo + (grid.hi - grid.lo) * i / (grid.count - 1);
    out.push_back({x, density_eval(model, x)});
  }
  return out;
}

// nlohmann/json adapters. Doubles are written in shortest round-trip form,
// so parse(serialize(doc)) reproduces every value bit for bit.

inline void to_json(nlohmann::json& j, const Atom& a) { j = {{"location", a.location}, {"weight", a.weight}}; }
inline void from_json(const nlohmann::json& j, Atom& a) {
  j.at("location").get_to(a.location);
  j.at("weight").get_to(a.weight);
}

inline void to_json(nlohmann::json& j, const GridPoint& g) { j = {{"x", g.x}, {"f", g.f}}; }
inline void from_json(const nlohmann::json& j, GridPoint& g) {
  j.at("x").get_to(g.x);
  j.at("f").get_to(g.f);
}

namespace detail {

template <typename T>
void put_optional(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v; else j[key] = nullptr;
}

template <typename T>
void get_optional(const nlohmann::json& j, const char* key, std::optional<T>& v) {
  if (!j.contains(key) || j.at(key).is_null()) {
    v.reset();
  } else {
    v = j.at(key).get<T>();
  }
}

} // namespace detail

inline void to_json(nlohmann::json& j, const ConditionsDocument& c) {
  j = {{"support_size_ok", c.support_size_ok},
       {"location_bounds_ok", c.location_bounds_ok},
       {"tail_ok", c.tail_ok},
       {"determinant_ok", c.determinant_ok}};
  detail::put_optional(j, "interlacing_indices", c.interlacing_indices);
  detail::put_optional(j, "determinant_value", c.determinant_value);
  detail::put_optional(j, "determinant_log_abs", c.determinant_log_abs);
}
inline void from_json(const nlohmann::json& j, ConditionsDocument& c) {
  j.at("support_size_ok").get_to(c.support_size_ok);
  j.at("location_bounds_ok").get_to(c.location_bounds_ok);
  j.at("tail_ok").get_to(c.tail_ok);
  j.at("determinant_ok").get_to(c.determinant_ok);
  detail::get_optional(j, "interlacing_indices", c.interlacing_indices);
  detail::get_optional(j, "determinant_value", c.determinant_value);
  detail::get_optional(j, "determinant_log_abs", c.determinant_log_abs);
}

inline void to_json(nlohmann::json& j, const CertificateDocument& c) {
  j = {{"optimal", c.optimal},         {"tolerance", c.tolerance},
       {"scale", c.scale},             {"p_min", c.p_min},
       {"p_argmin", c.p_argmin},       {"gradient_sup", c.gradient_sup},
       {"gradient_argmax", c.gradient_argmax}, {"atom_p_values", c.atom_p_values}};
  detail::put_optional(j, "conditions", c.conditions);
}
inline void from_json(const nlohmann::json& j, CertificateDocument& c) {
  j.at("optimal").get_to(c.optimal);
  j.at("tolerance").get_to(c.tolerance);
  j.at("scale").get_to(c.scale);
  j.at("p_min").get_to(c.p_min);
  j.at("p_argmin").get_to(c.p_argmin);
  j.at("gradient_sup").get_to(c.gradient_sup);
  j.at("gradient_argmax").get_to(c.gradient_argmax);
  j.at("atom_p_values").get_to(c.atom_p_values);
  detail::get_optional(j, "conditions", c.conditions);
}

inline void to_json(nlohmann::json& j, const SolverDocument& s) {
  j = {{"iterations", s.iterations}, {"converged", s.converged}};
}
inline void from_json(const nlohmann::json& j, SolverDocument& s) {
  j.at("iterations").get_to(s.iterations);
  j.at("converged").get_to(s.converged);
}

inline void to_json(nlohmann::json& j, const ResultDocument& d) {
  j = {{"status", d.status},
       {"k", d.k},
       {"sample", {{"n", d.sample.n}, {"min", d.sample.min}, {"max", d.sample.max}}},
       {"atoms", d.atoms}};
  detail::put_optional(j, "log_likelihood", d.log_likelihood);
  detail::put_optional(j, "certificate", d.certificate);
  detail::put_optional(j, "solver", d.solver);
  if (d.density_grid) j["density_grid"] = *d.density_grid;
}
inline void from_json(const nlohmann::json& j, ResultDocument& d) {
  d.status = j.value("status", std::string());
  j.at("k").get_to(d.k);
  const auto& s = j.at("sample");
  s.at("n").get_to(d.sample.n);
  s.at("min").get_to(d.sample.min);
  s.at("max").get_to(d.sample.max);
  j.at("atoms").get_to(d.atoms);
  detail::get_optional(j, "log_likelihood", d.log_likelihood);
  detail::get_optional(j, "certificate", d.certificate);
  detail::get_optional(j, "solver", d.solver);
  detail::get_optional(j, "density_grid", d.density_grid);
}

inline std::string serialize(const ResultDocument& doc) { return nlohmann::json(doc).dump(2) + "\n"; }

inline ResultDocument parse_document(std::string_view text) {
  try {
    return nlohmann::json::parse(text).get<ResultDocument>();
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("malformed result document: ") + e.what());
  }
}

//! Atoms of a candidate measure file: any JSON object with an "atoms" array
//! of {location, weight} (a result document qualifies).
inline std::vector<Atom> read_candidate_atoms(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open candidate file '" + path + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    return j.at("atoms").get<std::vector<Atom>>();
  } catch (const nlohmann::json::exception& e) {
    throw input_error("candidate file '" + path + "': " + e.what());
  }
}

} // namespace kmono
