#pragma once

// Maximum likelihood estimation of the mixing measure by support reduction:
// optimize the weights on a working set of atoms, add atoms where the
// directional derivative D(y) is positive, drop atoms whose weight vanishes,
// and stop once the support-plane certificate holds. A joint Newton step on
// (locations, weights) pins the atoms to the local maxima of D so the final
// iterate is accurate to rounding rather than to the grid of candidates.

#include "kmono/geometry.hpp"
#include "kmono/kernel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace kmono {

struct SolverConfig {
  double tol_gradient = 1e-8;   // certificate / termination tolerance on D
  double tol_weight = 1e-10;    // atoms lighter than this are pruned
  double tol_merge = 1e-7;      // relative distance below which atoms merge
  int max_outer_iters = 500;
  int max_inner_iters = 10000;
  int grid_points_per_interval = 64;
  std::uint64_t seed = 0;
  //! Starting atoms; empty means a single atom at 2 X_(n).
  std::vector<double> initial_support;

  void validate() const {
    if (!(tol_gradient > 0) || !(tol_weight > 0) || !(tol_merge > 0))
      throw invalid_argument("solver tolerances must be positive");
    if (max_outer_iters < 1 || max_inner_iters < 1 || grid_points_per_interval < 1)
      throw invalid_argument("solver iteration caps must be >= 1");
  }
};

struct SolveResult {
  KMonotoneModel model;
  Certificate certificate;
  int outer_iterations = 0;
  bool converged = false;
  double final_gradient_sup = 0.0;
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_trace; // one entry per outer iteration
};

struct Candidate {
  double location;
  double gradient; // D(location)
};

namespace detail {

using real = long double;
using Matrix = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<real, Eigen::Dynamic, 1>;

constexpr double tail_window_factor = 4.0;
constexpr std::size_t max_new_atoms = 3;

inline Matrix kernel_matrix(const Sample& sample, int k, std::span<const real> locations) {
  Matrix K(sample.size(), locations.size());
  for (std::size_t j = 0; j < locations.size(); ++j)
    for (std::size_t i = 0; i < sample.size(); ++i) K(i, j) = kernel_eval<real>(k, locations[j], real(sample[i]));
  return K;
}

inline real weights_objective(const Matrix& K, const Vector& w) {
  const Vector f = K * w;
  real total = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (!(f[i] > 0)) return -std::numeric_limits<real>::infinity();
    total += std::log(f[i]);
  }
  return total;
}

//! Target for max_j |G_j / n - 1| on the active set.
inline real inner_tolerance(const Sample& sample, int k, std::span<const real> locations, const SolverConfig& config) {
  real shrink = 1;
  for (real y : locations) shrink = std::min(shrink, ipow(real(sample.max()) / y, k));
  const real target = std::min<real>(config.tol_weight, real(0.1) * real(config.tol_gradient) * shrink);
  return std::max<real>(target, real(1e-17));
}

//! Maximizes sum_i log (K w)_i over the simplex. Newton steps on the active
//! set (support-reduction style: an atom whose weight is driven to zero
//! leaves the active set) with multiplicative EM steps as the monotone
//! fallback. The objective never decreases.
inline Vector solve_weights(const Matrix& K, Vector w, real tol, int max_iters) {
  const Eigen::Index n = K.rows();
  const Eigen::Index m = K.cols();
  const real nn = static_cast<real>(n);

  bool tail_column = false;
  for (Eigen::Index j = 0; j < m; ++j) tail_column = tail_column || K(n - 1, j) > 0;
  if (!tail_column) throw infeasible_support_error("no support location exceeds the largest observation");

  if (w.size() != m || !(w.minCoeff() >= 0) || !(w.sum() > 0)) w = Vector::Constant(m, real(1) / m);
  w /= w.sum();
  if (!std::isfinite(weights_objective(K, w))) {
    w = real(0.5) * w + Vector::Constant(m, real(0.5) / m);
  }
  std::vector<bool> active(m);
  for (Eigen::Index j = 0; j < m; ++j) active[j] = w[j] > 0;

  real objective = weights_objective(K, w);
  for (int it = 0; it < max_iters; ++it) {
    const Vector f = K * w;
    const Vector inv_f = f.cwiseInverse();
    const Vector G = K.transpose() * inv_f;

    std::vector<Eigen::Index> idx;
    real residual = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (!active[j]) continue;
      idx.push_back(j);
      residual = std::max(residual, std::abs(G[j] / nn - 1));
    }
    if (residual <= tol) break;

    // Newton direction restricted to the active set with sum(d) = 0.
    const auto a = static_cast<Eigen::Index>(idx.size());
    Matrix KA(n, a);
    for (Eigen::Index c = 0; c < a; ++c) KA.col(c) = K.col(idx[c]);
    const Matrix KW = inv_f.asDiagonal() * KA;
    Matrix M = KW.transpose() * KW;
    const real ridge = real(1e-13) * std::max<real>(M.diagonal().maxCoeff(), real(1e-300));
    M.diagonal().array() += ridge;
    Vector GA(a);
    for (Eigen::Index c = 0; c < a; ++c) GA[c] = G[idx[c]];
    const Eigen::LDLT<Matrix> ldlt(M);
    const Vector x = ldlt.solve(GA);
    const Vector y = ldlt.solve(Vector::Ones(a));
    const real mu = x.sum() / y.sum();
    Vector d = x - mu * y;

    bool improved = false;
    if (d.allFinite() && ldlt.info() == Eigen::Success) {
      real t_max = 1;
      Eigen::Index blocking = -1;
      for (Eigen::Index c = 0; c < a; ++c) {
        if (d[c] < 0) {
          const real t = w[idx[c]] / -d[c];
          if (t < t_max) {
            t_max = t;
            blocking = c;
          }
        }
      }
      const bool drops_atom = blocking >= 0;
      real t = t_max;
      for (int ls = 0; ls < 60; ++ls, t /= 2) {
        Vector trial = w;
        for (Eigen::Index c = 0; c < a; ++c) trial[idx[c]] = std::max<real>(0, w[idx[c]] + t * d[c]);
        const bool at_bound = drops_atom && ls == 0;
        if (at_bound) trial[idx[blocking]] = 0;
        trial /= trial.sum();
        const real obj = weights_objective(K, trial);
        if (obj > objective || (at_bound && obj == objective)) {
          w = trial;
          objective = obj;
          improved = true;
          if (at_bound) active[idx[blocking]] = false;
          break;
        }
      }
    }
    if (improved) continue;

    // Multiplicative update, over-relaxed when that still ascends.
    Vector em = w;
    for (Eigen::Index j = 0; j < m; ++j) em[j] = w[j] * G[j] / nn;
    em /= em.sum();
    Vector over = w;
    for (Eigen::Index j = 0; j < m; ++j) over[j] = w[j] > 0 ? w[j] * std::pow(G[j] / nn, real(1.5)) : 0;
    over /= over.sum();
    const real obj_over = weights_objective(K, over);
    const real obj_em = weights_objective(K, em);
    if (obj_over > objective && obj_over >= obj_em) {
      w = over;
      objective = obj_over;
    } else if (obj_em > objective) {
      w = em;
      objective = obj_em;
    } else {
      break; // stagnated at rounding level
    }
  }
  return w;
}

//! Moves mass from the current fit toward a single new atom (column j) by
//! exact line search on t in [0, 1].
inline Vector vertex_step(const Matrix& K, const Vector& w, Eigen::Index j) {
  const Vector f = K * w;
  const Vector kj = K.col(j);
  auto slope = [&](real t) {
    real s = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      const real denom = (1 - t) * f[i] + t * kj[i];
      if (!(denom > 0)) return -std::numeric_limits<real>::infinity();
      s += (kj[i] - f[i]) / denom;
    }
    return s;
  };
  real t;
  if (!(slope(0) > 0)) return w;
  if (slope(1) >= 0) {
    t = 1;
  } else {
    real lo = 0, hi = 1;
    for (int it = 0; it < 100; ++it) {
      const real mid = (lo + hi) / 2;
      if (slope(mid) > 0) lo = mid; else hi = mid;
    }
    t = lo;
  }
  Vector out = (1 - t) * w;
  out[j] += t;
  return out;
}

struct WorkingSet {
  std::vector<real> locations;
  std::vector<real> weights;
};

inline std::vector<real> fitted(const Sample& sample, int k, const WorkingSet& ws) {
  std::vector<real> b(sample.size(), 0);
  for (std::size_t j = 0; j < ws.locations.size(); ++j)
    for (std::size_t i = 0; i < sample.size(); ++i)
      b[i] += ws.weights[j] * kernel_eval<real>(k, ws.locations[j], real(sample[i]));
  return b;
}

inline real log_lik(const std::vector<real>& b) {
  real total = 0;
  for (real x : b) {
    if (!(x > 0)) return -std::numeric_limits<real>::infinity();
    total += std::log(x);
  }
  return total;
}

inline real gradient_threshold(real tol, real x_max, real y, int k) {
  return tol * std::min<real>(1, ipow(x_max / y, k));
}

//! Points where D has a local maximum on (X_(1), inf), from the roots of
//! y p'(y) - k p(y) with a - to + sign change.
inline std::vector<real> d_local_maxima(const BasicPiecewisePolynomial<real>& p, int k) {
  std::vector<real> out;
  for (std::size_t i = 1; i < p.size(); ++i) {
    const real origin = p.knots()[i];
    const bool last = i + 1 == p.size();
    const Polynomial<real> r = stationarity_polynomial(p.piece(i), origin, k);
    if (r.degree() < 1) continue;
    const Polynomial<real> dr = r.derivative();
    const real hi_local = last ? cauchy_root_bound(r) : real(p.knots()[i + 1]) - origin;
    for (real t : approximate_real_roots(r, real(0), hi_local)) {
      if (!(t > 0 && t < hi_local)) continue;
      if (dr(t) > 0) out.push_back(origin + t);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline real stationarity_value(const BasicPiecewisePolynomial<real>& p, int k, real y) {
  const std::size_t i = p.piece_index(static_cast<double>(y));
  const real origin = p.knots()[i];
  return stationarity_polynomial(p.piece(i), origin, k)(y - origin);
}

//! Golden-section maximization of D on [a, c].
template <typename F>
real golden_max(F&& D, real a, real c) {
  const real g = (std::sqrt(real(5)) - 1) / 2;
  real x1 = c - g * (c - a), x2 = a + g * (c - a);
  real f1 = D(x1), f2 = D(x2);
  for (int it = 0; it < 90 && c - a > real(1e-15) * c; ++it) {
    if (f1 < f2) {
      a = x1; x1 = x2; f1 = f2; x2 = a + g * (c - a); f2 = D(x2);
    } else {
      c = x2; x2 = x1; f2 = f1; x1 = c - g * (c - a); f1 = D(x1);
    }
  }
  return f1 > f2 ? x1 : x2;
}

struct SearchResult {
  std::vector<Candidate> candidates; // D above threshold, sorted by D descending
  real sup = -1;                     // best D seen
  real argmax = 0;
};

inline SearchResult search(const std::vector<real>& b, const Sample& sample, int k, const SolverConfig& config,
                           real threshold_scale = 1) {
  const std::span<const real> bs(b);
  const std::vector<real> v = support_plane_coefficients<real>(bs, k);
  const auto p = p_function<real>(v, sample, k);
  const real x_max = sample.max();
  auto D = [&](real y) { return directional_derivative<real>(bs, sample, k, y); };
  // O(k) per point through the spline; exact D is recomputed at the maxima.
  auto D_fast = [&](real y) { return -p(y) / ipow(y, k); };

  std::vector<real> maxima = d_local_maxima(p, k);

  // Grid seeding over each data interval and the tail window.
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> jitter(0.0, 1.0);
  const int G = config.grid_points_per_interval;
  auto scan = [&](real lo, real hi) {
    std::vector<real> ys(G);
    std::vector<real> ds(G);
    const real phase = config.seed == 0 ? real(0.5) : real(jitter(rng));
    for (int g = 0; g < G; ++g) {
      ys[g] = lo + (hi - lo) * (g + phase) / G;
      ds[g] = D_fast(ys[g]);
    }
    std::size_t best = 0;
    for (int g = 0; g < G; ++g) {
      if (ds[g] > ds[best]) best = g;
      const bool left_ok = g == 0 || ds[g] >= ds[g - 1];
      const bool right_ok = g == G - 1 || ds[g] >= ds[g + 1];
      if (left_ok && right_ok) {
        const real a = g == 0 ? lo : ys[g - 1];
        const real c = g == G - 1 ? hi : ys[g + 1];
        maxima.push_back(golden_max(D_fast, a, c));
      }
    }
    return ys[best];
  };
  for (std::size_t i = 0; i + 1 < sample.size(); ++i)
    if (sample[i + 1] > sample[i]) scan(sample[i], sample[i + 1]);
  real window = tail_window_factor * x_max;
  for (int doubling = 0; doubling < 40; ++doubling) {
    const real best = scan(x_max, window);
    if (best < x_max + real(0.9) * (window - x_max)) break;
    window = x_max + 2 * (window - x_max);
  }

  SearchResult out;
  std::sort(maxima.begin(), maxima.end());
  std::vector<Candidate> raw;
  for (real y : maxima) {
    const real d = D(y);
    if (d > out.sup) {
      out.sup = d;
      out.argmax = y;
    }
    if (d > threshold_scale * gradient_threshold(config.tol_gradient, x_max, y, k))
      raw.push_back({static_cast<double>(y), static_cast<double>(d)});
  }
  // Several seeds can land on the same maximum.
  for (const Candidate& c : raw) {
    if (!out.candidates.empty() &&
        std::abs(c.location - out.candidates.back().location) <= 1e-7 * c.location) {
      if (c.gradient > out.candidates.back().gradient) out.candidates.back() = c;
      continue;
    }
    out.candidates.push_back(c);
  }
  std::sort(out.candidates.begin(), out.candidates.end(),
            [](const Candidate& a, const Candidate& c) { return a.gradient > c.gradient; });
  return out;
}

//! Drops light atoms, merges near-coincident ones, renormalizes.
inline WorkingSet prune_merge(WorkingSet ws, const SolverConfig& config) {
  std::vector<std::pair<real, real>> atoms;
  for (std::size_t j = 0; j < ws.locations.size(); ++j)
    if (ws.weights[j] >= config.tol_weight) atoms.emplace_back(ws.locations[j], ws.weights[j]);
  if (atoms.empty()) throw empty_measure_error("every atom was pruned");
  std::sort(atoms.begin(), atoms.end());
  WorkingSet out;
  for (const auto& [y, w] : atoms) {
    if (!out.locations.empty() && y - out.locations.back() <= real(config.tol_merge) * y) {
      real& ly = out.locations.back();
      real& lw = out.weights.back();
      ly = (ly * lw + y * w) / (lw + w);
      lw += w;
      continue;
    }
    out.locations.push_back(y);
    out.weights.push_back(w);
  }
  real total = 0;
  for (real w : out.weights) total += w;
  for (real& w : out.weights) w /= total;
  return out;
}

struct KernelDerivatives {
  real value = 0, dy = 0, dyy = 0;
};

inline KernelDerivatives kernel_derivatives(int k, real y, real x) {
  KernelDerivatives out;
  if (!(x < y)) return out;
  const real u = y - x;
  out.value = kernel_eval<real>(k, y, x);
  const real g = (k - 1) / u - k / y;
  out.dy = out.value * g;
  out.dyy = out.value * (g * g - (k - 1) / (u * u) + k / (y * y));
  return out;
}

//! Newton ascent on Phi(Y, a) = sum_i log f(X_i) - n sum_j a_j, whose
//! maximizer over unnormalized weights has sum(a) = 1. Returns nullopt if
//! no ascent step is possible from the start.
inline std::optional<WorkingSet> joint_newton(const Sample& sample, int k, WorkingSet ws) {
  const std::size_t n = sample.size();
  const std::size_t m = ws.locations.size();
  const real nn = n;
  const real x_max = sample.max();

  auto phi = [&](const WorkingSet& s) -> real {
    for (std::size_t j = 0; j < m; ++j) {
      if (!(s.weights[j] > 0) || !(s.locations[j] > 0)) return -std::numeric_limits<real>::infinity();
      if (j > 0 && !(s.locations[j] > s.locations[j - 1])) return -std::numeric_limits<real>::infinity();
    }
    if (!(s.locations.back() > x_max)) return -std::numeric_limits<real>::infinity();
    real total = log_lik(fitted(sample, k, s));
    for (real w : s.weights) total -= nn * w;
    return total;
  };

  real current = phi(ws);
  if (!std::isfinite(current)) return std::nullopt;
  bool moved = false;
  for (int it = 0; it < 100; ++it) {
    std::vector<std::vector<KernelDerivatives>> kd(m, std::vector<KernelDerivatives>(n));
    Vector f = Vector::Zero(n);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        kd[j][i] = kernel_derivatives(k, ws.locations[j], sample[i]);
        f[i] += ws.weights[j] * kd[j][i].value;
      }
    const Eigen::Index dim = static_cast<Eigen::Index>(2 * m);
    Vector grad = Vector::Zero(dim);
    Matrix H = Matrix::Zero(dim, dim);
    for (std::size_t i = 0; i < n; ++i) {
      const real fi = f[i];
      const real fi2 = fi * fi;
      // d f_i / d theta
      Vector df(dim);
      for (std::size_t j = 0; j < m; ++j) {
        df[j] = kd[j][i].value;
        df[m + j] = ws.weights[j] * kd[j][i].dy;
      }
      grad += df / fi;
      H -= (df * df.transpose()) / fi2;
      for (std::size_t j = 0; j < m; ++j) {
        H(j, m + j) += kd[j][i].dy / fi;
        H(m + j, j) += kd[j][i].dy / fi;
        H(m + j, m + j) += ws.weights[j] * kd[j][i].dyy / fi;
      }
    }
    for (std::size_t j = 0; j < m; ++j) grad[j] -= nn;

    real gnorm = 0;
    for (std::size_t j = 0; j < m; ++j) {
      gnorm = std::max(gnorm, std::abs(grad[j]));
      gnorm = std::max(gnorm, std::abs(grad[m + j]) * ws.locations[j]);
    }
    if (gnorm <= real(1e-16) * nn) break;

    Matrix negH = -H;
    Vector step;
    bool ok = false;
    real lambda = 0;
    const real diag_scale = std::max<real>(negH.diagonal().cwiseAbs().maxCoeff(), real(1e-300));
    for (int attempt = 0; attempt < 12 && !ok; ++attempt) {
      Matrix A = negH;
      A.diagonal().array() += lambda;
      Eigen::LDLT<Matrix> ldlt(A);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0).all()) {
        step = ldlt.solve(grad);
        ok = step.allFinite();
      }
      lambda = lambda == 0 ? real(1e-12) * diag_scale : lambda * 100;
    }
    if (!ok) break;

    bool accepted = false;
    real t = 1;
    for (int ls = 0; ls < 50; ++ls, t /= 2) {
      WorkingSet trial = ws;
      for (std::size_t j = 0; j < m; ++j) {
        trial.weights[j] += t * step[j];
        trial.locations[j] += t * step[m + j];
      }
      const real val = phi(trial);
      if (val > current) {
        ws = std::move(trial);
        current = val;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    moved = true;
  }
  if (!moved) return std::nullopt;
  real total = 0;
  for (real w : ws.weights) total += w;
  for (real& w : ws.weights) w /= total;
  return ws;
}

//! Collapses every atom onto the local maximum of D it ascends to, then
//! refines locations and weights jointly.
inline std::optional<WorkingSet> polish(const Sample& sample, int k, const WorkingSet& ws) {
  const std::vector<real> b = fitted(sample, k, ws);
  for (real x : b)
    if (!(x > 0)) return std::nullopt;
  const std::vector<real> v = support_plane_coefficients<real>(std::span<const real>(b), k);
  const auto p = p_function<real>(v, sample, k);
  const std::vector<real> maxima = d_local_maxima(p, k);

  WorkingSet merged;
  for (std::size_t j = 0; j < ws.locations.size(); ++j) {
    const real y = ws.locations[j];
    real target = y;
    if (!maxima.empty() && y > sample.min()) {
      const real r = stationarity_value(p, k, y); // D' has the sign of -r
      if (r < 0) {
        auto it = std::lower_bound(maxima.begin(), maxima.end(), y);
        if (it != maxima.end()) target = *it;
      } else if (r > 0) {
        auto it = std::upper_bound(maxima.begin(), maxima.end(), y);
        if (it != maxima.begin()) target = *(it - 1);
      }
    }
    if (!merged.locations.empty() && merged.locations.back() == target) {
      merged.weights.back() += ws.weights[j];
    } else {
      merged.locations.push_back(target);
      merged.weights.push_back(ws.weights[j]);
    }
  }
  // Ascent targets are monotone in the starting point, so order holds.
  for (std::size_t j = 1; j < merged.locations.size(); ++j)
    if (!(merged.locations[j] > merged.locations[j - 1])) return std::nullopt;

  if (auto refined = joint_newton(sample, k, merged)) return refined;
  return merged;
}

inline MixingMeasure to_measure(const WorkingSet& ws) {
  std::vector<Atom> atoms;
  double total = 0;
  for (std::size_t j = 0; j < ws.locations.size(); ++j) {
    atoms.push_back({static_cast<double>(ws.locations[j]), static_cast<double>(ws.weights[j])});
    total += atoms.back().weight;
  }
  for (Atom& a : atoms) a.weight /= total;
  return MixingMeasure(std::move(atoms), 1e-9);
}

inline WorkingSet solve_working_weights(const Sample& sample, int k, WorkingSet ws, const SolverConfig& config) {
  const Matrix K = kernel_matrix(sample, k, ws.locations);
  Vector w(static_cast<Eigen::Index>(ws.weights.size()));
  for (std::size_t j = 0; j < ws.weights.size(); ++j) w[j] = ws.weights[j];
  w = solve_weights(K, w, inner_tolerance(sample, k, ws.locations, config), config.max_inner_iters);
  for (std::size_t j = 0; j < ws.weights.size(); ++j) ws.weights[j] = w[j];
  return ws;
}

} // namespace detail

//! Optimal weights for a fixed support (one weight per location, on the
//! simplex). Throws infeasible_support_error if no location exceeds X_(n).
inline std::vector<double> inner_weight_solve(std::span<const double> support, const Sample& sample, int k,
                                              const SolverConfig& config = {}) {
  check_order(k);
  config.validate();
  if (support.empty()) throw invalid_argument("inner_weight_solve: support must be nonempty");
  std::vector<detail::real> locs(support.begin(), support.end());
  for (auto y : locs)
    if (!(y > 0)) throw invalid_argument("inner_weight_solve: locations must be positive");
  const detail::Matrix K = detail::kernel_matrix(sample, k, locs);
  const detail::Vector w = detail::solve_weights(K, detail::Vector(), detail::inner_tolerance(sample, k, locs, config),
                                                 config.max_inner_iters);
  std::vector<double> out(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) out[j] = static_cast<double>(w[j]);
  return out;
}

//! Local maximizers of D(y) exceeding tol_gradient * min(1, (X_(n)/y)^k),
//! sorted by D descending. The threshold is the certificate tolerance
//! expressed for D; an empty list means the certificate holds.
inline std::vector<Candidate> candidate_search(std::span<const double> b, const Sample& sample, int k,
                                               const SolverConfig& config = {}) {
  check_order(k);
  config.validate();
  std::vector<detail::real> bl(b.begin(), b.end());
  for (auto x : bl)
    if (!(x > 0)) throw invalid_argument("candidate_search: fitted values must be positive");
  return detail::search(bl, sample, k, config).candidates;
}

//! Removes atoms lighter than tol_weight, merges atoms within tol_merge
//! relative distance (weight-averaged location), renormalizes.
inline MixingMeasure prune_and_merge(const MixingMeasure& measure, const SolverConfig& config = {}) {
  detail::WorkingSet ws;
  for (const Atom& a : measure.atoms()) {
    ws.locations.push_back(a.location);
    ws.weights.push_back(a.weight);
  }
  return detail::to_measure(detail::prune_merge(std::move(ws), config));
}

inline SolveResult solve_mle(const Sample& sample, int k, const SolverConfig& config = {}) {
  check_order(k);
  config.validate();
  using detail::real;
  const real x_max = sample.max();

  detail::WorkingSet ws;
  for (double y : config.initial_support)
    if (y > 0) ws.locations.push_back(y);
  std::sort(ws.locations.begin(), ws.locations.end());
  ws.locations.erase(std::unique(ws.locations.begin(), ws.locations.end()), ws.locations.end());
  if (ws.locations.empty() || !(ws.locations.back() > x_max)) ws.locations.push_back(2 * x_max);
  ws.weights.assign(ws.locations.size(), real(1) / ws.locations.size());
  ws = detail::prune_merge(detail::solve_working_weights(sample, k, std::move(ws), config), config);

  std::vector<double> trace;
  real loglik = detail::log_lik(detail::fitted(sample, k, ws));
  trace.push_back(static_cast<double>(loglik));

  real threshold_scale = 1;
  bool search_clean = false;
  int iter = 0;
  real sup = 0;
  std::optional<Certificate> cert;
  for (iter = 1; iter <= config.max_outer_iters; ++iter) {
    if (auto polished = detail::polish(sample, k, ws)) {
      try {
        auto candidate = detail::prune_merge(detail::solve_working_weights(sample, k, *polished, config), config);
        const real ll = detail::log_lik(detail::fitted(sample, k, candidate));
        if (ll > loglik) {
          ws = std::move(candidate);
          loglik = ll;
        }
      } catch (const infeasible_support_error&) {
      }
    }

    const std::vector<real> b = detail::fitted(sample, k, ws);
    const auto found = detail::search(b, sample, k, config, threshold_scale);
    sup = found.sup;
    if (found.candidates.empty()) {
      cert = certify(KMonotoneModel(k, detail::to_measure(ws)), sample, config.tol_gradient);
      if (cert->optimal) {
        search_clean = true;
        trace.push_back(static_cast<double>(loglik));
        break;
      }
      // Disagreement at rounding level: search harder.
      threshold_scale *= real(0.01);
      cert.reset();
      trace.push_back(static_cast<double>(loglik));
      continue;
    }

    // Bring in the strongest violators, one exact line search each.
    for (std::size_t c = 0; c < std::min(detail::max_new_atoms, found.candidates.size()); ++c) {
      const real y = found.candidates[c].location;
      auto pos = std::lower_bound(ws.locations.begin(), ws.locations.end(), y);
      if (pos != ws.locations.end() && *pos == y) continue;
      const auto at = pos - ws.locations.begin();
      ws.locations.insert(pos, y);
      ws.weights.insert(ws.weights.begin() + at, real(0));
      const detail::Matrix K = detail::kernel_matrix(sample, k, ws.locations);
      detail::Vector w(static_cast<Eigen::Index>(ws.weights.size()));
      for (std::size_t j = 0; j < ws.weights.size(); ++j) w[j] = ws.weights[j];
      w = detail::vertex_step(K, w, at);
      for (std::size_t j = 0; j < ws.weights.size(); ++j) ws.weights[j] = w[j];
    }
    ws = detail::solve_working_weights(sample, k, std::move(ws), config);
    const std::size_t before = ws.locations.size();
    ws = detail::prune_merge(std::move(ws), config);
    if (ws.locations.size() != before) ws = detail::solve_working_weights(sample, k, std::move(ws), config);
    loglik = detail::log_lik(detail::fitted(sample, k, ws));
    trace.push_back(static_cast<double>(loglik));
  }

  KMonotoneModel model(k, detail::to_measure(ws));
  if (!cert) cert = certify(model, sample, config.tol_gradient);
  SolveResult result{model, *cert, 0, false, 0.0, 0.0, {}};
  result.outer_iterations = std::min(iter, config.max_outer_iters);
  result.converged = search_clean && cert->optimal;
  result.final_gradient_sup = static_cast<double>(sup);
  result.log_likelihood = log_likelihood(model, sample);
  result.log_likelihood_trace = std::move(trace);
  return result;
}

//! Exhaustive reference solver for n <= 3: every support of size m <= n on
//! an equispaced grid over (X_(1), 4 X_(n)] whose largest atom exceeds
//! X_(n), with optimal weights for each. Exponential cost; tests only.
inline SolveResult brute_force_oracle(const Sample& sample, int k, int grid_resolution) {
  check_order(k);
  if (sample.size() > 3) throw invalid_argument("brute_force_oracle is limited to n <= 3");
  if (grid_resolution < 2) throw invalid_argument("brute_force_oracle needs grid_resolution >= 2");
  using detail::real;
  const real lo = sample.min();
  const real hi = 4 * real(sample.max());
  std::vector<real> grid;
  for (int g = 1; g <= grid_resolution; ++g) grid.push_back(lo + (hi - lo) * g / grid_resolution);

  SolverConfig config;
  real best = -std::numeric_limits<real>::infinity();
  detail::WorkingSet best_ws;
  int evaluated = 0;
  const detail::Matrix full = detail::kernel_matrix(sample, k, grid);

  std::vector<std::size_t> idx;
  auto evaluate = [&]() {
    if (!(grid[idx.back()] > real(sample.max()))) return;
    detail::Matrix K(full.rows(), static_cast<Eigen::Index>(idx.size()));
    std::vector<real> locs;
    for (std::size_t c = 0; c < idx.size(); ++c) {
      K.col(static_cast<Eigen::Index>(c)) = full.col(static_cast<Eigen::Index>(idx[c]));
      locs.push_back(grid[idx[c]]);
    }
    const detail::Vector w = detail::solve_weights(K, detail::Vector(), real(1e-13), config.max_inner_iters);
    const real obj = detail::weights_objective(K, w);
    ++evaluated;
    if (obj > best) {
      best = obj;
      best_ws.locations = locs;
      best_ws.weights.assign(w.data(), w.data() + w.size());
    }
  };
  auto recurse = [&](auto&& self, std::size_t start, std::size_t depth) -> void {
    if (depth == 0) {
      evaluate();
      return;
    }
    for (std::size_t g = start; g < grid.size(); ++g) {
      idx.push_back(g);
      self(self, g + 1, depth - 1);
      idx.pop_back();
    }
  };
  for (std::size_t m = 1; m <= sample.size(); ++m) recurse(recurse, 0, m);

  best_ws = detail::prune_merge(std::move(best_ws), config);
  KMonotoneModel model(k, detail::to_measure(best_ws));
  Certificate cert = certify(model, sample, config.tol_gradient);
  SolveResult result{model, cert, 0, false, 0.0, 0.0, {}};
  result.outer_iterations = evaluated;
  result.converged = cert.optimal;
  result.final_gradient_sup = cert.gradient_sup;
  result.log_likelihood = log_likelihood(model, sample);
  result.log_likelihood_trace = {result.log_likelihood};
  return result;
}

} // namespace kmono
