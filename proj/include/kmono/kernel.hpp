#pragma once

// The k-monotone mixture model: the beta-type scale kernel
//
//   K(x | y) = k (y - x)_+^{k-1} / y^k,
//
// discrete mixing measures over the scale y, mixture density and CDF
// evaluation, and exact sampling.

#include "kmono/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace kmono {

//! Integer power by repeated squaring; works for any arithmetic-like Real.
template <typename Real>
Real ipow(Real base, int exponent) {
  Real result(1);
  while (exponent > 0) {
    if (exponent & 1) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

inline void check_order(int k) {
  if (k < 2) throw invalid_argument("k-monotone order must be >= 2, got " + std::to_string(k));
}

//! Kernel K(x|y). Exactly zero for x >= y.
template <typename Real = double>
Real kernel_eval(int k, Real y, Real x) {
  check_order(k);
  if (!(y > 0)) throw invalid_argument("kernel scale must be positive");
  if (x < 0) throw invalid_argument("kernel argument must be nonnegative");
  if (!(x < y)) return Real(0);
  // (k/y) * ((y-x)/y)^{k-1}: never forms y^k, so no overflow for large y.
  return (Real(k) / y) * ipow((y - x) / y, k - 1);
}

enum class ties { reject, allow };

//! Order statistics X_(1) <= ... <= X_(n) of positive observations.
//! Strictly increasing unless constructed with ties::allow.
class Sample {
public:
  Sample() = default;

  explicit Sample(std::vector<double> values, ties policy = ties::reject)
      : values_(std::move(values)) {
    if (values_.empty()) throw invalid_argument("sample must contain at least one observation");
    for (double v : values_) {
      if (!std::isfinite(v) || !(v > 0)) throw invalid_argument("observations must be finite and positive");
    }
    std::sort(values_.begin(), values_.end());
    for (std::size_t i = 1; i < values_.size(); ++i) {
      if (values_[i] == values_[i - 1]) {
        if (policy == ties::reject)
          throw tied_sample_error("sample contains tied observations at value " + std::to_string(values_[i]));
        distinct_ = false;
      }
    }
  }

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }
  bool distinct() const { return distinct_; }

  Sample scaled(double c) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= c;
    return Sample(std::move(v), distinct_ ? ties::reject : ties::allow);
  }

private:
  std::vector<double> values_;
  bool distinct_ = true;
};

struct Atom {
  double location;
  double weight;

  friend bool operator==(const Atom&, const Atom&) = default;
};

//! Discrete probability measure on (0, inf). Atoms are kept sorted by
//! location.
class MixingMeasure {
public:
  static constexpr double default_sum_tolerance = 1e-12;

  MixingMeasure() = default;

  explicit MixingMeasure(std::vector<Atom> atoms, double sum_tolerance = default_sum_tolerance)
      : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw invalid_argument("mixing measure needs at least one atom");
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });
    double total = 0.0;
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
      const Atom& a = atoms_[j];
      if (!std::isfinite(a.location) || !(a.location > 0))
        throw invalid_argument("atom locations must be finite and positive");
      if (!std::isfinite(a.weight) || a.weight < 0) throw invalid_argument("atom weights must be nonnegative");
      if (j > 0 && atoms_[j - 1].location == a.location)
        throw invalid_argument("atom locations must be distinct");
      total += a.weight;
    }
    if (std::abs(total - 1.0) > sum_tolerance)
      throw invalid_argument("atom weights must sum to 1 (got " + std::to_string(total) + ")");
  }

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  const Atom& operator[](std::size_t j) const { return atoms_[j]; }
  double max_location() const { return atoms_.back().location; }

  std::vector<double> locations() const {
    std::vector<double> out;
    out.reserve(atoms_.size());
    for (const Atom& a : atoms_) out.push_back(a.location);
    return out;
  }

  std::vector<double> weights() const {
    std::vector<double> out;
    out.reserve(atoms_.size());
    for (const Atom& a : atoms_) out.push_back(a.weight);
    return out;
  }

  friend bool operator==(const MixingMeasure&, const MixingMeasure&) = default;

private:
  std::vector<Atom> atoms_;
};

class KMonotoneModel {
public:
  KMonotoneModel(int k, MixingMeasure mixing) : k_(k), mixing_(std::move(mixing)) {
    check_order(k_);
    if (mixing_.size() == 0) throw invalid_argument("model needs a nonempty mixing measure");
  }

  int k() const { return k_; }
  const MixingMeasure& mixing() const { return mixing_; }

private:
  int k_;
  MixingMeasure mixing_;
};

//! Mixture density f(x) = sum_j a_j K(x | Y_j).
template <typename Real = double>
Real density_eval(const KMonotoneModel& model, Real x) {
  if (x < 0) throw invalid_argument("density argument must be nonnegative");
  Real f(0);
  for (const Atom& a : model.mixing().atoms()) {
    if (a.weight == 0) continue;
    f += Real(a.weight) * kernel_eval<Real>(model.k(), Real(a.location), x);
  }
  return f;
}

//! Closed-form CDF: int_0^x K(t|y) dt = 1 - (1 - min(x,y)/y)^k.
inline double density_cdf(const KMonotoneModel& model, double x) {
  if (x < 0) throw invalid_argument("CDF argument must be nonnegative");
  double F = 0.0;
  for (const Atom& a : model.mixing().atoms()) {
    const double y = a.location;
    const double tail = x >= y ? 0.0 : ipow((y - x) / y, model.k());
    F += a.weight * (1.0 - tail);
  }
  return std::clamp(F, 0.0, 1.0);
}

//! Draws n observations: Y from the mixing measure, then X = Y (1 - U^{1/k}).
//! Colliding draws are redrawn so the returned sample is strictly increasing.
inline Sample sample_from(const KMonotoneModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw invalid_argument("sample size must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& atoms = model.mixing().atoms();
  std::vector<double> cumulative;
  cumulative.reserve(atoms.size());
  double acc = 0.0;
  for (const Atom& a : atoms) cumulative.push_back(acc += a.weight);

  const double inv_k = 1.0 / model.k();
  auto draw = [&]() {
    for (;;) {
      const double pick = unit(rng) * acc;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
      const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), atoms.size() - 1);
      const double u = 1.0 - unit(rng); // (0, 1]
      const double x = atoms[j].location * (1.0 - std::pow(u, inv_k));
      if (x > 0) return x;
    }
  };

  std::vector<double> values(n);
  for (double& v : values) v = draw();
  std::sort(values.begin(), values.end());
  for (;;) {
    bool collided = false;
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i] == values[i - 1]) {
        values[i] = draw();
        collided = true;
      }
    }
    if (!collided) break;
    std::sort(values.begin(), values.end());
  }
  return Sample(std::move(values));
}

} // namespace kmono
