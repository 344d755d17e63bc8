#pragma once

#include <stdexcept>
#include <string>

namespace kmono {

//! Bad argument to a library call (wrong k, nonpositive location, ...).
class invalid_argument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

//! The observations contain exact duplicates and ties were not allowed.
class tied_sample_error : public invalid_argument {
public:
  using invalid_argument::invalid_argument;
};

//! The candidate measure gives zero density at some observation, so the
//! log-likelihood is -inf and no support plane exists.
class not_certifiable_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! Every location of a weight subproblem lies at or below the largest
//! observation.
class infeasible_support_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class empty_measure_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! A polynomial piece vanishes identically on a subinterval.
class infinite_zeros_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace kmono
