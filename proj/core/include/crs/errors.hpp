#pragma once

#include <stdexcept>
#include <string>

namespace crs {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A requested statistic does not exist yet (e.g. fractions of an empty state).
class EmptyStateError : public Error {
public:
  using Error::Error;
};

// A policy was asked for a decision before every cell had the replications
// its statistics require.
class InsufficientInitializationError : public Error {
public:
  using Error::Error;
};

// A rate-function quantity was requested for a pair with a zero fraction.
class DegenerateAllocationError : public Error {
public:
  using Error::Error;
};

// Declared ground truth violates the unique-best assumption.
class GroundTruthError : public Error {
public:
  GroundTruthError(const std::string& what, int context)
      : Error(what), context_index(context) {}
  int context_index = -1;
};

// Invalid experiment configuration; message names the offending field.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Trace sets that cannot be aggregated together.
class AggregationError : public Error {
public:
  using Error::Error;
};

// A slope fit window contains saturated (0 or 1) PFS estimates.
class SaturationError : public Error {
public:
  using Error::Error;
};

// The fixed-point solver hit its iteration cap; carries the last residual.
class SolveError : public Error {
public:
  SolveError(const std::string& what, double residual)
      : Error(what), last_residual(residual) {}
  double last_residual = 0.0;
};

}  // namespace crs
