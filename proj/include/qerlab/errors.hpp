#pragma once

#include <stdexcept>
#include <string>

namespace qerlab {

// Argument outside its admissible interval (arclength, mode index, ...).
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Mathematical domain violation, e.g. |sigma| > 1 in a lift.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Point not on the curve, curve not embedded, clearance violated, ...
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature or root refinement did not reach the requested tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A billiard trajectory hit a corner / junction; the sample must be discarded.
class TrajectoryAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A pipeline stage was invoked before the stage producing its inputs.
class DependencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qerlab
