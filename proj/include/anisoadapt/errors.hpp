#ifndef ANISOADAPT_ERRORS_HPP
#define ANISOADAPT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace aniso {

// Base class for all toolkit failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file (mesh, metric, nodal field).
struct ParseError : Error {
  int line = -1;
  ParseError(const std::string& what, int line_no = -1)
      : Error(line_no >= 0 ? what + " (line " + std::to_string(line_no) + ")" : what),
        line(line_no) {}
};

// Inconsistent configuration: missing coefficients, bad tags, bad options.
struct ConfigError : Error {
  using Error::Error;
};

// Broken mesh topology or geometry that an operation cannot work around.
struct MeshError : Error {
  using Error::Error;
};

// Linear algebra failure (non-SPD pivot, iteration that cannot reach its
// tolerance even through the direct fallback).
struct SolverError : Error {
  double residual = 0.0;
  explicit SolverError(const std::string& what, double res = 0.0)
      : Error(what), residual(res) {}
};

}  // namespace aniso

#endif
