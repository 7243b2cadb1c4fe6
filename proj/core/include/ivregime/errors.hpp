#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ivregime {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-domain input: a bad model document, dataset, or argument.
/// `path()` names the offending location (JSON pointer, "line N", or a field name).
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Mismatched lengths or out-of-range indices.
class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A dataset row that cannot be parsed.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line), what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A parsed value outside its domain (e.g. an instrument value other than +-1).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyDatasetError : public ValidationError {
 public:
  EmptyDatasetError() : ValidationError("", "dataset has no rows") {}
};

class NonBinaryOutcome : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A sensitivity perturbation that would push a probability outside [0,1].
class InvalidPerturbation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Failures of the numerical procedures on otherwise well-formed input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Instrument strength |delta(l)| below threshold in some cell.
class WeakInstrument : public NumericalError {
 public:
  WeakInstrument(std::size_t cell, double delta)
      : NumericalError("weak instrument in cell " + std::to_string(cell) +
                       " (delta=" + std::to_string(delta) + ")"),
        cell_(cell),
        delta_(delta) {}
  std::size_t cell() const noexcept { return cell_; }
  double delta() const noexcept { return delta_; }

 private:
  std::size_t cell_;
  double delta_;
};

/// A cell with too few (or no) rows in one instrument arm.
class MissingArm : public NumericalError {
 public:
  MissingArm(std::size_t cell, int z)
      : NumericalError("cell " + std::to_string(cell) + " lacks rows with z=" +
                       std::to_string(z)),
        cell_(cell),
        z_(z) {}
  std::size_t cell() const noexcept { return cell_; }
  int z() const noexcept { return z_; }

 private:
  std::size_t cell_;
  int z_;
};

/// Observed frequencies incompatible with any distribution of response types.
class InfeasibleObservables : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace ivregime
