#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bgc {

// Errors split into two families so front-ends can map them to distinct
// exit codes: bad inputs (validation) versus failures of the numerics.
enum class ErrorFamily { Validation, Numerical };

class Error : public std::runtime_error {
public:
  Error(ErrorFamily family, const std::string& what)
      : std::runtime_error(what), family_(family) {}

  ErrorFamily family() const noexcept { return family_; }

private:
  ErrorFamily family_;
};

class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorFamily::Validation, what) {}
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorFamily::Numerical, what) {}
};

/// Malformed tensor file; carries the byte offset where parsing failed.
class FormatError : public ValidationError {
public:
  FormatError(const std::string& what, std::uint64_t offset)
      : ValidationError("format error at byte " + std::to_string(offset) +
                        ": " + what),
        detail_(what),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

private:
  std::string detail_;
  std::uint64_t offset_;
};

struct ShapeError : ValidationError {
  explicit ShapeError(const std::string& w) : ValidationError("shape error: " + w) {}
};

struct InputError : ValidationError {
  explicit InputError(const std::string& w) : ValidationError("input error: " + w) {}
};

struct ManifestError : ValidationError {
  explicit ManifestError(const std::string& w)
      : ValidationError("manifest error: " + w) {}
};

struct ContextError : ValidationError {
  explicit ContextError(const std::string& w)
      : ValidationError("context error: " + w) {}
};

struct InsufficientDataError : ValidationError {
  explicit InsufficientDataError(const std::string& w)
      : ValidationError("insufficient data: " + w) {}
};

struct SpecError : ValidationError {
  explicit SpecError(const std::string& w) : ValidationError("spec error: " + w) {}
};

struct BenchmarkError : ValidationError {
  explicit BenchmarkError(const std::string& w)
      : ValidationError("benchmark error: " + w) {}
};

class DegenerateConcept : public NumericalError {
public:
  explicit DegenerateConcept(const std::string& concept_name)
      : NumericalError("degenerate concept '" + concept_name +
                       "': clamped centroid is all zero"),
        concept_(concept_name) {}

  const std::string& concept_name() const noexcept { return concept_; }

private:
  std::string concept_;
};

class DivergenceError : public NumericalError {
public:
  explicit DivergenceError(int epoch)
      : NumericalError("training diverged: non-finite loss at epoch " +
                       std::to_string(epoch)),
        epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

private:
  int epoch_;
};

struct GeometryError : NumericalError {
  explicit GeometryError(const std::string& w)
      : NumericalError("geometry error: " + w) {}
};

struct DegenerateEvidence : NumericalError {
  explicit DegenerateEvidence(const std::string& w)
      : NumericalError("degenerate evidence: " + w) {}
};

struct UndefinedCorrelation : NumericalError {
  explicit UndefinedCorrelation(const std::string& w)
      : NumericalError("undefined correlation: " + w) {}
};

struct SingularError : NumericalError {
  explicit SingularError(const std::string& w)
      : NumericalError("singular regression: " + w) {}
};

}  // namespace bgc
